"""Grid geometry, discrete operators, reductions."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import grid_for_dim, smooth_field
from taxisim import (
    Field,
    GridSpec,
    VectorField,
    gradient,
    integrate,
    laplacian,
    lp_norm,
    min_value,
    sup_norm,
    taxis_divergence,
)


class TestGridSpec:
    def test_derived_quantities(self):
        g = GridSpec((2.0, 3.0), (4, 6))
        assert g.dim == 2
        assert g.spacing == (0.5, 0.5)
        assert g.volume_element == 0.25
        assert g.domain_measure == 6.0
        assert g.num_cells == 24

    def test_cell_centers(self):
        g = GridSpec((1.0,), (4,))
        assert np.allclose(g.cell_centers(0), [0.125, 0.375, 0.625, 0.875])

    @pytest.mark.parametrize(
        "extent,cells",
        [((1.0,), (1,)), ((0.0,), (4,)), ((-1.0,), (4,)), ((1.0, 1.0), (4,)), ((1.0,) * 4, (4,) * 4)],
    )
    def test_rejects_bad_geometry(self, extent, cells):
        with pytest.raises(ValueError):
            GridSpec(extent, cells)

    def test_field_length_must_match(self):
        g = GridSpec((1.0,), (4,))
        with pytest.raises(ValueError):
            Field(g, [1.0, 2.0])

    def test_vector_field_needs_shared_grid(self):
        g = GridSpec((1.0, 1.0), (4, 4))
        other = GridSpec((2.0, 1.0), (4, 4))
        with pytest.raises(ValueError):
            VectorField((Field.zeros(g), Field.zeros(other)))


class TestLaplacian:
    def test_constant_is_zero(self):
        g = GridSpec((2.0, 1.0), (8, 6))
        out = laplacian(Field.full(g, 3.7))
        assert np.array_equal(out.values, np.zeros(g.num_cells))

    def test_three_point_mirror_stencil(self):
        # h = 1; boundary cells use their own value as ghost.
        g = GridSpec((3.0,), (3,))
        out = laplacian(Field(g, [1.0, 2.0, 4.0]))
        assert np.allclose(out.values, [1.0, 1.0, -2.0], rtol=0, atol=0)

    @pytest.mark.parametrize("dim", [1, 2])
    def test_cosine_eigenfunction_convergence(self, dim):
        # cos(pi x / L) satisfies the mirror boundary condition exactly, so the
        # error against -(pi/L)^2 f must shrink like h^2 under refinement.
        length = 1.0
        errors = []
        for n in (16, 32):
            g = GridSpec((length,) * dim, (n,) * dim)
            x = g.meshgrid()[0]
            f = Field.from_nd(g, np.cos(np.pi * x / length))
            exact = -((np.pi / length) ** 2) * f.values
            errors.append(np.max(np.abs(laplacian(f).values - exact)))
        assert errors[1] < errors[0] / 3.5

    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_volume_sum_is_zero(self, dim):
        rng = np.random.default_rng(11 + dim)
        g = grid_for_dim(dim)
        for _ in range(10):
            f = smooth_field(g, rng)
            total = integrate(laplacian(f))
            scale = integrate(Field(g, np.abs(laplacian(f).values))) + 1e-300
            assert abs(total) <= 1e-12 * scale

    def test_linearity(self):
        rng = np.random.default_rng(7)
        g = GridSpec((1.0, 2.0), (8, 8))
        f1, f2 = smooth_field(g, rng), smooth_field(g, rng)
        combo = laplacian(Field(g, 2.0 * f1.values - 3.0 * f2.values))
        parts = 2.0 * laplacian(f1).values - 3.0 * laplacian(f2).values
        assert np.allclose(combo.values, parts, rtol=1e-12, atol=1e-12)


class TestGradient:
    def test_constant_is_zero(self):
        g = GridSpec((1.0, 1.0, 1.0), (4, 4, 4))
        out = gradient(Field.full(g, -2.5))
        for comp in out.components:
            assert np.array_equal(comp.values, np.zeros(g.num_cells))

    def test_mirror_ghost_hand_values(self):
        g = GridSpec((3.0,), (3,))
        out = gradient(Field(g, [1.0, 2.0, 4.0]))
        assert np.allclose(out.components[0].values, [0.5, 1.5, 1.0], rtol=0, atol=0)

    def test_interior_ramp_slope(self):
        g = GridSpec((2.0,), (64,))
        x = g.cell_centers(0)
        out = gradient(Field(g, 3.0 * x))
        # Exact in the interior; boundary cells hold half the slope by mirroring.
        assert np.allclose(out.components[0].values[1:-1], 3.0, rtol=1e-13)
        assert np.allclose(out.components[0].values[[0, -1]], 1.5, rtol=1e-13)

    def test_magnitude(self):
        g = GridSpec((1.0, 1.0), (4, 4))
        vf = VectorField((Field.full(g, 3.0), Field.full(g, 4.0)))
        assert np.allclose(vf.magnitude().values, 5.0)

    def test_linearity(self):
        rng = np.random.default_rng(19)
        g = GridSpec((1.0,), (16,))
        f1, f2 = smooth_field(g, rng), smooth_field(g, rng)
        combo = gradient(Field(g, 1.5 * f1.values + 2.0 * f2.values))
        for axis in range(g.dim):
            parts = 1.5 * gradient(f1).components[axis].values
            parts += 2.0 * gradient(f2).components[axis].values
            assert np.allclose(combo.components[axis].values, parts, rtol=1e-12, atol=1e-13)


class TestTaxisDivergence:
    def test_constant_potential_is_exactly_zero(self):
        rng = np.random.default_rng(3)
        g = GridSpec((1.0, 1.0), (6, 6))
        carrier = smooth_field(g, rng, nonneg=True)
        out = taxis_divergence(carrier, Field.full(g, 4.2), 2.0)
        assert np.array_equal(out.values, np.zeros(g.num_cells))

    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_constant_carrier_matches_laplacian(self, dim):
        rng = np.random.default_rng(23 + dim)
        g = grid_for_dim(dim, n=8)
        pot = smooth_field(g, rng)
        coeff = 1.7
        const = 2.5
        out = taxis_divergence(Field.full(g, const), pot, coeff)
        ref = const * coeff * laplacian(pot).values
        scale = np.max(np.abs(ref)) + 1e-300
        assert np.max(np.abs(out.values - ref)) <= 1e-13 * scale

    def test_upwind_takes_upstream_cell(self):
        # h = 1, rising potential: face velocity q = 1 > 0, upstream is the
        # left cell (value 2), flux 2, divergence [2, -2].
        g = GridSpec((2.0,), (2,))
        carrier = Field(g, [2.0, 0.0])
        out = taxis_divergence(carrier, Field(g, [0.0, 1.0]), 1.0)
        assert np.allclose(out.values, [2.0, -2.0], rtol=0, atol=0)
        # Falling potential: q = -1 < 0, upstream is the right cell (value 0).
        out = taxis_divergence(carrier, Field(g, [1.0, 0.0]), 1.0)
        assert np.array_equal(out.values, [0.0, 0.0])

    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_volume_sum_telescopes_to_zero(self, dim):
        rng = np.random.default_rng(5 * dim + 1)
        g = grid_for_dim(dim)
        for _ in range(10):
            carrier = smooth_field(g, rng, nonneg=True)
            pot = smooth_field(g, rng)
            out = taxis_divergence(carrier, pot, 1.3)
            scale = integrate(Field(g, np.abs(out.values))) + 1e-300
            assert abs(integrate(out)) <= 1e-12 * scale

    def test_linear_in_carrier_for_fixed_potential(self):
        rng = np.random.default_rng(31)
        g = GridSpec((1.0,), (16,))
        pot = smooth_field(g, rng)
        c1 = smooth_field(g, rng, nonneg=True)
        c2 = smooth_field(g, rng, nonneg=True)
        combo = taxis_divergence(Field(g, 2.0 * c1.values + 0.5 * c2.values), pot, 1.0)
        parts = 2.0 * taxis_divergence(c1, pot, 1.0).values
        parts += 0.5 * taxis_divergence(c2, pot, 1.0).values
        assert np.allclose(combo.values, parts, rtol=1e-12, atol=1e-14)

    def test_grid_mismatch_rejected(self):
        a = GridSpec((1.0,), (4,))
        b = GridSpec((2.0,), (4,))
        with pytest.raises(ValueError):
            taxis_divergence(Field.zeros(a), Field.zeros(b), 1.0)


class TestReductions:
    def test_integrate_constant_gives_measure(self):
        g = GridSpec((2.0, 3.0), (5, 7))
        assert integrate(Field.full(g, 1.0)) == pytest.approx(6.0, rel=1e-14)

    def test_integrate_hand_value(self):
        g = GridSpec((3.0,), (3,))
        assert integrate(Field(g, [1.0, 2.0, 4.0])) == 7.0

    def test_integrate_nonnegative(self):
        rng = np.random.default_rng(2)
        g = GridSpec((1.0, 1.0), (6, 6))
        f = smooth_field(g, rng, nonneg=True)
        assert integrate(f) >= 0.0

    def test_integrate_is_bitwise_deterministic(self):
        rng = np.random.default_rng(9)
        g = GridSpec((1.0,), (1024,))
        f = Field(g, rng.uniform(size=g.num_cells))
        assert integrate(f) == integrate(f.copy())

    def test_lp_norm_hand_value(self):
        g = GridSpec((2.0,), (2,))
        f = Field(g, [3.0, -4.0])
        assert lp_norm(f, 2.0) == pytest.approx(5.0, rel=1e-15)
        assert sup_norm(f) == 4.0
        assert min_value(f) == -4.0

    def test_lp_norm_constant(self):
        g = GridSpec((4.0,), (8,))
        for p in (1.0, 2.0, 3.5):
            assert lp_norm(Field.full(g, -2.0), p) == pytest.approx(
                2.0 * 4.0 ** (1.0 / p), rel=1e-13
            )

    def test_lp_requires_p_at_least_one(self):
        g = GridSpec((1.0,), (4,))
        with pytest.raises(ValueError):
            lp_norm(Field.zeros(g), 0.5)

    def test_holder_bound(self):
        rng = np.random.default_rng(17)
        g = GridSpec((1.5, 0.5), (8, 8))
        for _ in range(10):
            f = smooth_field(g, rng)
            for p in (1.0, 2.0, 4.0):
                bound = sup_norm(f) * g.domain_measure ** (1.0 / p)
                assert lp_norm(f, p) <= bound * (1.0 + 1e-12)
