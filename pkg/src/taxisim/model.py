"""Model coefficients, right-hand sides, initial data and the homogeneous oracle.

The simulated system couples a cell density u, a diffusible signal v produced
by the cells, and an immobile substrate w degraded by the signal:

    u_t = lap(u) - chi div(u grad v) - xi div(u grad w) + mu u (1 - u - w)
    tau v_t = lap(v) - v + u
    w_t = -v w + eta w (1 - u - w)

with zero-flux boundaries. eta = 0 disables substrate renewal; tau = 0 slaves
the signal to the cells through a screened Poisson solve.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grid import Field, GridSpec, laplacian, taxis_divergence

__all__ = [
    "ModelParams",
    "InitialData",
    "ScenarioSpec",
    "SCENARIO_NAMES",
    "rhs_u",
    "rhs_v",
    "rhs_w",
    "OdeTrajectory",
    "ode_reference",
]

ODE_DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the cell / signal / substrate system.

    chi scales attraction up signal gradients, xi attraction up substrate
    gradients, mu the logistic growth-competition rate, eta the substrate
    renewal rate (0 turns it off), and tau in {0, 1} the signal time constant.
    """

    chi: float
    xi: float = 0.0
    mu: float = 0.0
    eta: float = 0.0
    tau: int = 1

    def __post_init__(self) -> None:
        if not (np.isfinite(self.chi) and self.chi > 0.0):
            raise ValueError("chi must be > 0")
        if not (np.isfinite(self.xi) and self.xi >= 0.0):
            raise ValueError("xi must be >= 0")
        if not (np.isfinite(self.mu) and self.mu >= 0.0):
            raise ValueError("mu must be >= 0")
        if not (np.isfinite(self.eta) and self.eta >= 0.0):
            raise ValueError("eta must be >= 0")
        if self.tau not in (0, 1):
            raise ValueError("tau must be 0 or 1")

    def theta(self) -> float:
        """Taxis-to-damping ratio chi / mu, defined only for mu > 0."""
        if self.mu <= 0.0:
            raise ValueError("theta requires mu > 0")
        return self.chi / self.mu


@dataclass
class InitialData:
    """Nonnegative finite initial fields on a shared grid."""

    u0: Field
    v0: Field
    w0: Field

    def __post_init__(self) -> None:
        grid = self.u0.grid
        for name, f in (("u0", self.u0), ("v0", self.v0), ("w0", self.w0)):
            if f.grid != grid:
                raise ValueError("initial fields must share a grid")
            if not f.is_finite():
                raise ValueError(f"{name} must be finite")
            if np.min(f.values) < 0.0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def grid(self) -> GridSpec:
        return self.u0.grid


def rhs_u(u: Field, v: Field, w: Field, params: ModelParams) -> Field:
    """du/dt: diffusion, both taxis fluxes, and logistic competition."""
    out = laplacian(u).values
    out -= taxis_divergence(u, v, params.chi).values
    out -= taxis_divergence(u, w, params.xi).values
    if params.mu != 0.0:
        out += params.mu * u.values * (1.0 - u.values - w.values)
    return Field(u.grid, out)


def rhs_v(u: Field, v: Field, params: ModelParams) -> Field:
    """dv/dt for tau = 1: diffusion, decay, production by the cells."""
    out = laplacian(v).values
    out += u.values - v.values
    return Field(v.grid, out)


def rhs_w(u: Field, v: Field, w: Field, params: ModelParams) -> Field:
    """dw/dt: degradation by the signal plus optional logistic renewal."""
    out = -v.values * w.values
    if params.eta != 0.0:
        out += params.eta * w.values * (1.0 - u.values - w.values)
    return Field(w.grid, out)


SCENARIO_NAMES = ("steady", "constant", "gaussian-bump", "random-perturb")


@dataclass(frozen=True)
class ScenarioSpec:
    """Named initial-data generator and its parameters.

    steady          (u, v, w) = (1, 1, 0), the homogeneous coexistence state
    constant        (u, v, w) = (u0, v0, w0)
    gaussian-bump   u = 1 + A exp(-|x - x0|^2 / sigma^2), v = 1, w = wbar
    random-perturb  u, v = 1 + A * uniform(-1, 1) per cell (seeded), w = wbar
    """

    name: str = "steady"
    amplitude: float = 0.5
    sigma: float | None = None
    center: tuple[float, ...] | None = None
    wbar: float = 0.3
    seed: int = 1234
    u0: float = 1.0
    v0: float = 1.0
    w0: float = 0.0

    def __post_init__(self) -> None:
        if self.name not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario {self.name!r}")
        if self.amplitude < 0.0:
            raise ValueError("amplitude must be >= 0")
        if self.sigma is not None and self.sigma <= 0.0:
            raise ValueError("sigma must be > 0")
        if self.wbar < 0.0:
            raise ValueError("wbar must be >= 0")
        if min(self.u0, self.v0, self.w0) < 0.0:
            raise ValueError("constant initial values must be >= 0")

    def with_seed(self, seed: int) -> ScenarioSpec:
        return replace(self, seed=int(seed))

    def is_homogeneous(self) -> bool:
        return self.name in ("steady", "constant")

    def homogeneous_values(self) -> tuple[float, float, float]:
        if self.name == "steady":
            return (1.0, 1.0, 0.0)
        if self.name == "constant":
            return (self.u0, self.v0, self.w0)
        raise ValueError(f"scenario {self.name!r} is not spatially homogeneous")

    def build(self, grid: GridSpec) -> InitialData:
        if self.is_homogeneous():
            u0, v0, w0 = self.homogeneous_values()
            return InitialData(
                Field.full(grid, u0), Field.full(grid, v0), Field.full(grid, w0)
            )
        if self.name == "gaussian-bump":
            sigma = self.sigma if self.sigma is not None else min(grid.extent) / 8.0
            center = self.center
            if center is None:
                center = tuple(L / 2.0 for L in grid.extent)
            if len(center) != grid.dim:
                raise ValueError("center must have one entry per axis")
            mesh = grid.meshgrid()
            r2 = np.zeros(grid.cells)
            for x, c in zip(mesh, center):
                r2 += (x - c) ** 2
            u = 1.0 + self.amplitude * np.exp(-r2 / (sigma * sigma))
            return InitialData(
                Field.from_nd(grid, u),
                Field.full(grid, 1.0),
                Field.full(grid, self.wbar),
            )
        # random-perturb: seeded uniform noise around the coexistence state.
        rng = np.random.default_rng(self.seed)
        n = grid.num_cells
        u = 1.0 + self.amplitude * rng.uniform(-1.0, 1.0, size=n)
        v = 1.0 + self.amplitude * rng.uniform(-1.0, 1.0, size=n)
        return InitialData(
            Field(grid, u), Field(grid, v), Field.full(grid, self.wbar)
        )


@dataclass
class OdeTrajectory:
    """Sampled trajectory of the spatially homogeneous reduction."""

    times: np.ndarray
    states: np.ndarray  # rows (u, v, w)
    diverged: bool = False

    def value_at(self, t: float) -> np.ndarray:
        """State at the stored time closest to t."""
        i = int(np.argmin(np.abs(self.times - t)))
        return self.states[i]


def _rates_full(y: np.ndarray, p: ModelParams) -> np.ndarray:
    u, v, w = y
    return np.array(
        [
            p.mu * u * (1.0 - u - w),
            u - v,
            -v * w + p.eta * w * (1.0 - u - w),
        ]
    )


def _rates_slaved(y: np.ndarray, p: ModelParams) -> np.ndarray:
    # tau = 0: the signal equals the cell density algebraically.
    u, w = y
    return np.array(
        [
            p.mu * u * (1.0 - u - w),
            -u * w + p.eta * w * (1.0 - u - w),
        ]
    )


def ode_reference(
    params: ModelParams, y0: tuple[float, float, float], t_end: float, dt: float
) -> OdeTrajectory:
    """Classical 4th-order fixed-step integration of the homogeneous reduction.

        u' = mu u (1 - u - w),  tau v' = u - v,  w' = -v w + eta w (1 - u - w)

    For tau = 0 the signal is set to u algebraically each step. Integration
    stops early, with the trajectory flagged as diverged, as soon as any
    component exceeds 1e12 in magnitude.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    if t_end < 0.0:
        raise ValueError("t_end must be >= 0")
    if min(y0) < 0.0:
        raise ValueError("y0 must be componentwise nonnegative")

    slaved = params.tau == 0
    rates = _rates_slaved if slaved else _rates_full
    y = np.array([y0[0], y0[2]] if slaved else y0, dtype=float)

    def to_state(yy: np.ndarray) -> np.ndarray:
        if slaved:
            return np.array([yy[0], yy[0], yy[1]])
        return yy.copy()

    times = [0.0]
    states = [to_state(y)]
    if np.max(np.abs(y)) > ODE_DIVERGENCE_LIMIT:
        return OdeTrajectory(np.array(times), np.array(states), diverged=True)

    n_full = int(np.floor(t_end / dt + 1e-9))
    remainder = t_end - n_full * dt
    if remainder < 1e-12 * max(t_end, dt):
        remainder = 0.0
    step_sizes = [dt] * n_full + ([remainder] if remainder > 0.0 else [])

    t = 0.0
    for h in step_sizes:
        k1 = rates(y, params)
        k2 = rates(y + 0.5 * h * k1, params)
        k3 = rates(y + 0.5 * h * k2, params)
        k4 = rates(y + h * k3, params)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
        times.append(t)
        states.append(to_state(y))
        if not np.isfinite(y).all() or np.max(np.abs(y)) > ODE_DIVERGENCE_LIMIT:
            return OdeTrajectory(np.array(times), np.array(states), diverged=True)
    return OdeTrajectory(np.array(times), np.array(states), diverged=False)
