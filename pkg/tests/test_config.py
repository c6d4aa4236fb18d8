"""Configuration parsing, validation messages, canonical echo."""

from __future__ import annotations

import math

import pytest

from taxisim import ParseError, ValidationError, parse_config, render_config

MINIMAL = """
[grid] dim=1 extent=2 cells=16
[model] chi=1
[solver] T_end=1
"""


class TestParsing:
    def test_model_defaults(self):
        cfg = parse_config("[grid] dim=1 extent=1 cells=8\n[model] chi=1 mu=10 xi=1\n[solver] T_end=1")
        m = cfg.model
        assert (m.chi, m.xi, m.mu, m.eta, m.tau) == (1.0, 1.0, 10.0, 0.0, 1)

    def test_grid_spacing_example(self):
        cfg = parse_config(
            "[grid] dim=3 extent=1,1,1 cells=32,32,32\n[model] chi=1\n[solver] T_end=1"
        )
        assert cfg.grid.spacing == (1.0 / 32, 1.0 / 32, 1.0 / 32)

    def test_spaces_around_equals_and_comments(self):
        cfg = parse_config(
            """
            [grid]
            dim = 1          # one dimensional
            extent = 2.5
            cells = 10
            [model] chi = 0.5
            [solver] T_end = 2.0
            """
        )
        assert cfg.grid.extent == (2.5,)
        assert cfg.model.chi == 0.5

    def test_solver_defaults(self):
        cfg = parse_config(MINIMAL)
        s = cfg.solver
        assert s.output_every == pytest.approx(1.0 / 50)
        assert s.cfl_safety == 0.4
        assert s.dt_max == math.inf
        assert s.blowup_threshold == 1e6
        assert s.elliptic_tol == 1e-10
        assert s.anchor_time == 0.0
        assert s.time_scheme == "explicit"

    def test_outputs_defaults(self):
        cfg = parse_config(MINIMAL, base_dir="/tmp/somewhere")
        assert cfg.outputs.p_values == (2.0,)
        assert cfg.outputs.snapshots is False
        assert cfg.outputs.directory.is_absolute()
        assert str(cfg.outputs.directory).endswith("somewhere/out")

    def test_sweep_section(self):
        cfg = parse_config(
            MINIMAL + "[sweep] mode=fix_mu_vary_chi fixed_value=10 theta_values=0.05,0.1,0.2"
        )
        assert cfg.sweep is not None
        assert cfg.sweep.theta_values == (0.05, 0.1, 0.2)
        assert cfg.sweep.repetitions == 1


class TestValidation:
    def test_negative_chi_names_key_and_constraint(self):
        with pytest.raises(ValidationError, match=r"model\.chi must be > 0"):
            parse_config("[grid] dim=1 extent=1 cells=8\n[model] chi=-1\n[solver] T_end=1")

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError, match=r"model\.sigma"):
            parse_config("[grid] dim=1 extent=1 cells=8\n[model] chi=1 sigma=2\n[solver] T_end=1")

    def test_unknown_section_rejected(self):
        with pytest.raises(ValidationError, match=r"\[physics\]"):
            parse_config("[physics] c=3e8")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ValidationError, match="more than once"):
            parse_config("[model] chi=1 chi=2")

    def test_missing_required_key(self):
        with pytest.raises(ValidationError, match=r"solver\.T_end is required"):
            parse_config("[grid] dim=1 extent=1 cells=8\n[model] chi=1\n[solver] cfl_safety=0.5")

    def test_missing_required_section(self):
        with pytest.raises(ValidationError, match=r"\[model\] section is required"):
            parse_config("[grid] dim=1 extent=1 cells=8\n[solver] T_end=1")

    def test_parse_error_carries_line_number(self):
        with pytest.raises(ParseError, match="line 3"):
            parse_config("[grid] dim=1 extent=1 cells=8\n[model] chi=1\nnonsense-token\n")

    def test_assignment_before_section(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_config("chi=1")

    def test_extent_arity_checked(self):
        with pytest.raises(ValidationError, match=r"grid\.extent must have 2 entries"):
            parse_config("[grid] dim=2 extent=1 cells=8,8\n[model] chi=1\n[solver] T_end=1")

    def test_center_arity_checked(self):
        with pytest.raises(ValidationError, match=r"scenario\.center"):
            parse_config(MINIMAL + "[scenario] name=gaussian-bump center=0.5,0.5")

    def test_bad_number_reports_key(self):
        with pytest.raises(ValidationError, match=r"solver\.T_end must be a number"):
            parse_config("[grid] dim=1 extent=1 cells=8\n[model] chi=1\n[solver] T_end=soon")

    def test_cadence_alias_must_agree(self):
        with pytest.raises(ValidationError, match=r"outputs\.cadence"):
            parse_config(MINIMAL + "[outputs] cadence=0.5")
        cfg = parse_config(
            "[grid] dim=1 extent=2 cells=16\n[model] chi=1\n[solver] T_end=1 output_every=0.5\n"
            + "[outputs] cadence=0.5"
        )
        assert cfg.solver.output_every == 0.5

    def test_bad_time_scheme(self):
        with pytest.raises(ValidationError, match=r"solver\.time_scheme"):
            parse_config("[grid] dim=1 extent=1 cells=8\n[model] chi=1\n[solver] T_end=1 time_scheme=magic")


class TestEcho:
    def test_echo_round_trip_is_idempotent(self, tmp_path):
        text = (
            "[grid] dim=2 extent=1.5,2 cells=12,16\n"
            "[model] chi=0.7 xi=0.2 mu=3 eta=0.1 tau=1\n"
            "[solver] T_end=2 output_every=0.25 cfl_safety=0.3 dt_max=0.001\n"
            "[scenario] name=gaussian-bump amplitude=0.4 sigma=0.33 wbar=0.2 seed=99\n"
            "[outputs] dir=results p_values=1,2,4 snapshots=true\n"
            "[sweep] mode=fix_chi_vary_mu fixed_value=2 theta_values=0.1,0.2 repetitions=2\n"
        )
        cfg = parse_config(text, base_dir=tmp_path)
        echo = render_config(cfg)
        cfg2 = parse_config(echo, base_dir=tmp_path)
        assert cfg2 == cfg
        assert render_config(cfg2) == echo

    def test_echo_parses_without_base_dir_dependence(self, tmp_path):
        # The echo carries an absolute output directory, so re-parsing it from
        # any base directory yields the same configuration.
        cfg = parse_config(MINIMAL + "[outputs] dir=out", base_dir=tmp_path)
        echo = render_config(cfg)
        cfg2 = parse_config(echo, base_dir="/completely/else")
        assert cfg2 == cfg
