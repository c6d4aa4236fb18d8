"""Parameter sweeps over the taxis-to-damping ratio theta = chi / mu.

Each sweep point runs one independent simulation per repetition, classifies
its boundedness, and the collected table yields an empirical bracket
(theta_lo, theta_hi) around the boundedness threshold when the outcomes are
monotone in theta. Runs are embarrassingly parallel; results are returned in
plan order regardless of scheduling, and seeds derive from the plan seed and
the point indices, so a sweep is deterministic end to end.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from .diagnostics import BoundednessVerdict, classify
from .grid import GridSpec
from .model import ModelParams, ScenarioSpec
from .stepper import RunOutcome, SolverConfig, run

__all__ = [
    "SweepPlan",
    "SweepResult",
    "run_sweep",
    "estimate_threshold",
    "check_pe_condition",
    "params_for_theta",
]

WORKERS_ENV_VAR = "TAXISIM_WORKERS"
SWEEP_MODES = ("fix_mu_vary_chi", "fix_chi_vary_mu")


@dataclass(frozen=True)
class SweepPlan:
    """One pass over a sorted list of theta values.

    fix_mu_vary_chi holds mu = fixed_value and sets chi = theta * mu;
    fix_chi_vary_mu holds chi = fixed_value and sets mu = chi / theta.
    """

    mode: str
    fixed_value: float
    theta_values: tuple[float, ...]
    base_model: ModelParams
    base_solver: SolverConfig
    scenario: ScenarioSpec
    grid: GridSpec
    repetitions: int = 1

    def __post_init__(self) -> None:
        if self.mode not in SWEEP_MODES:
            raise ValueError(f"mode must be one of {SWEEP_MODES}")
        if not self.fixed_value > 0.0:
            raise ValueError("fixed_value must be > 0")
        thetas = tuple(float(t) for t in self.theta_values)
        object.__setattr__(self, "theta_values", thetas)
        if not thetas:
            raise ValueError("theta_values must be nonempty")
        if any(t <= 0.0 for t in thetas):
            raise ValueError("theta values must be > 0")
        if any(b <= a for a, b in zip(thetas, thetas[1:])):
            raise ValueError("theta values must be strictly increasing")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")


@dataclass
class SweepResult:
    theta: float
    chi: float
    mu: float
    repetition: int
    verdict: BoundednessVerdict
    max_sup_u: float
    wall_time: float
    pe_condition: bool
    outcome: RunOutcome | None = None


def params_for_theta(plan: SweepPlan, theta: float) -> ModelParams:
    if plan.mode == "fix_mu_vary_chi":
        mu = plan.fixed_value
        chi = theta * mu
    else:
        chi = plan.fixed_value
        mu = chi / theta
    return replace(plan.base_model, chi=chi, mu=mu)


def check_pe_condition(params: ModelParams, dim: int) -> bool:
    """Sufficient boundedness condition for the slaved-signal (tau = 0) regime:
    mu > ((dim - 2)_+ / dim) * chi."""
    if dim not in (1, 2, 3):
        raise ValueError("dim must be 1, 2 or 3")
    return params.mu > (max(dim - 2, 0) / dim) * params.chi


def _derived_seed(base: int, theta_index: int, repetition: int) -> int:
    return int(base) + 7919 * theta_index + repetition


def _execute_point(
    plan: SweepPlan, theta_index: int, repetition: int, keep_outcome: bool
) -> SweepResult:
    theta = plan.theta_values[theta_index]
    model = params_for_theta(plan, theta)
    scenario = plan.scenario.with_seed(
        _derived_seed(plan.scenario.seed, theta_index, repetition)
    )
    pe = check_pe_condition(model, plan.grid.dim)
    tic = time.perf_counter()
    try:
        init = scenario.build(plan.grid)
        outcome = run(init, model, plan.base_solver)
        if outcome.status == "cfl_failed":
            verdict = BoundednessVerdict("inconclusive", outcome.max_sup_u, outcome.t_of_max_sup_u)
        else:
            verdict = classify(outcome.records, plan.base_solver)
        max_sup = outcome.max_sup_u
    except Exception:
        # A failed point must not abort the sweep.
        outcome = None
        verdict = BoundednessVerdict("inconclusive", math.nan, math.nan)
        max_sup = math.nan
    wall = time.perf_counter() - tic
    return SweepResult(
        theta=theta,
        chi=model.chi,
        mu=model.mu,
        repetition=repetition,
        verdict=verdict,
        max_sup_u=max_sup,
        wall_time=wall,
        pe_condition=pe,
        outcome=outcome if keep_outcome else None,
    )


def run_sweep(
    plan: SweepPlan, workers: int | None = None, keep_outcomes: bool = False
) -> list[SweepResult]:
    """Run every (theta, repetition) point and return results in plan order."""
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV_VAR, "1"))
    if workers < 1:
        raise ValueError("workers must be >= 1")
    tasks = [
        (i, rep)
        for i in range(len(plan.theta_values))
        for rep in range(plan.repetitions)
    ]
    if workers == 1:
        return [_execute_point(plan, i, rep, keep_outcomes) for i, rep in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_execute_point, plan, i, rep, keep_outcomes)
            for i, rep in tasks
        ]
        return [f.result() for f in futures]


def estimate_threshold(results: list[SweepResult]) -> tuple[float, float] | None:
    """Bracket the boundedness threshold from a sweep table.

    Returns (theta_lo, theta_hi) with theta_lo the largest theta whose
    repetitions all classified bounded and theta_hi the smallest theta with
    any blew_up or growing verdict, provided the outcomes are monotone in
    theta (no all-bounded theta above a non-bounded one). Growing and
    inconclusive verdicts count as not bounded. Otherwise returns None.
    """
    ordered = sorted(results, key=lambda r: (r.theta, r.repetition))
    groups: dict[float, list[SweepResult]] = {}
    for res in ordered:
        groups.setdefault(res.theta, []).append(res)

    theta_lo: float | None = None
    theta_hi: float | None = None
    seen_unbounded = False
    for theta in sorted(groups):
        cls = [r.verdict.classification for r in groups[theta]]
        all_bounded = all(c == "bounded" for c in cls)
        any_bad = any(c in ("blew_up", "growing") for c in cls)
        if all_bounded:
            if seen_unbounded:
                return None  # non-monotone
            theta_lo = theta
        else:
            seen_unbounded = True
            if any_bad and theta_hi is None:
                theta_hi = theta
    if theta_lo is None or theta_hi is None:
        return None
    return (theta_lo, theta_hi)
