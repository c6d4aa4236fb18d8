"""Time integration with positivity safeguards and step-size control.

Each step advances the fields in a fixed order: the signal v first (explicit
Euler, an implicit-diffusion variant, or a screened Poisson solve when it is
slaved to the cells), then the substrate w, then the cells u by explicit Euler
with upwind transport. Trapezoidal accumulators carry the per-cell integrals
of v and grad v since the anchor snapshot; with eta = 0 the substrate is
evaluated directly from the representation w = w_anchor * exp(-Iv), which
keeps that identity exact to round-off for the whole run.

Steps that produce negativity beyond round-off are rejected and retried with
a halved dt (at most 10 halvings); runs terminate cleanly on divergence
(threshold crossing or non-finite values) instead of crashing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import diagnostics
from .grid import Field, GridSpec, VectorField, gradient, laplacian, sup_norm
from .model import InitialData, ModelParams, rhs_u

__all__ = [
    "CFLViolation",
    "Diverged",
    "NoConvergence",
    "SolverConfig",
    "Snapshot",
    "SimState",
    "RunOutcome",
    "take_snapshot",
    "initial_state",
    "stable_dt",
    "solve_elliptic",
    "step",
    "run",
]

_EPS_RATE = 1e-30
_MAX_HALVINGS = 10
_ROUNDOFF_CLAMP = 1e-13


class CFLViolation(RuntimeError):
    """A step kept producing real negativity after repeated dt halving."""


class Diverged(RuntimeError):
    """The state crossed the blow-up threshold or became non-finite."""

    def __init__(self, message: str, state: "SimState | None" = None) -> None:
        super().__init__(message)
        self.state = state


class NoConvergence(RuntimeError):
    """An iterative linear solve failed to reach its tolerance."""


class _RetryStep(Exception):
    """Internal: reject the attempted step and retry with a smaller dt."""


@dataclass(frozen=True)
class SolverConfig:
    """Run controls for a single simulation."""

    t_end: float
    output_every: float | None = None  # defaults to t_end / 50
    cfl_safety: float = 0.4
    dt_max: float = math.inf
    blowup_threshold: float = 1e6
    elliptic_tol: float = 1e-10
    elliptic_max_iter: int = 10000
    anchor_time: float = 0.0
    time_scheme: str = "explicit"

    def __post_init__(self) -> None:
        if not self.t_end > 0.0:
            raise ValueError("t_end must be > 0")
        if self.output_every is None:
            object.__setattr__(self, "output_every", self.t_end / 50.0)
        if not self.output_every > 0.0:
            raise ValueError("output_every must be > 0")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError("cfl_safety must be in (0, 1]")
        if not self.dt_max > 0.0:
            raise ValueError("dt_max must be > 0")
        if not self.blowup_threshold > 0.0:
            raise ValueError("blowup_threshold must be > 0")
        if not self.elliptic_tol > 0.0:
            raise ValueError("elliptic_tol must be > 0")
        if self.elliptic_max_iter < 0:
            raise ValueError("elliptic_max_iter must be >= 0")
        if not 0.0 <= self.anchor_time < self.t_end:
            raise ValueError("anchor_time must be in [0, t_end)")
        if self.time_scheme not in ("explicit", "imex-diffusion"):
            raise ValueError("time_scheme must be 'explicit' or 'imex-diffusion'")


@dataclass
class Snapshot:
    """Frozen substrate/signal data at the anchor time s0.

    M bounds the suprema of all fields and of |grad w|, |lap w| at s0; it
    scales the tolerance of the curvature lower-bound monitor.
    """

    s0: float
    w_s0: Field
    grad_w_s0: VectorField
    lap_w_s0: Field
    v_s0: Field
    M: float
    sup_w: float


@dataclass
class SimState:
    """Fields at time t plus the accumulated signal integrals since the anchor.

    Iv holds the per-cell trapezoidal integral of v over (s0, t], Igv the same
    for grad v. grad_v caches the cell-centered gradient of the current v.
    """

    t: float
    u: Field
    v: Field
    w: Field
    Iv: Field
    Igv: VectorField
    grad_v: VectorField
    anchor: Snapshot | None
    last_dt: float = 0.0

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    def is_finite(self) -> bool:
        return self.u.is_finite() and self.v.is_finite() and self.w.is_finite()


def take_snapshot(t: float, u: Field, v: Field, w: Field) -> Snapshot:
    """Freeze w, grad w, lap w and v at time t, plus the scale bound M."""
    grad_w = gradient(w)
    lap_w = laplacian(w)
    sup_w = float(np.max(w.values))
    m = max(
        sup_norm(u),
        sup_norm(v),
        sup_norm(w),
        sup_norm(grad_w.magnitude()),
        sup_norm(lap_w),
    )
    return Snapshot(
        s0=t,
        w_s0=w.copy(),
        grad_w_s0=grad_w,
        lap_w_s0=lap_w,
        v_s0=v.copy(),
        M=m,
        sup_w=sup_w,
    )


def initial_state(init: InitialData) -> SimState:
    grid = init.grid
    v = init.v0.copy()
    return SimState(
        t=0.0,
        u=init.u0.copy(),
        v=v,
        w=init.w0.copy(),
        Iv=Field.zeros(grid),
        Igv=VectorField.zeros(grid),
        grad_v=gradient(v),
        anchor=take_snapshot(0.0, init.u0, init.v0, init.w0),
        last_dt=0.0,
    )


def _reanchor(state: SimState) -> SimState:
    grid = state.grid
    return replace(
        state,
        anchor=take_snapshot(state.t, state.u, state.v, state.w),
        Iv=Field.zeros(grid),
        Igv=VectorField.zeros(grid),
    )


def stable_dt(state: SimState, params: ModelParams, cfg: SolverConfig) -> float:
    """Largest safe step for the explicit updates.

    Takes cfl_safety times the minimum of the diffusion limit 1/(2 sum h_a^-2)
    (equal to h^2/(2 dim) on cubic cells), the per-axis transport limit
    h_a / max|chi (grad v)_a| + |xi (grad w)_a|, and the reaction limit
    1 / (mu (1 + sup u + sup w)), then caps the result by dt_max and by exact
    landing on the next output time, the anchor time and the final time.
    """
    if not state.is_finite():
        raise Diverged(f"non-finite state at t={state.t!r}", state=state)
    grid = state.grid

    inv_h2_sum = sum(1.0 / (h * h) for h in grid.spacing)
    limit = 1.0 / (2.0 * inv_h2_sum)

    grad_w = gradient(state.w)
    for axis, h in enumerate(grid.spacing):
        speed = np.abs(params.chi * state.grad_v.components[axis].values)
        speed += np.abs(params.xi * grad_w.components[axis].values)
        limit = min(limit, h / (float(np.max(speed)) + _EPS_RATE))

    sup_u = float(np.max(state.u.values))
    sup_w = float(np.max(state.w.values))
    limit = min(limit, 1.0 / (params.mu * (1.0 + sup_u + sup_w) + _EPS_RATE))

    dt = min(cfg.cfl_safety * limit, cfg.dt_max)

    # Land exactly on the next output time, the pending anchor and t_end.
    t = state.t
    out = cfg.output_every
    snap = 1e-9 * out
    next_out = (math.floor(t / out + 1e-9) + 1.0) * out
    dt = min(dt, next_out - t, cfg.t_end - t)
    if cfg.anchor_time > t + snap:
        dt = min(dt, cfg.anchor_time - t)
    if dt <= 0.0:
        raise ValueError("no positive step available (already at t_end?)")
    return dt


def _apply_screened(grid: GridSpec, x: np.ndarray, alpha: float) -> np.ndarray:
    return x - alpha * laplacian(Field(grid, x)).values


def _screened_solve(
    grid: GridSpec,
    rhs: np.ndarray,
    alpha: float,
    tol: float,
    max_iter: int,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """Matrix-free conjugate gradients for (I - alpha lap) x = rhs.

    The operator from the mirror-ghost Laplacian is symmetric positive
    definite. Iteration stops when the residual sup-norm drops below
    tol * max(1, sup|rhs|); exceeding max_iter raises NoConvergence.
    """
    target = tol * max(1.0, float(np.max(np.abs(rhs))))
    x = rhs.copy() if x0 is None else x0.copy()
    r = rhs - _apply_screened(grid, x, alpha)
    if float(np.max(np.abs(r))) <= target:
        return x
    p = r.copy()
    rs = float(np.dot(r, r))
    for _ in range(max_iter):
        ap = _apply_screened(grid, p, alpha)
        alpha_k = rs / float(np.dot(p, ap))
        x += alpha_k * p
        r -= alpha_k * ap
        if float(np.max(np.abs(r))) <= target:
            return x
        rs_new = float(np.dot(r, r))
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise NoConvergence(
        f"screened solve missed tolerance {target:.3e} after {max_iter} iterations"
    )


def solve_elliptic(u: Field, cfg: SolverConfig, x0: Field | None = None) -> Field:
    """Solve (I - lap) v = u with zero-flux closure to cfg.elliptic_tol."""
    if not u.is_finite():
        raise ValueError("elliptic right-hand side must be finite")
    guess = x0.values if x0 is not None else None
    values = _screened_solve(
        u.grid, u.values, 1.0, cfg.elliptic_tol, cfg.elliptic_max_iter, guess
    )
    return Field(u.grid, values)


def _clamp_negatives(values: np.ndarray, floor: float) -> np.ndarray:
    """Zero out negativity within |floor|; reject anything worse."""
    low = float(np.min(values))
    if low >= 0.0:
        return values
    if low < -floor:
        raise _RetryStep
    np.maximum(values, 0.0, out=values)
    return values


def _attempt_step(
    state: SimState, params: ModelParams, cfg: SolverConfig, dt: float
) -> SimState:
    grid = state.grid
    u, v, w = state.u, state.v, state.w

    # (1) signal update
    if params.tau == 0:
        v_new_vals = _screened_solve(
            grid, u.values, 1.0, cfg.elliptic_tol, cfg.elliptic_max_iter, v.values
        )
        solver_floor = 2.0 * cfg.elliptic_tol * max(1.0, float(np.max(np.abs(u.values))))
        v_new_vals = _clamp_negatives(
            v_new_vals, max(solver_floor, _ROUNDOFF_CLAMP * sup_norm(v))
        )
    elif cfg.time_scheme == "imex-diffusion":
        b = (1.0 - dt) * v.values + dt * u.values
        v_new_vals = _screened_solve(
            grid, b, dt, cfg.elliptic_tol, cfg.elliptic_max_iter, v.values
        )
        solver_floor = 2.0 * cfg.elliptic_tol * max(1.0, float(np.max(np.abs(b))))
        v_new_vals = _clamp_negatives(
            v_new_vals, max(solver_floor, _ROUNDOFF_CLAMP * sup_norm(v))
        )
    else:
        v_new_vals = v.values + dt * (
            laplacian(v).values - v.values + u.values
        )
        v_new_vals = _clamp_negatives(v_new_vals, _ROUNDOFF_CLAMP * sup_norm(v))
    v_new = Field(grid, v_new_vals)
    grad_v_new = gradient(v_new)

    # (4, computed early so the w update can reuse it) trapezoidal accumulators
    iv_new = Field(grid, state.Iv.values + (0.5 * dt) * (v.values + v_new_vals))
    igv_new = VectorField(
        tuple(
            Field(
                grid,
                acc.values + (0.5 * dt) * (go.values + gn.values),
            )
            for acc, go, gn in zip(
                state.Igv.components, state.grad_v.components, grad_v_new.components
            )
        )
    )

    # (2) substrate update
    anchor = state.anchor
    if anchor is None:
        raise ValueError("state has no anchor snapshot")
    if params.eta == 0.0:
        # Exact exponential of the accumulated integral; evaluating from the
        # anchor keeps w == w_anchor * exp(-Iv) bitwise for the whole run.
        w_new_vals = anchor.w_s0.values * np.exp(-iv_new.values)
    else:
        v_half = 0.5 * (v.values + v_new_vals)
        k1 = -v.values * w.values + params.eta * w.values * (
            1.0 - u.values - w.values
        )
        w_half = w.values + (0.5 * dt) * k1
        k2 = -v_half * w_half + params.eta * w_half * (1.0 - u.values - w_half)
        w_new_vals = np.clip(w.values + dt * k2, 0.0, anchor.sup_w)
    w_new = Field(grid, w_new_vals)

    # (3) cell update, using the fresh v and w
    u_new_vals = u.values + dt * rhs_u(u, v_new, w_new, params).values
    u_new_vals = _clamp_negatives(
        u_new_vals, _ROUNDOFF_CLAMP * max(float(np.max(u.values)), _EPS_RATE)
    )

    return SimState(
        t=state.t + dt,
        u=Field(grid, u_new_vals),
        v=v_new,
        w=w_new,
        Iv=iv_new,
        Igv=igv_new,
        grad_v=grad_v_new,
        anchor=anchor,
        last_dt=dt,
    )


def _check_divergence(state: SimState, cfg: SolverConfig) -> None:
    if not state.is_finite():
        raise Diverged(f"non-finite fields at t={state.t!r}", state=state)
    sup_u = float(np.max(state.u.values))
    if sup_u > cfg.blowup_threshold:
        raise Diverged(
            f"sup u = {sup_u!r} crossed threshold at t={state.t!r}", state=state
        )


def step(state: SimState, params: ModelParams, cfg: SolverConfig) -> SimState:
    """Advance one accepted step; retries with halved dt on rejection."""
    dt = stable_dt(state, params, cfg)
    for _ in range(_MAX_HALVINGS + 1):
        try:
            new = _attempt_step(state, params, cfg, dt)
        except _RetryStep:
            dt *= 0.5
            continue
        _check_divergence(new, cfg)
        return new
    raise CFLViolation(f"persistent negativity at t={state.t!r}")


@dataclass
class RunOutcome:
    """Terminal status of a run plus summary statistics and the record series."""

    status: str  # "completed" | "blew_up" | "cfl_failed"
    t_final: float
    records: list
    max_sup_u: float
    t_of_max_sup_u: float
    min_u: float
    min_v: float
    min_w: float
    max_w: float
    invariant_violations: int
    steps: int
    failure_time: float | None = None
    final_state: SimState | None = None


def run(
    init: InitialData,
    params: ModelParams,
    cfg: SolverConfig,
    *,
    p_list: tuple[float, ...] = (2.0,),
    record_sink=None,
    snapshot_sink=None,
) -> RunOutcome:
    """Integrate from t = 0 to t_end or until divergence.

    Emits a diagnostics record at t = 0 and at every output_every of simulated
    time (and at t_end); optional sinks receive each record / the state at
    each emission. At t = anchor_time > 0 the anchor snapshot is re-captured
    and the accumulators reset. Positivity and the substrate ceiling are
    monitored after every accepted step; step failures become the outcome
    status, never an exception.
    """
    state = initial_state(init)
    records: list = []

    def emit(st: SimState) -> None:
        rec = diagnostics.record(st, list(p_list), eta=params.eta)
        records.append(rec)
        if record_sink is not None:
            record_sink(rec)
        if snapshot_sink is not None:
            snapshot_sink(st)

    min_u = float(np.min(state.u.values))
    min_v = float(np.min(state.v.values))
    min_w = float(np.min(state.w.values))
    max_w = float(np.max(state.w.values))
    max_sup_u = float(np.max(state.u.values))
    t_of_max = 0.0
    violations = 0
    steps = 0
    status = "completed"
    failure_time: float | None = None

    emit(state)

    out = cfg.output_every
    tol_t = 1e-9 * min(out, cfg.t_end)
    next_out = out
    anchor_pending = cfg.anchor_time > 0.0

    try:
        while state.t < cfg.t_end - tol_t:
            state = step(state, params, cfg)
            steps += 1

            su = float(np.max(state.u.values))
            if su > max_sup_u:
                max_sup_u = su
                t_of_max = state.t
            mu_ = float(np.min(state.u.values))
            mv_ = float(np.min(state.v.values))
            mw_ = float(np.min(state.w.values))
            xw_ = float(np.max(state.w.values))
            min_u = min(min_u, mu_)
            min_v = min(min_v, mv_)
            min_w = min(min_w, mw_)
            max_w = max(max_w, xw_)
            if mu_ < 0.0 or mv_ < 0.0 or mw_ < 0.0 or xw_ > state.anchor.sup_w:
                violations += 1

            if anchor_pending and state.t >= cfg.anchor_time - tol_t:
                state = _reanchor(state)
                anchor_pending = False

            if state.t >= next_out - tol_t or state.t >= cfg.t_end - tol_t:
                emit(state)
                while next_out <= state.t + tol_t:
                    next_out += out
    except Diverged as exc:
        status = "blew_up"
        if exc.state is not None:
            state = exc.state
            if state.is_finite():
                su = float(np.max(state.u.values))
                if su > max_sup_u:
                    max_sup_u = su
                    t_of_max = state.t
            emit(state)
        failure_time = state.t
    except (CFLViolation, NoConvergence):
        status = "cfl_failed"
        failure_time = state.t
        emit(state)

    return RunOutcome(
        status=status,
        t_final=state.t,
        records=records,
        max_sup_u=max_sup_u,
        t_of_max_sup_u=t_of_max,
        min_u=min_u,
        min_v=min_v,
        min_w=min_w,
        max_w=max_w,
        invariant_violations=violations,
        steps=steps,
        failure_time=failure_time,
        final_state=state,
    )
