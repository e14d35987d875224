"""Pathwise checks of the backward SDE satisfied by the value process.

Along g = g*, V_t = w X_t + w' U_t + A_t Y_t + B_t solves

    dV_t = -D(t) dt + int A_t z Ntilde(dt, dz),   V_T = w X_T + w' U_T,

with driver D(t) = int (exp(A_t z) - A_t z - 1) nu(dz) = psi(A_t) - A_t m
(m the mean jump).  The full value function is recovered as
Phi(t, x, y, u, m) = m (V - ln m).

Derivation of the m-free form: with g = g*, w dX + w' dU = w_hat (Y + q) dt.
Using dA/dt = lam A - w_hat and dB/dt = -q w_hat - psi(A),
d(A Y + B) = -w_hat Y dt - (q w_hat + psi(A)) dt + A dJ, hence
dV = -psi(A) dt + A dJ = -(psi(A) - A m) dt + A (dJ - m dt).

On simulated paths only jumps above eps are present, so the compensator is
A_t int_eps z nu(dz) dt; if the small-jump drift was not added back to Y the
residual carries the truncation bias A_t int_0^eps z nu(dz) per unit time.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .closedform import ClosedFormSolution
from .sim import SimConfig, Trajectory, path_rng, simulate_path, Distortion, Policy

__all__ = [
    "BsdePath",
    "ResidualStats",
    "driver",
    "driver_integral",
    "v_from_state",
    "bsde_path",
    "pathwise_residual",
    "refinement_study",
    "observed_truncation_bias",
]


def driver(solution: ClosedFormSolution, t) -> float:
    """int (exp(A_t z) - A_t z - 1) nu(dz); nonnegative."""
    A = solution.A(t)
    m = solution.measure
    if np.ndim(A):
        return np.array([m.exp_moment_integral(a) - a * m.mean_jump() for a in A])
    return m.exp_moment_integral(A) - A * m.mean_jump()


def _A_integral(solution: ClosedFormSolution, t0, t1):
    """int_t0^t1 A_s ds in closed form."""
    lam, T = solution.params.lambda_, solution.params.T
    e = lambda t: np.exp(lam * (np.asarray(t) - T))
    return solution.A_coef * ((np.asarray(t1) - t0) - (e(t1) - e(t0)) / lam)


def _psi_integral(solution: ClosedFormSolution, t0, t1):
    """int_t0^t1 psi(A_s) ds, read off the B table."""
    p = solution.params
    return solution.B(t0) - solution.B(t1) - p.q * solution.w_hat * (np.asarray(t1) - t0)


def driver_integral(solution: ClosedFormSolution, t0=0.0, t1=None):
    t1 = solution.params.T if t1 is None else t1
    return _psi_integral(solution, t0, t1) - solution.measure.mean_jump() * _A_integral(solution, t0, t1)


def v_from_state(solution: ClosedFormSolution, t, x, y, u):
    p = solution.params
    return p.w * x + p.w_prime * u + solution.A(t) * y + solution.B(t)


@dataclass
class BsdePath:
    t: np.ndarray
    V: np.ndarray
    Z_coefficient: np.ndarray
    residuals: np.ndarray
    jump_step: np.ndarray


@dataclass(frozen=True)
class ResidualStats:
    dt: float
    eps: float
    max_residual: float
    mean_residual: float
    drift_max: float
    jump_max: float
    truncation_bias: float
    terminal_error: float
    n_paths: int
    scheme: str

    def as_dict(self) -> dict:
        return asdict(self)


def bsde_path(trajectory: Trajectory, solution: ClosedFormSolution, scheme: str = "euler") -> BsdePath:
    """V along a reference path and the per-step residual of the discretised BSDE.

    ``scheme="euler"`` evaluates driver and compensator at the left node;
    ``scheme="exact"`` integrates both over the step.
    """
    meta = trajectory.meta
    if meta.get("mode") != "reference":
        raise ValueError("trajectory must be simulated under the reference measure")
    if trajectory.jump_times is None or trajectory.jump_sizes is None:
        raise ValueError("trajectory has no jump log")
    g_star = solution.optimal_g()
    g_used = meta.get("g_constant")
    if g_used is None or abs(g_used - g_star) > 1e-12:
        raise ValueError(f"trajectory used policy {meta.get('policy')!r}, not g* = {g_star}")
    if scheme not in ("euler", "exact"):
        raise ValueError("scheme must be 'euler' or 'exact'")

    t, dt = trajectory.t, trajectory.dt
    n = len(t) - 1
    eps = meta["eps"]
    measure = solution.measure
    A = solution.A(t)
    V = v_from_state(solution, t, trajectory.X, trajectory.Y, trajectory.U)

    jt, jz = trajectory.jump_times, trajectory.jump_sizes
    step = np.minimum((jt / dt).astype(np.int64), n - 1)
    jump_part = np.bincount(step, weights=solution.A(jt) * jz, minlength=n)
    has_jump = np.bincount(step, minlength=n) > 0

    big_mean = measure.mean_jump() - measure.small_mean(eps)
    if scheme == "euler":
        drift = -(driver(solution, t[:-1]) + A[:-1] * big_mean) * dt
    else:
        drift = -driver_integral(solution, t[:-1], t[1:]) - big_mean * _A_integral(solution, t[:-1], t[1:])
    residuals = np.diff(V) - (drift + jump_part)
    return BsdePath(t, V, A, residuals, has_jump)


def pathwise_residual(trajectory: Trajectory, solution: ClosedFormSolution, scheme: str = "euler") -> ResidualStats:
    bp = bsde_path(trajectory, solution, scheme)
    r = np.abs(bp.residuals)
    free = ~bp.jump_step
    eps = trajectory.meta["eps"]
    bias = 0.0 if trajectory.meta.get("compensated") else solution.A_max * solution.measure.small_mean(eps)
    p = solution.params
    terminal = bp.V[-1] - (p.w * trajectory.X[-1] + p.w_prime * trajectory.U[-1])
    return ResidualStats(
        dt=trajectory.dt,
        eps=eps,
        max_residual=float(r.max()),
        mean_residual=float(r.mean()),
        drift_max=float(r[free].max()) if free.any() else math.nan,
        jump_max=float(r[~free].max()) if (~free).any() else 0.0,
        truncation_bias=bias,
        terminal_error=float(abs(terminal)),
        n_paths=1,
        scheme=scheme,
    )


def _combine(stats: list[ResidualStats]) -> ResidualStats:
    s0 = stats[0]
    return ResidualStats(
        dt=s0.dt,
        eps=s0.eps,
        max_residual=max(s.max_residual for s in stats),
        mean_residual=float(np.mean([s.mean_residual for s in stats])),
        drift_max=float(np.nanmax([s.drift_max for s in stats])),
        jump_max=max(s.jump_max for s in stats),
        truncation_bias=s0.truncation_bias,
        terminal_error=max(s.terminal_error for s in stats),
        n_paths=len(stats),
        scheme=s0.scheme,
    )


def refinement_study(
    solution: ClosedFormSolution,
    config: SimConfig,
    levels: int = 3,
    n_paths: int | None = None,
    scheme: str = "euler",
) -> list[ResidualStats]:
    """Residual statistics for dt, dt/2, dt/4, ... on identical jump skeletons."""
    params, measure = solution.params, solution.measure
    policy = Policy.optimal(params)
    n_paths = config.n_paths if n_paths is None else n_paths
    out = []
    for lev in range(levels):
        cfg = config.replace(dt=config.dt / 2**lev)
        stats = [
            pathwise_residual(
                simulate_path(params, measure, policy, Distortion.zero(), cfg, path_rng(cfg.seed, i)),
                solution,
                scheme,
            )
            for i in range(n_paths)
        ]
        out.append(_combine(stats))
    return out


def observed_truncation_bias(solution: ClosedFormSolution, config: SimConfig, n_paths: int | None = None) -> float:
    """Residual drift per unit time caused by dropping the small-jump drift.

    Paths with and without the compensating drift share their jumps, so the
    difference of the summed residuals isolates the truncation effect; it
    approximates the time average of A_t int_0^eps z nu(dz).
    """
    params, measure = solution.params, solution.measure
    policy = Policy.optimal(params)
    n_paths = config.n_paths if n_paths is None else n_paths
    shifts = []
    for i in range(n_paths):
        sums = []
        for comp in (True, False):
            cfg = config.replace(compensate_small_jumps=comp)
            tr = simulate_path(params, measure, policy, Distortion.zero(), cfg, path_rng(cfg.seed, i))
            sums.append(bsde_path(tr, solution, "exact").residuals.sum())
        shifts.append((sums[0] - sums[1]) / params.T)
    return float(np.mean(shifts))
