"""Simulation of the flow / volume / effort / density system.

Y is a Lévy-driven OU process, X and U accumulate diverted and retained
flow, and M is the density process of a distorted measure.  The
subordinator is approximated by compound Poisson jumps above a cutoff eps,
optionally with the drift of the discarded small jumps added back to Y.

Between grid nodes Y decays exactly, X and U use the trapezoid rule on the
node values, and M is the exact stochastic exponential (jump factors
1 + theta and the compensator exp(-int int theta nu)).

Every path owns an RNG stream derived from (seed, path index), so batch runs
reproduce single-path runs and do not depend on the thread count.
"""
from __future__ import annotations

import csv
import functools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels as K
from .closedform import ClosedFormSolution, ModelParams, TimeIntegral, optimal_g
from .levy import Divergent, LevyMeasure, TemperedStableMeasure, integrability_report

__all__ = [
    "SimConfig",
    "Policy",
    "Distortion",
    "Trajectory",
    "SizeTable",
    "PathFunctionals",
    "size_table",
    "path_rng",
    "sample_jumps",
    "simulate_path",
    "simulate_path_worst_case",
    "simulate_functionals",
    "write_trajectories",
]

TABLE_NODES = 10_000
FINE_NODES = 2**18
SURVIVAL_FLOOR = 1e-18
DEFAULT_DRIFT_FRACTION = 1e-4


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    eps: float | None = None  # None: pick eps so the discarded drift is drift_fraction * mean jump
    drift_fraction: float = DEFAULT_DRIFT_FRACTION
    compensate_small_jumps: bool = True
    seed: int = 20201015
    n_paths: int = 1000
    measure_mode: str = "reference"
    y0: float = 0.0
    threads: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.eps is not None and not self.eps > 0:
            raise ValueError("eps must be > 0")
        if not 0 < self.drift_fraction < 1:
            raise ValueError("drift_fraction must lie in (0, 1)")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.measure_mode not in ("reference", "worst_case"):
            raise ValueError("measure_mode must be 'reference' or 'worst_case'")
        if self.y0 < 0:
            raise ValueError("y0 must be >= 0")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def resolve_eps(self, measure: LevyMeasure) -> float:
        if self.eps is not None:
            return float(self.eps)
        return float(measure.truncation_for_drift(self.drift_fraction))

    def steps(self, T: float) -> tuple[int, float]:
        n = max(1, int(math.ceil(T / self.dt - 1e-9)))
        return n, T / n

    def replace(self, **changes) -> "SimConfig":
        return SimConfig(**{**self.__dict__, **changes})


def path_rng(seed: int, path_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(path_id,))))


# ---------------------------------------------------------------------------
# controls
# ---------------------------------------------------------------------------
class Policy:
    """Diversion rule (t, y) -> g in [g_lo, g_hi].

    Only current time and the pre-jump flow are visible to the rule.
    """

    def __init__(self, rule: Callable, g_lo: float, g_hi: float, label: str, constant: float | None = None):
        self._rule = rule
        self.g_lo = g_lo
        self.g_hi = g_hi
        self.label = label
        self.constant = constant

    def __call__(self, t, y):
        t, y = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(y, dtype=float))
        g = np.clip(np.asarray(self._rule(t, y), dtype=float) * np.ones_like(t), self.g_lo, self.g_hi)
        return float(g) if g.ndim == 0 else g

    def __repr__(self):
        return f"Policy({self.label})"

    @classmethod
    def constant_ratio(cls, g: float, params: ModelParams, label: str | None = None) -> "Policy":
        if not params.g_lo <= g <= params.g_hi:
            raise ValueError(f"constant ratio {g} outside [{params.g_lo}, {params.g_hi}]")
        g = float(g)
        return cls(lambda t, y: g, params.g_lo, params.g_hi, label or f"constant {g:.6g}", constant=g)

    @classmethod
    def optimal(cls, params: ModelParams) -> "Policy":
        return cls.constant_ratio(optimal_g(params), params, label="optimal")

    @classmethod
    def tabulated(cls, times: Sequence[float], ratios: Sequence[float], params: ModelParams) -> "Policy":
        """Piecewise constant in time: ratios[i] applies on [times[i], times[i+1])."""
        times = np.asarray(times, dtype=float)
        ratios = np.asarray(ratios, dtype=float)
        if times.shape != ratios.shape or times.ndim != 1 or np.any(np.diff(times) <= 0):
            raise ValueError("times must be increasing and match ratios")
        if np.any(ratios < params.g_lo) or np.any(ratios > params.g_hi):
            raise ValueError("tabulated ratios must lie in the admissible interval")

        def rule(t, y):
            idx = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 1)
            return ratios[idx]

        const = float(ratios[0]) if np.all(ratios == ratios[0]) else None
        return cls(rule, params.g_lo, params.g_hi, "tabulated", constant=const)

    @classmethod
    def from_function(cls, fn: Callable, params: ModelParams, label: str = "feedback") -> "Policy":
        return cls(fn, params.g_lo, params.g_hi, label)


class Distortion:
    """Jump-size distortion theta(t, z) > -1 defining the measure change.

    Built-in forms are theta = 0 and theta = c * (exp(A_t z) - 1); their
    compensators come from the closed-form exponential moments.  Arbitrary
    functions are compensated by quadrature.
    """

    def __init__(self, kind: str, scale: float = 0.0, solution: ClosedFormSolution | None = None,
                 fn: Callable | None = None, label: str | None = None):
        self.kind = kind
        self.scale = float(scale)
        self.solution = solution
        self.fn = fn
        self.label = label or kind

    def __repr__(self):
        return f"Distortion({self.label})"

    @classmethod
    def zero(cls) -> "Distortion":
        return cls("zero", 0.0, label="zero")

    @classmethod
    def worst_case(cls, solution: ClosedFormSolution, scale: float = 1.0) -> "Distortion":
        if scale < 0:
            raise ValueError("distortion scale must be >= 0")
        if scale == 0:
            return cls.zero()
        rep = integrability_report(solution.measure, solution.A_max)
        if not rep.square_integrable:
            raise ValueError(
                f"c * theta* is not square integrable: A_0 = {rep.A_max:.6g} > b/2 = {0.5 * rep.bound:.6g}"
            )
        return cls("worst_case", scale, solution, label=f"{scale:g} * theta*")

    @classmethod
    def from_function(cls, fn: Callable, label: str = "custom") -> "Distortion":
        return cls("function", 1.0, fn=fn, label=label)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def __call__(self, t, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(z)
        if self.kind == "worst_case":
            return self.scale * self.solution.theta_star(t, z)
        return np.asarray(self.fn(t, z), dtype=float)

    def log1p(self, t, z):
        """log(1 + theta(t, z)), exact for the built-in forms."""
        z = np.asarray(z, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(z)
        if self.kind == "worst_case":
            Az = self.solution.A(t) * z
            if self.scale == 1.0:
                return Az
            return np.log1p(self.scale * np.expm1(Az))
        return np.log1p(self(t, z))

    def square_integral(self, measure: LevyMeasure, t: float) -> float:
        """int theta(t, z)**2 nu(dz)."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "worst_case":
            A = self.solution.A(t)
            return self.scale**2 * (measure.exp_moment_integral(2 * A) - 2 * measure.exp_moment_integral(A))
        return measure._integrate(lambda z: float(self(t, z)) ** 2, what="theta^2")

    def compensator(self, measure: LevyMeasure, eps: float, T: float) -> Callable | None:
        """Cumulative int_0^t int_eps^inf theta(s, z) nu(dz) ds, or None when theta = 0."""
        if self.kind == "zero":
            return None
        if self.kind == "worst_case":
            base, c = _worst_case_compensator(self.solution, measure, eps), self.scale
            return lambda t: c * base(t)
        return _function_compensator(self, measure, eps, T)


@functools.lru_cache(maxsize=32)
def _worst_case_compensator(solution: ClosedFormSolution, measure: LevyMeasure, eps: float) -> TimeIntegral:
    f = lambda s: measure.truncated_exp_moment(solution.A(s), eps)
    return TimeIntegral(f, solution.params.T, solution.n_nodes)


def _function_compensator(dist: Distortion, measure: LevyMeasure, eps: float, T: float) -> TimeIntegral:
    f = lambda s: measure._integrate(lambda z: float(dist(s, z)), eps, math.inf, "theta compensator")
    return TimeIntegral(f, T, 257)


# ---------------------------------------------------------------------------
# jump sizes
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SizeTable:
    """Inverse of the normalised tail S of nu restricted to [eps, inf).

    The tail is tabulated at log-spaced nodes in z and log z is linearly
    interpolated against -log S, which is monotone and exact for a pure power
    law.  For O(1) lookups that piecewise-linear curve is resampled once onto
    a uniform grid in -log S (``fine``).
    """

    eps: float
    rate: float
    z: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    log_z: np.ndarray = field(repr=False)
    fine: np.ndarray = field(repr=False)
    inv_h: float

    def sizes(self, u):
        """Map uniforms u in (0, 1] to jump sizes."""
        return K.invert_many(np.asarray(u, dtype=float), self.fine, self.inv_h)

    def sizes_exact_table(self, u):
        """Same map through the log-spaced table directly (slow, for checks)."""
        return np.exp(np.interp(-np.log(np.asarray(u, dtype=float)), self.x, self.log_z))


def _tail_vector(measure: LevyMeasure, z: np.ndarray) -> np.ndarray:
    if isinstance(measure, TemperedStableMeasure):
        return measure.tail_mass(z)
    # generic measures: integrate segment by segment from the top
    tails = np.empty_like(z)
    tails[-1] = measure.tail_mass(z[-1])
    for i in range(len(z) - 2, -1, -1):
        seg = measure._integrate(lambda v: 1.0, z[i], z[i + 1], "tail segment")
        tails[i] = tails[i + 1] + seg
    return tails


@functools.lru_cache(maxsize=16)
def size_table(measure: LevyMeasure, eps: float, n_nodes: int = TABLE_NODES) -> SizeTable:
    rate = float(measure.tail_mass(eps))
    z_max = max(2.0 * eps, 1.0 / measure.exp_bound)
    while measure.tail_mass(z_max) > SURVIVAL_FLOOR * rate:
        z_max *= 2.0
    z = np.geomspace(eps, z_max, n_nodes)
    tails = _tail_vector(measure, z)
    tails[0] = rate
    x = -np.log(tails / rate)
    x[0] = 0.0
    x = np.maximum.accumulate(x)
    log_z = np.log(z)
    grid = np.linspace(0.0, x[-1], FINE_NODES + 1)
    fine = np.interp(grid, x, log_z)
    return SizeTable(float(eps), rate, z, x, log_z, fine, FINE_NODES / x[-1])


def _draw_reference(table: SizeTable, T: float, rng: np.random.Generator):
    n = rng.poisson(table.rate * T)
    times = rng.uniform(0.0, T, n)
    usz = 1.0 - rng.random(n)
    return times, usz


def _draw_thinned(table: SizeTable, T: float, rng: np.random.Generator):
    times, usz = _draw_reference(table, T, rng)
    uacc = rng.random(times.shape[0])
    return times, usz, uacc


def sample_jumps(measure: LevyMeasure, eps: float, t0: float, t1: float, rng: np.random.Generator):
    """Compound Poisson jumps of nu restricted to [eps, inf) on (t0, t1].

    Returns (times, sizes) sorted by time.
    """
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    if not eps > 0:
        raise ValueError("eps must be > 0")
    table = size_table(measure, eps)
    times, usz = _draw_reference(table, t1 - t0, rng)
    order = np.argsort(times, kind="stable")
    return t0 + times[order], table.sizes(usz[order])


# ---------------------------------------------------------------------------
# single trajectories
# ---------------------------------------------------------------------------
@dataclass
class Trajectory:
    t: np.ndarray
    Y: np.ndarray
    X: np.ndarray
    U: np.ndarray
    M: np.ndarray | None
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    g: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


def _grid_flow(params, t, dt, y0, drift, jump_times, jump_sizes):
    """Exact OU values on the grid; returns Y and the step index of each jump."""
    lam = params.lambda_
    n = len(t) - 1
    r = math.exp(-lam * dt)
    step = np.minimum((jump_times / dt).astype(np.int64), n - 1)
    inc = np.bincount(step, weights=jump_sizes * np.exp(-lam * (t[step + 1] - jump_times)), minlength=n)
    inc = inc + drift * (1.0 - r) / lam
    Y = np.empty(n + 1)
    Y[0] = y0
    for k in range(n):
        Y[k + 1] = Y[k] * r + inc[k]
    return Y, step


def _accumulate(params, policy, t, Y, dt):
    g = policy(t[:-1], Y[:-1])
    flow = Y + params.q
    trap = 0.5 * dt * (flow[:-1] + flow[1:])
    X = np.concatenate([[0.0], np.cumsum((1.0 - g) * trap)])
    U = np.concatenate([[0.0], np.cumsum(g**params.n / params.n * trap)])
    return X, U, np.asarray(g, dtype=float)


def _small_drift(measure, eps, config):
    return measure.small_mean(eps) if config.compensate_small_jumps else 0.0


def simulate_path(
    params: ModelParams,
    measure: LevyMeasure,
    policy: Policy,
    distortion: Distortion,
    config: SimConfig,
    rng: np.random.Generator,
) -> Trajectory:
    """One path under the reference measure, with the density process M."""
    if config.measure_mode != "reference":
        raise ValueError("simulate_path runs under the reference measure; use simulate_path_worst_case")
    T = params.T
    eps = config.resolve_eps(measure)
    n, dt = config.steps(T)
    t = np.linspace(0.0, T, n + 1)
    table = size_table(measure, eps)
    times, usz = _draw_reference(table, T, rng)
    order = np.argsort(times, kind="stable")
    jt, jz = times[order], table.sizes(usz[order])

    Y, step = _grid_flow(params, t, dt, config.y0, _small_drift(measure, eps, config), jt, jz)
    X, U, g = _accumulate(params, policy, t, Y, dt)

    comp = distortion.compensator(measure, eps, T)
    if comp is None:
        M = np.ones(n + 1)
    else:
        log_jump = np.bincount(step, weights=distortion.log1p(jt, jz), minlength=n)
        cum = comp(t)
        logM = np.concatenate([[0.0], np.cumsum(log_jump)]) - (cum - cum[0])
        M = np.exp(logM)
    meta = dict(mode="reference", eps=eps, policy=policy.label, g_constant=policy.constant,
                distortion=distortion.label, compensated=config.compensate_small_jumps)
    return Trajectory(t, Y, X, U, M, jt, jz, g, meta)


def simulate_path_worst_case(
    params: ModelParams,
    measure: LevyMeasure,
    policy: Policy,
    solution: ClosedFormSolution,
    config: SimConfig,
    rng: np.random.Generator,
) -> Trajectory:
    """One path under the worst-case measure exp(A_t z) nu(dz), by thinning.

    Proposals come from the homogeneous measure tilted by A_max = A_0 and are
    kept with probability exp((A_s - A_max) z).  M is not simulated.
    """
    T = params.T
    A_max = solution.A_max
    if A_max >= measure.exp_bound:
        raise Divergent(A_max, measure.exp_bound, "worst-case measure")
    eps = config.resolve_eps(measure)
    n, dt = config.steps(T)
    t = np.linspace(0.0, T, n + 1)
    dom = size_table(measure.tilted(A_max), eps)
    times, usz, uacc = _draw_thinned(dom, T, rng)
    z = dom.sizes(usz)
    keep = uacc < np.exp((solution.A(times) - A_max) * z)
    order = np.argsort(times[keep], kind="stable")
    jt, jz = times[keep][order], z[keep][order]

    Y, _ = _grid_flow(params, t, dt, config.y0, _small_drift(measure, eps, config), jt, jz)
    X, U, g = _accumulate(params, policy, t, Y, dt)
    meta = dict(mode="worst_case", eps=eps, policy=policy.label, g_constant=policy.constant,
                compensated=config.compensate_small_jumps, proposals=int(times.shape[0]))
    return Trajectory(t, Y, X, U, None, jt, jz, g, meta)


def write_trajectories(trajectories: Sequence[Trajectory], path, jumps_path=None) -> None:
    """CSV dump: (path_id, t, Y, X, U, M) and optionally (path_id, t, z)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["path_id", "t", "Y", "X", "U", "M"])
        for pid, tr in enumerate(trajectories):
            M = tr.M if tr.M is not None else np.full_like(tr.t, np.nan)
            for row in zip(tr.t, tr.Y, tr.X, tr.U, M):
                wr.writerow([pid] + [f"{v:.17g}" for v in row])
    if jumps_path is not None:
        with open(jumps_path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["path_id", "t", "z"])
            for pid, tr in enumerate(trajectories):
                for tj, zj in zip(tr.jump_times, tr.jump_sizes):
                    wr.writerow([pid, f"{tj:.17g}", f"{zj:.17g}"])


# ---------------------------------------------------------------------------
# batch engine
# ---------------------------------------------------------------------------
@dataclass
class PathFunctionals:
    """Per-path functionals of a batch run, for constant policies.

    Jump-driven parts are stored per path; the contributions of y0, the
    baseflow and the small-jump drift are deterministic and added on demand,
    so one batch serves every starting level and every constant ratio.
    """

    params: ModelParams
    config: SimConfig
    eps: float
    mode: str
    dt: float
    stats: np.ndarray
    log_tilt: np.ndarray
    scales: tuple
    comp_total: float
    drift: float
    window: float
    big: float
    elapsed: float

    @property
    def n_paths(self) -> int:
        return self.stats.shape[0]

    def _det_flow(self, y0: float) -> tuple[float, float]:
        """Trapezoid integral and terminal value of the deterministic part of Y."""
        p = self.params
        n, dt = self.config.steps(p.T)
        t = np.linspace(0.0, p.T, n + 1)
        decay = np.exp(-p.lambda_ * t)
        Yd = y0 * decay + self.drift * (-np.expm1(-p.lambda_ * t)) / p.lambda_
        integral = dt * (Yd.sum() - 0.5 * (Yd[0] + Yd[-1]))
        return integral, Yd[-1]

    def flow_integral(self, y0: float = 0.0) -> np.ndarray:
        """Trapezoid integral of Y + q over [0, T] per path."""
        det, _ = self._det_flow(y0)
        return self.stats[:, K.S_INT] + det + self.params.q * self.params.T

    def Y_T(self, y0: float = 0.0) -> np.ndarray:
        _, yd = self._det_flow(y0)
        return self.stats[:, K.Y_T] + yd

    def X_T(self, g: float, y0: float = 0.0) -> np.ndarray:
        return (1.0 - g) * self.flow_integral(y0)

    def U_T(self, g: float, y0: float = 0.0) -> np.ndarray:
        return g**self.params.n / self.params.n * self.flow_integral(y0)

    def cost(self, g: float, y0: float = 0.0) -> np.ndarray:
        p = self.params
        return p.w * self.X_T(g, y0) + p.w_prime * self.U_T(g, y0)

    def log_M_T(self, c: float) -> np.ndarray:
        if self.mode != "reference":
            raise ValueError("the density process is only simulated under the reference measure")
        if c == 0.0:
            return np.zeros(self.n_paths)
        try:
            k = self.scales.index(c)
        except ValueError:
            raise KeyError(f"scale {c} was not simulated; available {self.scales}") from None
        return self.log_tilt[:, k] - c * self.comp_total

    def M_T(self, c: float) -> np.ndarray:
        return np.exp(self.log_M_T(c))

    @property
    def n_jumps(self) -> np.ndarray:
        return self.stats[:, K.N_JUMPS]

    @property
    def window_counts(self) -> np.ndarray:
        return self.stats[:, K.N_WINDOW]

    @property
    def window_big_counts(self) -> np.ndarray:
        return self.stats[:, K.N_BIG]

    @property
    def jump_size_sums(self) -> np.ndarray:
        return self.stats[:, K.SUM_Z]


def _step_weights(lam, T, dt, n):
    # dt * sum_{k=j+1}^{n} exp(lam (T - t_k)) for a jump inside step j
    e = np.exp(lam * (T - dt * np.arange(1, n + 1)))
    return dt * np.cumsum(e[::-1])[::-1]


def simulate_functionals(
    params: ModelParams,
    measure: LevyMeasure,
    solution: ClosedFormSolution,
    config: SimConfig,
    scales: Sequence[float] = (1.0,),
    window: float = 0.0,
    big: float = math.inf,
    mode: str | None = None,
) -> PathFunctionals:
    """Simulate ``config.n_paths`` paths and keep their constant-policy functionals.

    In reference mode the log density for each distortion c * theta* (c in
    ``scales``) is accumulated along the same jumps, which gives common random
    numbers across all distortion and policy arms.  In worst_case mode jumps
    are drawn from exp(A_t z) nu(dz) by thinning.  ``window`` and ``big``
    configure the counters of jumps before t = window (and of those above
    size ``big``).
    """
    mode = mode or config.measure_mode
    T = params.T
    eps = config.resolve_eps(measure)
    n, dt = config.steps(T)
    lam = params.lambda_
    scales = tuple(float(c) for c in scales)
    if any(c < 0 for c in scales):
        raise ValueError("distortion scales must be >= 0")
    A_max = solution.A_max
    if mode == "worst_case":
        if A_max >= measure.exp_bound:
            raise Divergent(A_max, measure.exp_bound, "worst-case measure")
        table = size_table(measure.tilted(A_max), eps)
        draw, thin = _draw_thinned, True
        comp_total = 0.0
        scales = ()
    elif mode == "reference":
        table = size_table(measure, eps)
        draw, thin = _draw_reference, False
        if any(c > 0 for c in scales):
            if A_max >= measure.exp_bound:
                raise Divergent(A_max, measure.exp_bound, "distortion compensator")
            comp_total = _worst_case_compensator(solution, measure, eps).total
        else:
            comp_total = 0.0
    else:
        raise ValueError(f"unknown mode {mode!r}")

    if lam * T > 600:
        raise ValueError("lambda * T too large for the batch engine (exp overflow)")
    weights = _step_weights(lam, T, dt, n)
    sc = np.asarray(scales, dtype=float)
    N = config.n_paths
    stats = np.zeros((N, K.N_STATS))
    log_tilt = np.zeros((N, len(scales)))
    empty = np.empty(0)

    def run(lo, hi):
        for i in range(lo, hi):
            rng = path_rng(config.seed, i)
            drawn = draw(table, T, rng)
            times, usz = drawn[0], drawn[1]
            uacc = drawn[2] if thin else empty
            K.path_stats(times, usz, uacc, thin, table.fine, table.inv_h,
                         lam, T, dt, n, weights, solution.A_coef, A_max,
                         sc, window, big, stats[i], log_tilt[i])

    t0 = time.perf_counter()
    if config.threads == 1:
        run(0, N)
    else:
        bounds = np.linspace(0, N, 4 * config.threads + 1).astype(int)
        with ThreadPoolExecutor(config.threads) as ex:
            list(ex.map(run, bounds[:-1], bounds[1:]))
    elapsed = time.perf_counter() - t0
    return PathFunctionals(params, config, eps, mode, dt, stats, log_tilt, scales, comp_total,
                           _small_drift(measure, eps, config), window, big, elapsed)
