"""Monte Carlo evaluation of the entropic performance functional.

J(g, theta) = E_P[M_T (w X_T + w' U_T - ln M_T)] is always estimated under
the reference measure, so one simulator serves every distortion.  Comparisons
between arms reuse the same jump skeleton (common random numbers).
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .closedform import ClosedFormSolution, ModelParams, TimeIntegral, solve
from .levy import LevyMeasure
from .sim import (
    Distortion,
    PathFunctionals,
    Policy,
    SimConfig,
    path_rng,
    simulate_functionals,
    simulate_path,
)

__all__ = [
    "McEstimate",
    "SaddleReport",
    "RouteReport",
    "Z_PASS",
    "estimate_J",
    "j_samples",
    "saddle_check",
    "relative_entropy",
    "worst_case_entropy",
    "martingale_check",
    "route_equivalence",
]

Z_PASS = 3.0


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int
    seed: int
    elapsed: float = 0.0

    @classmethod
    def from_samples(cls, samples, seed: int, elapsed: float = 0.0) -> "McEstimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.shape[0]
        se = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        return cls(float(samples.mean()), se, n, seed, elapsed)

    def within(self, target: float, z: float = Z_PASS) -> bool:
        return abs(self.mean - target) <= z * self.std_error

    def as_dict(self) -> dict:
        return asdict(self)


def _solution_for(params, measure, distortion, solution):
    if solution is not None:
        return solution
    if distortion.solution is not None:
        return distortion.solution
    return solve(params, measure)


def j_samples(fn: PathFunctionals, g: float, c: float, y0: float) -> np.ndarray:
    """Per-path M_T (w X_T + w' U_T - ln M_T) for constant ratio g and distortion c * theta*."""
    log_m = fn.log_M_T(c)
    return np.exp(log_m) * (fn.cost(g, y0) - log_m)


def _fast_path_ok(policy: Policy | None, distortion: Distortion) -> bool:
    return (policy is None or policy.constant is not None) and distortion.kind in ("zero", "worst_case")


def _path_loop(params, measure, policy, distortion, config, fn):
    out = np.empty(config.n_paths)
    for i in range(config.n_paths):
        tr = simulate_path(params, measure, policy, distortion, config, path_rng(config.seed, i))
        out[i] = fn(tr)
    return out


def estimate_J(
    params: ModelParams,
    measure: LevyMeasure,
    policy: Policy,
    distortion: Distortion,
    config: SimConfig,
    solution: ClosedFormSolution | None = None,
) -> McEstimate:
    """Estimate J from (0, config.y0, 0, 1) over config.n_paths reference paths."""
    t0 = time.perf_counter()
    if _fast_path_ok(policy, distortion):
        sol = _solution_for(params, measure, distortion, solution)
        c = distortion.scale
        fn = simulate_functionals(params, measure, sol, config, scales=(c,) if c else ())
        samples = j_samples(fn, policy.constant, c, config.y0)
    else:
        def payoff(tr):
            m = tr.M[-1]
            return m * (params.w * tr.X[-1] + params.w_prime * tr.U[-1] - math.log(m))

        samples = _path_loop(params, measure, policy, distortion, config, payoff)
    return McEstimate.from_samples(samples, config.seed, time.perf_counter() - t0)


def relative_entropy(
    params: ModelParams,
    measure: LevyMeasure,
    distortion: Distortion,
    config: SimConfig,
    solution: ClosedFormSolution | None = None,
) -> McEstimate:
    """E_Q[ln M_T] = E_P[M_T ln M_T], the entropic penalty."""
    t0 = time.perf_counter()
    if distortion.is_zero:
        return McEstimate(0.0, 0.0, config.n_paths, config.seed, 0.0)
    if _fast_path_ok(None, distortion):
        sol = _solution_for(params, measure, distortion, solution)
        fn = simulate_functionals(params, measure, sol, config, scales=(distortion.scale,))
        log_m = fn.log_M_T(distortion.scale)
        samples = np.exp(log_m) * log_m
    else:
        pol = Policy.optimal(params)
        samples = _path_loop(params, measure, pol, distortion, config, lambda tr: tr.M[-1] * math.log(tr.M[-1]))
    return McEstimate.from_samples(samples, config.seed, time.perf_counter() - t0)


def worst_case_entropy(solution: ClosedFormSolution, eps: float) -> float:
    """E_Q[ln M_T] for theta* restricted to jumps above eps.

    Under Q the jumps have intensity exp(A_s z) nu(dz), so the entropy is
    int_0^T int_eps (A_s z exp(A_s z) - exp(A_s z) + 1) nu(dz) ds.
    """
    measure = solution.measure

    def rate(s):
        A = solution.A(s)
        if A == 0.0:
            return 0.0
        tilted = measure.tilted(A)
        big_mean = tilted.mean_jump() - tilted.small_mean(eps)
        return A * big_mean - measure.truncated_exp_moment(A, eps)

    return float(TimeIntegral(rate, solution.params.T).total)


def martingale_check(
    measure: LevyMeasure,
    distortion: Distortion,
    config: SimConfig,
    params: ModelParams | None = None,
) -> McEstimate:
    """Monte Carlo mean of M_T; the density process must average to one."""
    t0 = time.perf_counter()
    if distortion.is_zero:
        return McEstimate(1.0, 0.0, config.n_paths, config.seed, 0.0)
    if params is None:
        if distortion.solution is None:
            raise ValueError("params are required for a custom distortion")
        params = distortion.solution.params
    if _fast_path_ok(None, distortion):
        fn = simulate_functionals(params, measure, distortion.solution, config, scales=(distortion.scale,))
        samples = fn.M_T(distortion.scale)
    else:
        pol = Policy.optimal(params)
        samples = _path_loop(params, measure, pol, distortion, config, lambda tr: tr.M[-1])
    return McEstimate.from_samples(samples, config.seed, time.perf_counter() - t0)


@dataclass
class SaddleReport:
    g_star: float
    reference: McEstimate
    policy_arms: list = field(default_factory=list)
    distortion_arms: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(a["pass"] for a in self.policy_arms + self.distortion_arms)

    def as_dict(self) -> dict:
        return dict(
            g_star=self.g_star,
            reference=self.reference.as_dict(),
            policy_arms=self.policy_arms,
            distortion_arms=self.distortion_arms,
            passed=self.passed,
            elapsed=self.elapsed,
        )


def _paired(a, b):
    d = a - b
    return float(d.mean()), float(d.std(ddof=1) / math.sqrt(d.shape[0]))


def saddle_check(
    params: ModelParams,
    measure: LevyMeasure,
    solution: ClosedFormSolution,
    config: SimConfig,
    g_perturbations=(-0.2, 0.2),
    theta_scales=(0.0, 0.5, 1.5),
    functionals: PathFunctionals | None = None,
) -> SaddleReport:
    """Check both one-sided saddle inequalities around (g*, theta*).

    Each policy arm g = clamp(g* + delta) must satisfy
    J(g, theta*) >= J(g*, theta*) - 3 SE_diff, and each distortion arm
    J(g*, c theta*) <= J(g*, theta*) + 3 SE_diff.  All arms share paths.
    """
    for d in g_perturbations:
        if not math.isfinite(d) or abs(d) > 1:
            raise ValueError(f"inadmissible ratio perturbation {d!r}")
    for c in theta_scales:
        if not math.isfinite(c) or c < 0:
            raise ValueError(f"inadmissible distortion scale {c!r}")
    Distortion.worst_case(solution, 1.0)  # square-integrability of theta*
    t0 = time.perf_counter()
    g_star = solution.optimal_g()
    y0 = config.y0
    scales = tuple(sorted({1.0, *map(float, theta_scales)} - {0.0}))
    fn = functionals or simulate_functionals(params, measure, solution, config, scales=scales)
    base = j_samples(fn, g_star, 1.0, y0)
    rep = SaddleReport(g_star, McEstimate.from_samples(base, config.seed))
    for d in g_perturbations:
        g = min(max(g_star + d, params.g_lo), params.g_hi)
        arm = j_samples(fn, g, 1.0, y0)
        diff, se = _paired(arm, base)
        rep.policy_arms.append(dict(
            offset=float(d), g=g, J=float(arm.mean()), J_se=float(arm.std(ddof=1) / math.sqrt(arm.shape[0])),
            diff=diff, se_diff=se, margin=diff + Z_PASS * se, **{"pass": diff >= -Z_PASS * se},
        ))
    for c in theta_scales:
        arm = j_samples(fn, g_star, float(c), y0)
        diff, se = _paired(arm, base)
        rep.distortion_arms.append(dict(
            scale=float(c), J=float(arm.mean()), J_se=float(arm.std(ddof=1) / math.sqrt(arm.shape[0])),
            diff=diff, se_diff=se, margin=Z_PASS * se - diff, **{"pass": diff <= Z_PASS * se},
        ))
    rep.elapsed = time.perf_counter() - t0
    return rep


@dataclass
class RouteReport:
    weighted: McEstimate
    direct: McEstimate
    weighted_Y: McEstimate
    direct_Y: McEstimate
    intensity: McEstimate
    intensity_target: float
    big_intensity: McEstimate
    big_intensity_target: float
    big_reference_rate: float
    window: float
    big: float

    @staticmethod
    def _agree(a: McEstimate, b: McEstimate) -> bool:
        return abs(a.mean - b.mean) <= Z_PASS * math.hypot(a.std_error, b.std_error)

    @property
    def x_pass(self) -> bool:
        return self._agree(self.weighted, self.direct)

    @property
    def y_pass(self) -> bool:
        return self._agree(self.weighted_Y, self.direct_Y)

    @property
    def intensity_pass(self) -> bool:
        return self.intensity.within(self.intensity_target) and self.big_intensity.within(self.big_intensity_target)

    @property
    def passed(self) -> bool:
        return self.x_pass and self.y_pass and self.intensity_pass

    def as_dict(self) -> dict:
        d = {k: (v.as_dict() if isinstance(v, McEstimate) else v) for k, v in self.__dict__.items()}
        d.update(x_pass=self.x_pass, y_pass=self.y_pass, intensity_pass=self.intensity_pass, passed=self.passed)
        return d


def route_equivalence(
    params: ModelParams,
    measure: LevyMeasure,
    solution: ClosedFormSolution,
    config: SimConfig,
    window: float | None = None,
    big: float = 0.5,
    reference: PathFunctionals | None = None,
) -> RouteReport:
    """Compare E_Q[X_T], E_Q[Y_T] from M-weighted and from thinned simulation.

    Also compares the jump intensity of the thinned simulation on [0, window)
    with the tilted intensity int_eps exp(A_0 z) nu(dz), both for all jumps
    and for jumps above ``big``.  The two simulations use disjoint seeds.
    """
    window = 0.01 * params.T if window is None else window
    g = solution.optimal_g()
    y0 = config.y0
    ref = reference or simulate_functionals(params, measure, solution, config, scales=(1.0,), mode="reference")
    wc_cfg = config.replace(seed=(config.seed + 1) % 2**64)
    wc = simulate_functionals(params, measure, solution, wc_cfg, window=window, big=big, mode="worst_case")
    M = ref.M_T(1.0)
    eps = ref.eps
    tilted = measure.tilted(solution.A_max)
    return RouteReport(
        weighted=McEstimate.from_samples(M * ref.X_T(g, y0), config.seed),
        direct=McEstimate.from_samples(wc.X_T(g, y0), wc_cfg.seed, wc.elapsed),
        weighted_Y=McEstimate.from_samples(M * ref.Y_T(y0), config.seed),
        direct_Y=McEstimate.from_samples(wc.Y_T(y0), wc_cfg.seed),
        intensity=McEstimate.from_samples(wc.window_counts / window, wc_cfg.seed),
        intensity_target=float(tilted.tail_mass(eps)),
        big_intensity=McEstimate.from_samples(wc.window_big_counts / window, wc_cfg.seed),
        big_intensity_target=float(tilted.tail_mass(max(big, eps))),
        big_reference_rate=float(measure.tail_mass(max(big, eps))),
        window=window,
        big=big,
    )
