"""Explicit solution of the streamflow diversion game.

The value function is

    Phi(t, x, y, u, m) = m * (w x + w' u - ln m + A_t y + B_t)

with A_t = (w_hat / lam) (1 - exp(lam (t - T))) and
B_t = int_t^T (q w_hat + psi(A_s)) ds, where psi is the exponential-moment
integral of the jump measure.  The minimizing diversion ratio is the static
g_bar, and the maximizing distortion is exp(A_t z) - 1.

Note on monotonicity: dA/dt = -w_hat exp(lam (t - T)) < 0, so A decreases
toward zero at the horizon, as does B.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .levy import Divergent, LevyMeasure

__all__ = [
    "ModelParams",
    "ClosedFormSolution",
    "TimeIntegral",
    "diversion_cost",
    "g_bar",
    "w_hat",
    "optimal_g",
    "solve",
]

DEFAULT_B_NODES = 2049


@dataclass(frozen=True)
class ModelParams:
    """Physical and preference parameters.

    lambda_ is the recession rate, q the baseflow, n the effort exponent,
    w and w_prime the flood and effort weights, T the horizon, and
    [g_lo, g_hi] the admissible diversion ratios.
    """

    lambda_: float = 1.0
    q: float = 1.0
    n: float = 2.0
    w: float = 1.0
    w_prime: float = 2.0
    T: float = 1.0
    g_lo: float = 0.0
    g_hi: float = 1.0

    def __post_init__(self):
        checks = [
            (self.lambda_ > 0, "lambda_ must be > 0"),
            (self.q >= 0, "q must be >= 0"),
            (self.n > 1, "n must be > 1"),
            (self.w > 0, "w must be > 0"),
            (self.w_prime > 0, "w_prime must be > 0"),
            (self.T > 0, "T must be > 0"),
            (0.0 <= self.g_lo <= self.g_hi <= 1.0, "need 0 <= g_lo <= g_hi <= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)
        for k, v in self.__dict__.items():
            if not math.isfinite(v):
                raise ValueError(f"{k} must be finite")

    @property
    def full_interval(self) -> bool:
        return self.g_lo == 0.0 and self.g_hi == 1.0

    def replace(self, **changes) -> "ModelParams":
        return ModelParams(**{**self.__dict__, **changes})


def diversion_cost(params: ModelParams, g):
    """Per-unit-flow running cost (1 - g) w + g**n w' / n."""
    g = np.asarray(g, dtype=float)
    return (1.0 - g) * params.w + g**params.n * params.w_prime / params.n


def g_bar(params: ModelParams) -> float:
    """Minimizer of the running cost over [g_lo, g_hi].

    The cost is strictly convex for n > 1; the clamped stationary point is
    compared against both endpoints anyway.
    """
    stat = (params.w / params.w_prime) ** (1.0 / (params.n - 1.0))
    candidates = [min(max(stat, params.g_lo), params.g_hi), params.g_lo, params.g_hi]
    costs = [float(diversion_cost(params, g)) for g in candidates]
    return candidates[int(np.argmin(costs))]


def w_hat(params: ModelParams) -> float:
    return float(diversion_cost(params, g_bar(params)))


def optimal_g(params: ModelParams) -> float:
    """Optimal constant diversion ratio.

    On the full interval [0, 1] this is 1 when w >= w', else
    (w / w')**(1 / (n - 1)).  Other intervals fall back to `g_bar`.
    """
    if not params.full_interval:
        return g_bar(params)
    if params.w >= params.w_prime:
        return 1.0
    return (params.w / params.w_prime) ** (1.0 / (params.n - 1.0))


class TimeIntegral:
    """Cumulative integral F(t) = int_0^t f(s) ds on [0, T].

    Tabulated on a uniform grid with composite Simpson and read back through a
    cubic spline.
    """

    def __init__(self, f: Callable[[float], float], T: float, n_nodes: int = DEFAULT_B_NODES):
        if n_nodes < 3:
            raise ValueError("need at least 3 nodes")
        self.T = float(T)
        self.nodes = np.linspace(0.0, self.T, n_nodes)
        vals = np.array([f(s) for s in self.nodes])
        self.values = cumulative_simpson(vals, x=self.nodes, initial=0.0)
        self.total = float(self.values[-1])
        self._spline = CubicSpline(self.nodes, self.values)

    def __call__(self, t):
        return self._spline(t)

    def between(self, t0, t1):
        return self(t1) - self(t0)


@dataclass(frozen=True)
class ClosedFormSolution:
    params: ModelParams
    measure: LevyMeasure
    g_bar: float
    w_hat: float
    a_multiplier: float = 1.0
    n_nodes: int = DEFAULT_B_NODES
    _b_integral: TimeIntegral | None = field(default=None, repr=False, compare=False)
    _divergence: Divergent | None = field(default=None, repr=False, compare=False)

    # -- coefficients --------------------------------------------------------
    @property
    def A_coef(self) -> float:
        return self.a_multiplier * self.w_hat / self.params.lambda_

    def _check_t(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.params.T):
            raise ValueError(f"t must lie in [0, {self.params.T}]")
        return t

    def A(self, t):
        """A_t; exactly zero at the horizon."""
        t = self._check_t(t)
        p = self.params
        out = -self.A_coef * np.expm1(p.lambda_ * (t - p.T)) + 0.0  # no -0.0 at t = T
        return float(out) if out.ndim == 0 else out

    @property
    def A_max(self) -> float:
        return self.A(0.0)

    @property
    def finite(self) -> bool:
        return self._divergence is None

    def psi_of_A(self, t) -> float:
        return self.measure.exp_moment_integral(self.A(t))

    def B(self, t):
        """B_t = int_t^T (q w_hat + psi(A_s)) ds; exactly zero at the horizon."""
        t = self._check_t(t)
        if self._divergence is not None:
            raise self._divergence
        F = self._b_integral
        out = F.total - F(t)
        out = np.where(t == self.params.T, 0.0, out)
        return float(out) if out.ndim == 0 else out

    # -- value function and optimizers ---------------------------------------
    def value(self, t, x, y, u, m):
        if m <= 0:
            raise ValueError("m must be positive")
        if min(x, y, u) < 0:
            raise ValueError("x, y, u must be nonnegative")
        p = self.params
        return m * (p.w * x + p.w_prime * u - math.log(m) + self.A(t) * y + self.B(t))

    def terminal(self, x, y, u, m):
        p = self.params
        return m * (p.w * x + p.w_prime * u - math.log(m))

    def optimal_g(self) -> float:
        return optimal_g(self.params)

    def theta_star(self, t, z):
        """Worst-case distortion exp(A_t z) - 1 (nonnegative)."""
        return np.expm1(self.A(t) * np.asarray(z, dtype=float))

    def long_run(self) -> tuple[float, float]:
        """Large-horizon approximations (A_0 ~ w_hat/lam, B_0/T ~ q w_hat + psi(w_hat/lam))."""
        p = self.params
        a0 = self.w_hat / p.lambda_
        return a0, p.q * self.w_hat + self.measure.exp_moment_integral(a0)

    def phi0(self, y0: float) -> float:
        """Phi(0, 0, y0, 0, 1) = A_0 y0 + B_0."""
        return self.A(0.0) * y0 + self.B(0.0)


def solve(
    params: ModelParams,
    measure: LevyMeasure,
    n_nodes: int = DEFAULT_B_NODES,
    a_multiplier: float = 1.0,
) -> ClosedFormSolution:
    """Build the explicit solution.

    When A_0 reaches the tempering rate the solution is still returned, but
    `B` and everything depending on it raise `Divergent`.  ``a_multiplier``
    deliberately mis-scales A and exists for negative-control experiments.
    """
    gb = g_bar(params)
    wh = float(diversion_cost(params, gb))
    sol = ClosedFormSolution(params, measure, gb, wh, a_multiplier, n_nodes)
    A0 = sol.A(0.0)
    if A0 >= measure.exp_bound:
        object.__setattr__(sol, "_divergence", Divergent(A0, measure.exp_bound, "B_0"))
        return sol
    f = lambda s: params.q * wh + measure.exp_moment_integral(sol.A(s))
    object.__setattr__(sol, "_b_integral", TimeIntegral(f, params.T, n_nodes))
    return sol
