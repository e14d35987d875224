"""Lévy measures for pure-jump subordinators.

`LevyMeasure` is the generic interface: everything is computed by adaptive
quadrature from `density`.  `TemperedStableMeasure` overrides the integrals
with Gamma-function closed forms; the quadrature path stays available through
``method="quad"`` and is what the closed forms are tested against.
"""
from __future__ import annotations

import math
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

__all__ = [
    "Divergent",
    "QuadratureError",
    "LevyMeasure",
    "TemperedStableMeasure",
    "IntegrabilityReport",
    "integrability_report",
    "distorted_measure",
]

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-8


class Divergent(ArithmeticError):
    """An exponential moment of the Lévy measure is infinite.

    Raised whenever an exponent reaches the tempering rate; for the control
    problem this is the regime where the value function is identically +inf.
    """

    def __init__(self, exponent: float, bound: float, what: str = "exp-moment integral"):
        self.exponent = float(exponent)
        self.bound = float(bound)
        super().__init__(f"{what} diverges: exponent {exponent:.6g} >= tempering rate {bound:.6g}")


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


def _quad(f, lo, hi, what):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, info, *rest = integrate.quad(
            f, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=500, full_output=1
        )
    # a trailing message means QUADPACK flagged a problem; tolerate it only if the error estimate is fine
    if rest and err > max(QUAD_EPSABS, QUAD_EPSREL * abs(val)) * 100:
        raise QuadratureError(f"{what}: quadrature failed on [{lo}, {hi}] (err={err:.3g}): {rest[0]}")
    return val


class LevyMeasure(ABC):
    """Lévy measure on (0, inf) with finite variation.

    Subclasses provide `density`, the small-jump power index `singularity`
    (density ~ z**(-1 - singularity) near zero) and `exp_bound`, the supremum
    of exponents A for which the measure integrates exp(A z) at infinity.
    """

    singularity: float
    exp_bound: float

    @abstractmethod
    def density(self, z):
        ...

    def _raw_density(self, z):
        return self.density(z)

    # -- quadrature machinery ------------------------------------------------
    def _integrate(self, h, lo=0.0, hi=math.inf, what="integral"):
        """Integrate h(z) * density(z) over (lo, hi).

        The piece below 1 uses z = s**p with p = 1/(1 - singularity), which
        turns an integrand of order z**(-singularity) at zero into a bounded one.
        """
        total = 0.0
        if lo < 1.0:
            p = 1.0 / (1.0 - self.singularity)

            def g(s):
                z = s**p
                if z <= 0.0:
                    return 0.0
                d = self._raw_density(z)
                return h(z) * d * p * s ** (p - 1.0) if d else 0.0

            top = min(hi, 1.0)
            total += _quad(g, lo ** (1.0 / p), top ** (1.0 / p), what)
        if hi > 1.0:

            def g_tail(z):
                d = self._raw_density(z)
                return h(z) * d if d else 0.0

            total += _quad(g_tail, max(lo, 1.0), hi, what)
        return total

    def _check_exponent(self, A):
        if A >= self.exp_bound:
            raise Divergent(A, self.exp_bound)

    def exp_moment_integral(self, A: float, method: str = "quad") -> float:
        """psi(A) = int (exp(A z) - 1) nu(dz)."""
        A = float(A)
        self._check_exponent(A)
        if A == 0.0:
            return 0.0
        return self._integrate(lambda z: math.expm1(A * z), what="psi")

    def mean_jump(self, method: str = "quad") -> float:
        return self._integrate(lambda z: z, what="mean_jump")

    def tail_mass(self, eps: float, method: str = "quad") -> float:
        """int_eps^inf nu(dz)."""
        if eps <= 0:
            return math.inf
        if eps < 1.0:
            # log substitution keeps the integrand flat near the cutoff
            head = _quad(lambda s: self._raw_density(math.exp(s)) * math.exp(s), math.log(eps), 0.0, "tail")
            return head + _quad(self._raw_density, 1.0, math.inf, "tail")
        return _quad(self._raw_density, eps, math.inf, "tail")

    def small_mean(self, eps: float, method: str = "quad") -> float:
        """int_0^eps z nu(dz), the drift carried by jumps below eps."""
        if eps <= 0:
            return 0.0
        if math.isinf(eps):
            return self.mean_jump(method)
        return self._integrate(lambda z: z, 0.0, eps, what="small_mean")

    def small_exp_moment(self, A: float, eps: float, method: str = "quad") -> float:
        """int_0^eps (exp(A z) - 1) nu(dz)."""
        if eps <= 0 or A == 0.0:
            return 0.0
        return self._integrate(lambda z: math.expm1(A * z), 0.0, eps, what="small_psi")

    def truncated_exp_moment(self, A: float, eps: float, method: str = "quad") -> float:
        """int_eps^inf (exp(A z) - 1) nu(dz): the compensator seen by jumps above eps."""
        return self.exp_moment_integral(A, method) - self.small_exp_moment(A, eps, method)

    def small_jump_stats(self, eps: float, method: str = "quad") -> tuple[float, float]:
        """(intensity retained above eps, drift per unit time lost below eps)."""
        if eps <= 0:
            raise ValueError("eps must be positive")
        return self.tail_mass(eps, method), self.small_mean(eps, method)

    def tilted(self, A: float) -> "LevyMeasure":
        self._check_exponent(A)
        return _TiltedMeasure(self, A)

    def truncation_for_drift(self, fraction: float) -> float:
        """Largest eps with small_mean(eps) <= fraction * mean_jump."""
        target = fraction * self.mean_jump()
        f = lambda le: self.small_mean(math.exp(le)) - target
        return math.exp(optimize.brentq(f, -60.0, 5.0, xtol=1e-12))

    def check_finite_variation(self) -> float:
        """int min(1, z) nu(dz); raises if not finite."""
        val = self._integrate(lambda z: min(1.0, z), what="min(1,z)")
        if not math.isfinite(val):
            raise ValueError("Lévy measure does not satisfy int min(1, z) nu(dz) < inf")
        return val


class _TiltedMeasure(LevyMeasure):
    def __init__(self, base: LevyMeasure, A: float):
        self.base = base
        self.A = float(A)
        self.singularity = base.singularity
        self.exp_bound = base.exp_bound - self.A

    def density(self, z):
        return self.base.density(z) * np.exp(self.A * np.asarray(z, dtype=float))

    def _raw_density(self, z):
        d = self.base._raw_density(z)
        return d * math.exp(self.A * z) if d else 0.0


@dataclass(frozen=True)
class TemperedStableMeasure(LevyMeasure):
    """nu(dz) = scale * a * z**(-1 - alpha) * exp(-b z) dz on z > 0.

    ``scale`` is kept apart from the recession rate of the flow model even
    though the original calibration ties them together.
    """

    a: float
    b: float
    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "scale"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        self.check_finite_variation()

    @property
    def singularity(self) -> float:
        return self.alpha

    @property
    def exp_bound(self) -> float:
        return self.b

    @property
    def _c(self) -> float:
        return self.scale * self.a

    def density(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z <= 0):
            raise ValueError("density is defined for z > 0 only")
        out = self._c * z ** (-1.0 - self.alpha) * np.exp(-self.b * z)
        return float(out) if out.ndim == 0 else out

    def _raw_density(self, z):
        return self._c * z ** (-1.0 - self.alpha) * math.exp(-self.b * z)

    # Gamma(-alpha, x) through the recurrence from Gamma(1 - alpha, x)
    def _upper_gamma_neg(self, x):
        al = self.alpha
        x = np.asarray(x, dtype=float)
        return (x ** (-al) * np.exp(-x) - special.gammaincc(1.0 - al, x) * special.gamma(1.0 - al)) / al

    def exp_moment_integral(self, A: float, method: str = "closed") -> float:
        A = float(A)
        self._check_exponent(A)
        if method == "quad":
            return super().exp_moment_integral(A)
        if A == 0.0:
            return 0.0
        al = self.alpha
        # (b - A)**al - b**al, written to avoid cancellation for small A
        diff = self.b**al * math.expm1(al * math.log1p(-A / self.b))
        return self._c * special.gamma(-al) * diff

    def mean_jump(self, method: str = "closed") -> float:
        if method == "quad":
            return super().mean_jump()
        return self._c * special.gamma(1.0 - self.alpha) * self.b ** (self.alpha - 1.0)

    def second_moment(self) -> float:
        return self._c * special.gamma(2.0 - self.alpha) * self.b ** (self.alpha - 2.0)

    def tail_mass(self, eps, method: str = "closed"):
        if method == "quad":
            return super().tail_mass(eps)
        eps_arr = np.asarray(eps, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self._c * self.b**self.alpha * self._upper_gamma_neg(self.b * eps_arr)
        out = np.where(eps_arr <= 0, np.inf, np.where(np.isinf(eps_arr), 0.0, out))
        return float(out) if out.ndim == 0 else out

    def small_mean(self, eps: float, method: str = "closed") -> float:
        if method == "quad":
            return super().small_mean(eps)
        if eps <= 0:
            return 0.0
        return self.mean_jump() * special.gammainc(1.0 - self.alpha, self.b * eps)

    def small_exp_moment(self, A: float, eps: float, method: str = "closed") -> float:
        if method == "quad":
            return super().small_exp_moment(A, eps)
        if eps <= 0 or A == 0.0:
            return 0.0
        b, al = self.b, self.alpha
        if b * eps > 1.0 or abs(A) * eps > 1.0:
            return super().small_exp_moment(A, eps)
        # int_0^eps z**(-1-al) (exp(-(b-A) z) - exp(-b z)) dz, termwise
        total, k, fact = 0.0, 1, 1.0
        while True:
            fact *= k
            term = ((A - b) ** k - (-b) ** k) / fact * eps ** (k - al) / (k - al)
            total += term
            if abs(term) <= 1e-17 * abs(total) or k > 60:
                break
            k += 1
        return self._c * total

    def tilted(self, A: float) -> "TemperedStableMeasure":
        self._check_exponent(A)
        return TemperedStableMeasure(self.a, self.b - A, self.alpha, self.scale)

    def truncation_for_drift(self, fraction: float) -> float:
        return float(special.gammaincinv(1.0 - self.alpha, fraction) / self.b)

    def check_finite_variation(self) -> float:
        # int_0^1 z nu + int_1^inf nu, bounded by scale*a*(1/(1-alpha) + 1/alpha)
        val = super().check_finite_variation()
        bound = self._c * (1.0 / (1.0 - self.alpha) + 1.0 / self.alpha)
        if not val <= bound * (1 + 1e-8):
            raise ValueError("finite-variation check failed")
        return val


def distorted_measure(measure: LevyMeasure, A: float) -> LevyMeasure:
    """The exponentially tilted measure exp(A z) nu(dz).

    Tilting a tempered stable measure lowers its tempering rate to b - A.
    """
    return measure.tilted(A)


@dataclass(frozen=True)
class IntegrabilityReport:
    A_max: float
    bound: float
    value_finite: bool
    value_margin: float
    square_integrable: bool
    square_margin: float
    at_threshold: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def integrability_report(measure: LevyMeasure, A_max: float, tol: float = 1e-9) -> IntegrabilityReport:
    """Diagnose which integrability conditions hold for exponents up to A_max.

    The value is finite while A_max < b.  The worst-case distortion
    exp(A z) - 1 is square integrable only for A_max <= b / 2.
    """
    if A_max < 0:
        raise ValueError("A_max must be nonnegative")
    b = measure.exp_bound
    return IntegrabilityReport(
        A_max=float(A_max),
        bound=float(b),
        value_finite=A_max < b,
        value_margin=float(b - A_max),
        square_integrable=A_max <= 0.5 * b,
        square_margin=float(0.5 * b - A_max),
        at_threshold=abs(A_max - b) <= tol * max(1.0, b),
    )
