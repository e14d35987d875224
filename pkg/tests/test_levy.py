import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from streamrisk.levy import (
    Divergent,
    LevyMeasure,
    TemperedStableMeasure,
    distorted_measure,
    integrability_report,
)

from conftest import ORACLE


class GammaLikeMeasure(LevyMeasure):
    """c z^(-1-s) exp(-b z) implemented only through its density."""

    def __init__(self, c, b, s):
        self.c, self.b, self.singularity, self.exp_bound = c, b, s, b

    def density(self, z):
        z = np.asarray(z, dtype=float)
        return self.c * z ** (-1 - self.singularity) * np.exp(-self.b * z)

    def _raw_density(self, z):
        return self.c * z ** (-1 - self.singularity) * math.exp(-self.b * z)


def test_density_oracle(measure):
    assert measure.density(1.0) == pytest.approx(ORACLE["density_z1"], rel=1e-14)
    assert TemperedStableMeasure(1.0, 1.0, 0.5).density(1.0) == pytest.approx(ORACLE["density_z1_a1_b1"], rel=1e-14)


def test_density_rejects_nonpositive(measure):
    with pytest.raises(ValueError):
        measure.density(0.0)


@pytest.mark.parametrize("method", ["closed", "quad"])
def test_psi_and_mean_oracle(measure, method):
    assert measure.exp_moment_integral(0.4741, method) == pytest.approx(ORACLE["psi_04741"], rel=1e-8)
    assert measure.mean_jump(method) == pytest.approx(ORACLE["mean"], rel=1e-8)
    assert TemperedStableMeasure(1.0, 1.0, 0.5).mean_jump(method) == pytest.approx(math.sqrt(math.pi), rel=1e-8)


@pytest.mark.parametrize("method", ["closed", "quad"])
def test_small_jump_stats_oracle(measure, method):
    mass, drift = measure.small_jump_stats(0.01, method)
    assert mass == pytest.approx(ORACLE["mass_above_001"], rel=1e-8)
    assert drift == pytest.approx(ORACLE["drift_below_001"], rel=1e-8)
    # the lost drift is a sizeable share of the mean at this cutoff
    assert drift / measure.mean_jump() == pytest.approx(0.1585, abs=1e-3)


def test_psi_zero_and_divergence(measure):
    assert measure.exp_moment_integral(0.0) == 0.0
    for A in (2.0, 2.5):
        with pytest.raises(Divergent):
            measure.exp_moment_integral(A)
        with pytest.raises(Divergent):
            measure.exp_moment_integral(A, method="quad")
    with pytest.raises(ArithmeticError):
        measure.tilted(2.0)


def test_psi_near_bound_finite_and_increasing(measure):
    vals = [measure.exp_moment_integral(A) for A in (1.9, 1.99, 1.999999)]
    assert all(np.isfinite(vals)) and vals == sorted(vals)


@settings(max_examples=20, deadline=None)
@given(
    a=st.floats(0.1, 3.0),
    b=st.floats(0.3, 5.0),
    alpha=st.floats(0.05, 0.9),
    frac=st.sampled_from([0.0, 0.25, 0.5, 0.9]),
)
def test_closed_form_matches_quadrature(a, b, alpha, frac):
    m = TemperedStableMeasure(a, b, alpha)
    A = frac * b
    closed, quad = m.exp_moment_integral(A), m.exp_moment_integral(A, method="quad")
    assert closed == pytest.approx(quad, rel=1e-6, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(A1=st.floats(-1.0, 1.9), A2=st.floats(-1.0, 1.9))
def test_psi_monotone_and_convex(measure, A1, A2):
    lo, hi = sorted((A1, A2))
    psi = measure.exp_moment_integral
    assert psi(lo) <= psi(hi) + 1e-15
    mid = 0.5 * (lo + hi)
    assert psi(mid) <= 0.5 * (psi(lo) + psi(hi)) + 1e-12


@settings(max_examples=25, deadline=None)
@given(eps=st.floats(1e-8, 3.0))
def test_mass_and_drift_decomposition(measure, eps):
    big_mean = measure._integrate(lambda z: z, eps, math.inf)
    assert measure.small_mean(eps) + big_mean == pytest.approx(measure.mean_jump(), rel=1e-7)
    assert measure.tail_mass(eps) == pytest.approx(measure.tail_mass(eps, method="quad"), rel=1e-7)


def test_tail_mass_limits(measure):
    assert measure.tail_mass(0.0) == math.inf
    assert measure.tail_mass(40.0) < 1e-30
    tails = measure.tail_mass(np.geomspace(1e-6, 10, 50))
    assert np.all(np.diff(tails) < 0)


def test_small_exp_moment_series_vs_quad(measure):
    for A, eps in [(0.47, 1e-4), (1.5, 0.3), (-0.5, 0.2), (0.47, 2.0)]:
        assert measure.small_exp_moment(A, eps) == pytest.approx(
            measure.small_exp_moment(A, eps, method="quad"), rel=1e-8, abs=1e-14
        )


def test_truncation_for_drift(measure):
    eps = measure.truncation_for_drift(1e-4)
    assert measure.small_mean(eps) == pytest.approx(1e-4 * measure.mean_jump(), rel=1e-9)
    generic = GammaLikeMeasure(0.5, 2.0, 0.5)
    assert generic.truncation_for_drift(1e-4) == pytest.approx(eps, rel=1e-6)


def test_tilted_measure(measure):
    t = measure.tilted(0.5)
    assert isinstance(t, TemperedStableMeasure) and t.b == 1.5
    assert t.mean_jump() == pytest.approx(ORACLE["tilted_mean_05"], rel=1e-10)
    # derivative of psi is the tilted mean
    h = 1e-6
    dpsi = (measure.exp_moment_integral(0.5 + h) - measure.exp_moment_integral(0.5 - h)) / (2 * h)
    assert dpsi == pytest.approx(t.mean_jump(), rel=1e-7)
    assert distorted_measure(measure, 0.0) == measure


def test_generic_measure_quadrature_route(measure):
    g = GammaLikeMeasure(0.5, 2.0, 0.5)
    assert g.exp_moment_integral(0.4741) == pytest.approx(ORACLE["psi_04741"], rel=1e-7)
    assert g.mean_jump() == pytest.approx(ORACLE["mean"], rel=1e-7)
    gt = distorted_measure(g, 0.5)
    assert gt.exp_bound == 1.5
    assert gt.mean_jump() == pytest.approx(ORACLE["tilted_mean_05"], rel=1e-7)
    with pytest.raises(Divergent):
        g.exp_moment_integral(2.0)


@pytest.mark.parametrize("kwargs", [dict(a=0, b=1, alpha=0.5), dict(a=1, b=-1, alpha=0.5),
                                    dict(a=1, b=1, alpha=1.0), dict(a=1, b=1, alpha=0.0)])
def test_invalid_parameters(kwargs):
    with pytest.raises(ValueError):
        TemperedStableMeasure(**kwargs)


def test_integrability_report(measure):
    r = integrability_report(measure, 0.47409)
    assert r.value_finite and r.square_integrable and not r.at_threshold
    r = integrability_report(measure, 1.5)
    assert r.value_finite and not r.square_integrable
    r = integrability_report(measure, 2.0)
    assert not r.value_finite and r.at_threshold
    with pytest.raises(ValueError):
        integrability_report(measure, -1.0)
