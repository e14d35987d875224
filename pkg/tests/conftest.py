import pytest

from streamrisk.closedform import ModelParams, solve
from streamrisk.levy import TemperedStableMeasure

# Reference parameter set and high-precision oracle values (mpmath, 30 digits).
ORACLE = {
    "density_z1": 0.0676676416183063,
    "density_z1_a1_b1": 0.367879441171442,
    "psi_04741": 0.317163447301576,
    "mean": 0.626657068657750,
    "mean_a1_b1": 1.77245385090552,
    "mass_above_001": 7.69270771587474,
    "drift_below_001": 0.0993373143595467,
    "A0": 0.474090419121418,
    "B0": 0.931099744331042,
    "phi_y1": 1.40519016345246,
    "driver_t0": 0.0200644613397663,
    "B0_over_T_T50": 1.26382587266705,
    "long_run_rate": 1.27496462582799,
    "tilted_mean_05": 0.723601254558268,
    "w_crit": 3.16395341373865,
    "critical_multiplier": 4.21860455165154,
}


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def measure():
    return TemperedStableMeasure(a=0.5, b=2.0, alpha=0.5)


@pytest.fixture(scope="session")
def solution(params, measure):
    return solve(params, measure)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
