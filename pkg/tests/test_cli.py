import csv
import json
import math

import pytest

from streamrisk import __version__
from streamrisk.cli import main
from streamrisk.config import ConfigError, parse_config, paper_defaults

from conftest import ORACLE


def _cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _report(out):
    return json.loads((out / "report.json").read_text())


def test_parse_config_values():
    cfg = parse_config("""
        # comment line
        model.lambda = 2.5
        measure.b = 3      # trailing comment
        sim.eps = auto
        sim.compensate_small_jumps = false
        sim.seed = 12345
        y0 = 0.5
        saddle.theta_scales = 0, 0.25, 2
        scan.parameter = T
        bsde.levels = 4
    """)
    assert cfg.model.lambda_ == 2.5 and cfg.measure.b == 3.0
    assert cfg.sim.eps is None and not cfg.sim.compensate_small_jumps and cfg.sim.seed == 12345
    assert cfg.y0 == 0.5 and cfg.sim.y0 == 0.5
    assert cfg.saddle.theta_scales == (0.0, 0.25, 2.0)
    assert cfg.scan.parameter == "T" and cfg.bsde.levels == 4
    assert cfg.resolved()["model"]["lambda"] == 2.5


@pytest.mark.parametrize("text,fragment", [
    ("model.foo = 1", "model.foo"),
    ("nothing.x = 1", "nothing"),
    ("model.n = 1", "model"),
    ("measure.alpha = 1.5", "measure"),
    ("sim.dt = fast", "sim.dt"),
    ("sim.dt = 0", "sim"),
    ("y0 = -1", "y0"),
    ("scan.parameter = q", "scan.parameter"),
    ("saddle.g_perturbations = 2", "saddle.g_perturbations"),
    ("bsde.scheme = rk4", "bsde.scheme"),
    ("model.w", "line 1"),
    ("sim.compensate_small_jumps = maybe", "sim.compensate_small_jumps"),
])
def test_config_errors_name_the_field(text, fragment):
    with pytest.raises(ConfigError, match=fragment.replace(".", r"\.")):
        parse_config(text)


def test_paper_defaults():
    cfg = paper_defaults()
    assert cfg.sim.n_paths == 100_000 and cfg.y0 == 1.0 and cfg.sim.eps is None
    assert (cfg.measure.a, cfg.measure.b, cfg.measure.alpha) == (0.5, 2.0, 0.5)


def test_solve_reference(tmp_path, capsys):
    assert main(["solve", "--paper-defaults", "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path)
    assert rep["g_bar"] == 0.5 and rep["w_hat"] == 0.75 and rep["g_star"] == 0.5
    assert rep["A0"] == pytest.approx(ORACLE["A0"], rel=1e-12)
    assert rep["B0"] == pytest.approx(ORACLE["B0"], rel=1e-12)
    assert rep["Phi0"] == pytest.approx(ORACLE["phi_y1"], rel=1e-12)
    assert rep["long_run"]["B0_over_T"] == pytest.approx(ORACLE["long_run_rate"], rel=1e-12)
    assert rep["integrability"]["square_integrable"]
    assert rep["artifact_version"] == __version__ and rep["config"]["measure"]["b"] == 2.0
    assert "0.47409041912141" in capsys.readouterr().out


def test_solve_divergent(tmp_path):
    path = _cfg(tmp_path, "model.w = 10\nmodel.w_prime = 20\n")
    assert main(["solve", "--paper-defaults", "--config", path, "--out", str(tmp_path)]) == 3
    rep = _report(tmp_path)
    assert rep["B0"] == "Divergent" and rep["A0"] == pytest.approx(7.5 * (1 - math.exp(-1)))
    path = _cfg(tmp_path, "model.w = 10\nmodel.w_prime = 20\nexpect_divergent = true\n")
    assert main(["solve", "--config", path, "--out", str(tmp_path)]) == 0


def test_solve_corner_policy(tmp_path):
    path = _cfg(tmp_path, "model.w = 3\nmodel.w_prime = 2\n")
    assert main(["solve", "--config", path, "--out", str(tmp_path)]) == 0
    assert _report(tmp_path)["g_star"] == 1.0


def test_config_error_exit_codes(tmp_path):
    assert main(["solve", "--out", str(tmp_path)]) == 2
    assert main(["solve", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["solve", "--config", _cfg(tmp_path, "model.n = 0.5\n")]) == 2
    assert main(["solve", "--paper-defaults", "--paths", "0"]) == 2
    div = _cfg(tmp_path, "model.w = 10\nmodel.w_prime = 20\n")
    assert main(["bsde", "--config", div, "--out", str(tmp_path)]) == 2


def _scan_rows(out):
    with open(out / "scan.csv") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_threshold_scan(tmp_path):
    assert main(["threshold-scan", "--paper-defaults", "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path)
    assert rep["predicted_crossing"] == pytest.approx(ORACLE["critical_multiplier"], rel=1e-12)
    assert rep["crossing_match"] and rep["B0_increasing"]
    assert abs(rep["observed_crossing"] - rep["predicted_crossing"]) <= rep["grid_step"]
    rows = _scan_rows(tmp_path)
    assert list(rows[0]) == ["multiplier", "A0", "A0_over_b", "B0", "square_integrable"]
    for r in rows:
        x = float(r["multiplier"])
        assert (r["B0"] == "Divergent") == (x > rep["predicted_crossing"])
        assert (r["square_integrable"] == "true") == (float(r["A0_over_b"]) <= 0.5)
    head = (tmp_path / "scan.csv").read_text().splitlines()
    assert head[0] == f"# artifact_version: {__version__}" and head[1].startswith("# config: {")


def test_threshold_scan_small_weights(tmp_path):
    path = _cfg(tmp_path, "scan.start = 1e-6\nscan.stop = 1e-3\nscan.num = 5\n")
    assert main(["threshold-scan", "--config", path, "--out", str(tmp_path)]) == 0
    rows = _scan_rows(tmp_path)
    a0, b0 = float(rows[0]["A0"]), float(rows[0]["B0"])
    # both vanish linearly: B_0 ~ q w_hat T + mean_jump * int_0^T A_s ds
    w = 1e-6 * 0.75
    assert a0 < 1e-6 and b0 == pytest.approx(w + ORACLE["mean"] * w * math.exp(-1), rel=1e-5)


def test_threshold_scan_over_horizon(tmp_path):
    # w_hat / lam = 3 > b, so A_0 crosses b at T = -log(1 - 2/3)
    path = _cfg(tmp_path, "model.w = 4\nmodel.w_prime = 8\nscan.parameter = T\nscan.start = 0.1\nscan.stop = 3\n"
                          "scan.num = 59\n")
    assert main(["threshold-scan", "--config", path, "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path)
    assert rep["predicted_crossing"] == pytest.approx(math.log(3.0))
    assert rep["crossing_match"]


def test_bsde_command(tmp_path):
    assert main(["bsde", "--paper-defaults", "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path)
    assert all(rep["checks"].values())
    assert all(2.8 <= r <= 5.2 for r in rep["drift_ratios"])
    assert rep["exact_scheme"]["no_jump_max"] < 1e-10
    assert rep["truncation"]["ratio"] == pytest.approx(rep["truncation"]["expected_ratio"], rel=1e-2)
    assert {"dt", "eps", "max_residual", "mean_residual", "n_paths"} <= set(rep["levels"][0])


def test_verify_small_run(tmp_path):
    assert main(["verify", "--paper-defaults", "--paths", "3000", "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path)
    assert rep["passed"] and rep["n_paths"] == 3000
    for arm in rep["theta_zero"]:
        assert arm["estimate"]["mean"] <= arm["closed_form"]
    assert "elapsed" not in json.dumps(rep)


def test_verify_negative_control(tmp_path):
    path = _cfg(tmp_path, "verify.a_multiplier = 1.1\n")
    assert main(["verify", "--paper-defaults", "--config", path, "--paths", "3000", "--out", str(tmp_path)]) == 1
    rep = _report(tmp_path)
    assert not rep["checks"]["headline"]


def test_outputs_are_byte_identical(tmp_path):
    for cmd, extra in (("verify", ["--paths", "300"]), ("threshold-scan", []), ("solve", [])):
        a, b = tmp_path / f"{cmd}-a", tmp_path / f"{cmd}-b"
        main([cmd, "--paper-defaults", *extra, "--out", str(a)])
        main([cmd, "--paper-defaults", *extra, "--out", str(b)])
        for f in a.iterdir():
            assert f.read_bytes() == (b / f.name).read_bytes()


def test_seed_and_threads_flags(tmp_path):
    a, b, c = (tmp_path / k for k in "abc")
    main(["verify", "--paper-defaults", "--paths", "200", "--out", str(a)])
    main(["verify", "--paper-defaults", "--paths", "200", "--threads", "2", "--out", str(b)])
    main(["verify", "--paper-defaults", "--paths", "200", "--seed", "7", "--out", str(c)])
    ra, rb, rc = (_report(p) for p in (a, b, c))
    assert ra["headline"] == rb["headline"]
    assert rc["seed"] == 7 and rc["headline"] != ra["headline"]


def test_trajectory_dump(tmp_path):
    assert main(["solve", "--paper-defaults", "--trajectories", "2", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "trajectories.csv").read_text().splitlines()
    assert lines[0].startswith("# artifact_version") and lines[2] == "path_id,t,Y,X,U,M"
    assert len(lines) == 3 + 2 * 1001
    assert (tmp_path / "jumps.csv").read_text().splitlines()[2] == "path_id,t,z"
