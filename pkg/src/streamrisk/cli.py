"""Command-line experiment runner.

    streamrisk solve --paper-defaults
    streamrisk verify --config exp.cfg --paths 100000 --out results/
    streamrisk threshold-scan --paper-defaults --out scan/
    streamrisk bsde --paper-defaults

Exit codes: 0 pass, 1 verification failure, 2 config error (or a
non-integrable configuration where one is required), 3 divergent regime in
``solve`` unless the config declares ``expect_divergent = true``.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bsde import observed_truncation_bias, refinement_study
from .closedform import solve
from .config import ConfigError, ExperimentConfig, load_config, paper_defaults
from .levy import Divergent, integrability_report
from .riskeval import (
    McEstimate,
    Z_PASS,
    j_samples,
    route_equivalence,
    saddle_check,
    worst_case_entropy,
)
from .sim import Distortion, Policy, path_rng, simulate_functionals, simulate_path, write_trajectories

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGENT = 0, 1, 2, 3


# -- output helpers -----------------------------------------------------------
def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _plain(obj):
    """JSON-ready copy: no timings, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items() if k != "elapsed"}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _header(cfg: ExperimentConfig, command: str) -> dict:
    return {"artifact_version": __version__, "command": command, "config": cfg.resolved()}


def write_json(path: Path, cfg: ExperimentConfig, command: str, body: dict) -> None:
    doc = {**_header(cfg, command), **body}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_plain(doc), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, cfg: ExperimentConfig, command: str, columns, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# artifact_version: {__version__}\n")
        fh.write(f"# config: {json.dumps(_plain(_header(cfg, command)['config']), sort_keys=True)}\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(columns)
        for row in rows:
            wr.writerow([_fmt(v) for v in row])


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


# -- commands -------------------------------------------------------------------
def cmd_solve(cfg: ExperimentConfig, out: Path) -> int:
    params, measure = cfg.model, cfg.measure
    sol = solve(params, measure)
    A0 = sol.A_max
    body = dict(g_bar=sol.g_bar, w_hat=sol.w_hat, g_star=sol.optimal_g(), A0=A0, y0=cfg.y0,
                integrability=integrability_report(measure, A0).as_dict())
    a_long = sol.w_hat / params.lambda_
    body["long_run"] = {"A0": a_long}
    try:
        body["long_run"]["B0_over_T"] = sol.long_run()[1]
    except Divergent:
        body["long_run"]["B0_over_T"] = "Divergent"
    if sol.finite:
        body.update(B0=sol.B(0.0), Phi0=sol.phi0(cfg.y0), divergent=False)
    else:
        body.update(B0="Divergent", Phi0="Divergent", divergent=True)
    write_json(out / "report.json", cfg, "solve", body)

    rows = [("g_bar", body["g_bar"]), ("w_hat", body["w_hat"]), ("g_star", body["g_star"]),
            ("A0", A0), ("B0", body["B0"]), (f"Phi(0,0,{cfg.y0:g},0,1)", body["Phi0"]),
            ("long-run A0", a_long), ("long-run B0/T", body["long_run"]["B0_over_T"]),
            ("A0 < b", body["integrability"]["value_finite"]),
            ("A0 <= b/2", body["integrability"]["square_integrable"])]
    for k, v in rows:
        print(f"{k:<22} {_fmt(v)}")
    if sol.finite or cfg.expect_divergent:
        return EXIT_OK
    _log(f"divergent regime: A0 = {A0:.6g} >= b = {measure.exp_bound:g}")
    return EXIT_DIVERGENT


def _est(samples, seed) -> McEstimate:
    return McEstimate.from_samples(samples, seed)


def cmd_verify(cfg: ExperimentConfig, out: Path) -> int:
    params, measure, sc = cfg.model, cfg.measure, cfg.sim
    sol = solve(params, measure, a_multiplier=cfg.verify.a_multiplier)
    if not sol.finite:
        raise Divergent(sol.A_max, measure.exp_bound, "verify requires A0 < b")
    Distortion.worst_case(sol)  # square-integrability
    g_star = sol.optimal_g()
    scales = tuple(sorted({0.5, 1.0, *map(float, cfg.saddle.theta_scales)} - {0.0}))
    t0 = time.perf_counter()
    fn = simulate_functionals(params, measure, sol, sc, scales=scales, mode="reference")
    _log(f"reference batch: {fn.n_paths} paths in {time.perf_counter() - t0:.1f} s")
    report: dict = {"eps": fn.eps, "dt": fn.dt, "n_paths": fn.n_paths, "seed": sc.seed}

    mart = []
    for c in (1.0, 0.5):
        e = _est(fn.M_T(c), sc.seed)
        mart.append(dict(scale=c, estimate=e.as_dict(), target=1.0, **{"pass": e.within(1.0)}))
    report["martingale"] = mart

    head, zero_arm = [], []
    for y0 in cfg.verify.y0_grid:
        phi = sol.phi0(y0)
        e = _est(j_samples(fn, g_star, 1.0, y0), sc.seed)
        head.append(dict(y0=y0, estimate=e.as_dict(), closed_form=phi,
                         z=(e.mean - phi) / e.std_error, **{"pass": e.within(phi)}))
        e0 = _est(j_samples(fn, g_star, 0.0, y0), sc.seed)
        zero_arm.append(dict(y0=y0, estimate=e0.as_dict(), closed_form=phi,
                             **{"pass": e0.mean <= phi + Z_PASS * e0.std_error}))
    report["headline"] = head
    report["theta_zero"] = zero_arm

    sad = saddle_check(params, measure, sol, sc.replace(y0=cfg.y0), cfg.saddle.g_perturbations,
                       cfg.saddle.theta_scales, functionals=fn)
    report["saddle"] = sad.as_dict()

    log_m = fn.log_M_T(1.0)
    ent = _est(np.exp(log_m) * log_m, sc.seed)
    ent_target = worst_case_entropy(sol, fn.eps)
    report["relative_entropy"] = dict(estimate=ent.as_dict(), closed_form=ent_target,
                                      **{"pass": ent.within(ent_target)})

    t0 = time.perf_counter()
    route = route_equivalence(params, measure, sol, sc.replace(y0=cfg.y0),
                              window=cfg.verify.window * params.T, reference=fn)
    _log(f"worst-case batch in {time.perf_counter() - t0:.1f} s")
    report["route_equivalence"] = route.as_dict()

    checks = {
        "martingale": all(m["pass"] for m in mart),
        "headline": all(h["pass"] for h in head),
        "theta_zero": all(z["pass"] for z in zero_arm),
        "saddle": sad.passed,
        "relative_entropy": report["relative_entropy"]["pass"],
        "route_equivalence": route.passed,
    }
    report["checks"] = checks
    report["passed"] = all(checks.values())
    write_json(out / "report.json", cfg, "verify", report)
    for k, v in checks.items():
        print(f"{k:<20} {'PASS' if v else 'FAIL'}")
    return EXIT_OK if report["passed"] else EXIT_FAIL


def _crossing_prediction(cfg: ExperimentConfig, w_hat: float) -> float:
    p, b = cfg.model, cfg.measure.exp_bound
    if cfg.scan.parameter == "multiplier":
        return p.lambda_ * b / (-math.expm1(-p.lambda_ * p.T)) / w_hat
    r = p.lambda_ * b / w_hat  # A0(T) = (w_hat/lam)(1 - exp(-lam T)) reaches b iff r < 1
    return -math.log1p(-r) / p.lambda_ if r < 1 else math.inf


def cmd_threshold_scan(cfg: ExperimentConfig, out: Path) -> int:
    p, measure, s = cfg.model, cfg.measure, cfg.scan
    grid = np.linspace(s.start, s.stop, s.num)
    rows, b0s = [], []
    for x in grid:
        x = float(x)
        pk = p.replace(w=x * p.w, w_prime=x * p.w_prime) if s.parameter == "multiplier" else p.replace(T=x)
        sol = solve(pk, measure)
        A0 = sol.A_max
        rep = integrability_report(measure, A0)
        B0 = sol.B(0.0) if sol.finite else "Divergent"
        rows.append((x, A0, A0 / measure.exp_bound, B0, rep.square_integrable))
        b0s.append(B0)

    predicted = _crossing_prediction(cfg, solve(p, measure).w_hat)
    div = [i for i, v in enumerate(b0s) if isinstance(v, str)]
    observed = float(grid[div[0]]) if div else math.inf
    step = float(grid[1] - grid[0])
    consistent = all(isinstance(v, str) for v in b0s[div[0]:]) if div else True
    if math.isinf(predicted) or predicted > grid[-1]:
        match = not div
    else:
        match = consistent and abs(observed - predicted) <= step
    finite = [v for v in b0s if not isinstance(v, str)]
    monotone = bool(np.all(np.diff(finite) > 0)) if len(finite) > 1 else True

    write_csv(out / "scan.csv", cfg, "threshold-scan",
              [s.parameter, "A0", "A0_over_b", "B0", "square_integrable"], rows)
    body = dict(parameter=s.parameter, predicted_crossing=predicted, observed_crossing=observed,
                grid_step=step, crossing_match=match, B0_increasing=monotone,
                n_finite=len(finite), n_divergent=len(div))
    write_json(out / "report.json", cfg, "threshold-scan", body)
    print(f"predicted crossing {_fmt(predicted)}, first divergent grid value {_fmt(observed)}")
    return EXIT_OK if match and monotone else EXIT_FAIL


def cmd_bsde(cfg: ExperimentConfig, out: Path) -> int:
    bc, measure = cfg.bsde, cfg.measure
    sol = solve(cfg.model, measure)
    if not sol.finite:
        raise Divergent(sol.A_max, measure.exp_bound, "bsde requires A0 < b")
    sc = cfg.sim.replace(dt=bc.dt, eps=bc.eps, y0=cfg.y0, compensate_small_jumps=True)
    levels = refinement_study(sol, sc, bc.levels, bc.n_paths, bc.scheme)
    drift_ratios = [levels[i].drift_max / levels[i + 1].drift_max for i in range(len(levels) - 1)]
    max_ratios = [levels[i].max_residual / levels[i + 1].max_residual for i in range(len(levels) - 1)]
    lo, hi = bc.ratio_target * (1 - bc.ratio_tol), bc.ratio_target * (1 + bc.ratio_tol)
    order_ok = all(lo <= r <= hi for r in drift_ratios)
    decreasing = all(r > 1 for r in max_ratios)
    terminal_ok = all(lv.terminal_error <= 1e-12 * (1 + abs(sol.phi0(cfg.y0))) for lv in levels)

    fine = sc.replace(dt=bc.dt / 2 ** (bc.levels - 1))
    # trapezoid X, U carry O(dt^3) per step, so the jump-free check runs at the simulation dt
    exact = refinement_study(sol, sc.replace(dt=cfg.sim.dt), 1, 1, "exact")[0]
    biases = [observed_truncation_bias(sol, fine.replace(eps=e), min(bc.n_paths, 4)) for e in (bc.eps, bc.eps / 2)]
    alpha = getattr(measure, "alpha", math.nan)
    body = dict(
        levels=[lv.as_dict() for lv in levels],
        drift_ratios=drift_ratios,
        max_residual_ratios=max_ratios,
        ratio_band=[lo, hi],
        exact_scheme=dict(dt=exact.dt, n_paths=1, no_jump_max=exact.drift_max),
        truncation=dict(eps=[bc.eps, bc.eps / 2], observed_bias=biases, ratio=biases[0] / biases[1],
                        expected_ratio=2 ** (1 - alpha)),
        checks=dict(drift_order=order_ok, max_residual_decreasing=decreasing, terminal_identity=terminal_ok),
    )
    body["passed"] = order_ok and decreasing and terminal_ok
    write_json(out / "report.json", cfg, "bsde", body)
    for lv in levels:
        print(f"dt={_fmt(lv.dt)} max={lv.max_residual:.3e} drift_max={lv.drift_max:.3e} terminal={lv.terminal_error:.1e}")
    print("drift ratios " + ", ".join(f"{r:.4f}" for r in drift_ratios))
    return EXIT_OK if body["passed"] else EXIT_FAIL


def _dump_trajectories(cfg: ExperimentConfig, n: int, out: Path) -> None:
    params, measure = cfg.model, cfg.measure
    sol = solve(params, measure)
    dist = Distortion.worst_case(sol) if sol.finite else Distortion.zero()
    pol = Policy.optimal(params)
    sc = cfg.sim.replace(y0=cfg.y0)
    trajs = [simulate_path(params, measure, pol, dist, sc, path_rng(sc.seed, i)) for i in range(n)]
    out.mkdir(parents=True, exist_ok=True)
    write_trajectories(trajs, out / "trajectories.csv", out / "jumps.csv")
    for name in ("trajectories.csv", "jumps.csv"):
        path = out / name
        body = path.read_text()
        head = f"# artifact_version: {__version__}\n# config: {json.dumps(_plain(cfg.resolved()), sort_keys=True)}\n"
        path.write_text(head + body)


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "threshold-scan": cmd_threshold_scan, "bsde": cmd_bsde}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="streamrisk", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="key = value experiment file")
    ap.add_argument("--paper-defaults", action="store_true", help="start from the reference parameter set")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--paths", type=int)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--out", type=Path, default=Path("."))
    ap.add_argument("--trajectories", type=int, default=0, metavar="N",
                    help="also write N reference paths to trajectories.csv / jumps.csv")
    return ap


def resolve_config(args) -> ExperimentConfig:
    if args.config is None and not args.paper_defaults:
        raise ConfigError("give --config and/or --paper-defaults")
    base = paper_defaults() if args.paper_defaults else ExperimentConfig()
    cfg = load_config(args.config, base) if args.config is not None else base
    sim = {}
    if args.seed is not None:
        sim["seed"] = args.seed
    if args.paths is not None:
        sim["n_paths"] = args.paths
    if args.threads is not None:
        sim["threads"] = args.threads
    if sim:
        try:
            cfg = replace(cfg, sim=cfg.sim.replace(**sim))
        except ValueError as exc:
            raise ConfigError(f"sim: {exc}") from None
    if args.trajectories < 0:
        raise ConfigError("--trajectories must be >= 0")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return EXIT_CONFIG
    try:
        code = COMMANDS[args.command](cfg, args.out)
        if args.trajectories:
            _dump_trajectories(cfg, args.trajectories, args.out)
    except Divergent as exc:
        _log(f"non-integrable configuration: {exc}")
        return EXIT_CONFIG
    except ValueError as exc:
        _log(f"invalid configuration: {exc}")
        return EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())
