"""Experiment configuration files.

One file per experiment, one ``section.key = value`` per line, ``#``
comments.  Example::

    model.lambda = 1
    measure.b = 2
    sim.dt = 1e-3
    sim.eps = auto
    y0 = 1
    saddle.theta_scales = 0, 0.5, 1.5
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

from .closedform import ModelParams
from .levy import TemperedStableMeasure
from .sim import SimConfig

__all__ = ["ConfigError", "ExperimentConfig", "ScanConfig", "SaddleConfig", "BsdeConfig", "VerifyConfig",
           "parse_config", "load_config", "paper_defaults"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScanConfig:
    parameter: str = "multiplier"
    start: float = 0.5
    stop: float = 6.0
    num: int = 111


@dataclass(frozen=True)
class SaddleConfig:
    g_perturbations: tuple = (-0.2, 0.2)
    theta_scales: tuple = (0.0, 0.5, 1.5)


@dataclass(frozen=True)
class VerifyConfig:
    y0_grid: tuple = (0.0, 1.0, 5.0)
    a_multiplier: float = 1.0  # negative-control hook: mis-scales A when != 1
    window: float = 0.01


@dataclass(frozen=True)
class BsdeConfig:
    dt: float = 0.01
    eps: float = 1e-3
    levels: int = 3
    n_paths: int = 64
    scheme: str = "euler"
    ratio_target: float = 4.0
    ratio_tol: float = 0.3


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelParams = field(default_factory=ModelParams)
    measure: TemperedStableMeasure = field(default_factory=lambda: TemperedStableMeasure(0.5, 2.0, 0.5, 1.0))
    sim: SimConfig = field(default_factory=lambda: SimConfig(y0=1.0))
    y0: float = 1.0
    expect_divergent: bool = False
    scan: ScanConfig = field(default_factory=ScanConfig)
    saddle: SaddleConfig = field(default_factory=SaddleConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    bsde: BsdeConfig = field(default_factory=BsdeConfig)

    def resolved(self) -> dict:
        """Plain-data view embedded in every output file."""
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            d[f.name] = asdict(v) if hasattr(v, "__dataclass_fields__") else v
        d["model"]["lambda"] = d["model"].pop("lambda_")
        return d


def paper_defaults() -> ExperimentConfig:
    """Reference parameter set used by the acceptance suite."""
    return ExperimentConfig(sim=SimConfig(n_paths=100_000, y0=1.0))


# key aliases: file name -> dataclass attribute
_ALIASES = {("model", "lambda"): "lambda_"}
_SECTIONS = ("model", "measure", "sim", "scan", "saddle", "verify", "bsde")
_TOP = ("y0", "expect_divergent")


def _convert(text: str, target, path: str):
    text = text.strip()
    try:
        if isinstance(target, bool):
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if isinstance(target, int):
            return int(float(text)) if float(text).is_integer() else int(text)
        if isinstance(target, float) or target is None:
            if target is None and text.lower() in ("auto", "none", ""):
                return None
            v = float(text)
            if not math.isfinite(v):
                raise ValueError(text)
            return v
        if isinstance(target, tuple):
            return tuple(float(x) for x in text.split(",") if x.strip())
        return text
    except ValueError:
        raise ConfigError(f"{path}: cannot parse {text!r}") from None


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    base = base or ExperimentConfig()
    updates: dict[str, dict] = {s: {} for s in _SECTIONS}
    top: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if "." in key:
            section, name = key.split(".", 1)
            if section not in _SECTIONS:
                raise ConfigError(f"{key}: unknown section {section!r}")
            attr = _ALIASES.get((section, name), name)
            obj = getattr(base, section)
            if attr not in {f.name for f in fields(obj)}:
                raise ConfigError(f"{key}: unknown key")
            updates[section][attr] = _convert(value, getattr(obj, attr), key)
        elif key in _TOP:
            top[key] = _convert(value, getattr(base, key), key)
        else:
            raise ConfigError(f"{key}: unknown key")

    built = {}
    for section in _SECTIONS:
        try:
            built[section] = replace(getattr(base, section), **updates[section])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{section}: {exc}") from None
    cfg = ExperimentConfig(**built, **{k: top.get(k, getattr(base, k)) for k in _TOP})
    _validate(cfg)
    # the top-level y0 is the single source of the starting level
    cfg = replace(cfg, sim=cfg.sim.replace(y0=cfg.y0))
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.y0 < 0:
        raise ConfigError("y0: must be >= 0")
    if cfg.scan.parameter not in ("multiplier", "T"):
        raise ConfigError("scan.parameter: must be 'multiplier' or 'T'")
    if not (0 < cfg.scan.start < cfg.scan.stop) or cfg.scan.num < 2:
        raise ConfigError("scan: need 0 < start < stop and num >= 2")
    for c in cfg.saddle.theta_scales:
        if c < 0:
            raise ConfigError("saddle.theta_scales: scales must be >= 0")
    for d in cfg.saddle.g_perturbations:
        if abs(d) > 1:
            raise ConfigError("saddle.g_perturbations: offsets must lie in [-1, 1]")
    if any(y < 0 for y in cfg.verify.y0_grid) or not cfg.verify.y0_grid:
        raise ConfigError("verify.y0_grid: need nonnegative values")
    if not cfg.verify.a_multiplier > 0:
        raise ConfigError("verify.a_multiplier: must be > 0")
    if not 0 < cfg.verify.window <= cfg.model.T:
        raise ConfigError("verify.window: must lie in (0, model.T]")
    b = cfg.bsde
    if not (b.dt > 0 and b.eps > 0 and b.levels >= 2 and b.n_paths >= 1):
        raise ConfigError("bsde: need dt > 0, eps > 0, levels >= 2, n_paths >= 1")
    if b.scheme not in ("euler", "exact"):
        raise ConfigError("bsde.scheme: must be 'euler' or 'exact'")


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, base)
