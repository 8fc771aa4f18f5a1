"""Pipeline configuration: JSON file in, validated dataclass out.

Every range is checked against its allowed bounds at load time and the
offending field is named, so a bad config never reaches a stage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .samples import NEGATIVE_STRATEGIES

K_BOUNDS = (4, 7)
R_BOUNDS = (2, 7)


@dataclass
class TrainSection:
    lr: float = 0.5
    epochs: int = 300
    w_mode: str | float = "auto"


@dataclass
class ProbeSection:
    train_houses_per_rule: int = 250
    test_houses_per_rule: int = 84
    lr: float = 0.5
    epochs: int = 500
    negate_logits: bool = False


@dataclass
class PipelineConfig:
    annotations: Path = Path("annotations.jsonl")
    templates: Path = Path("templates.txt")
    registry: Path | None = None  # None = built-in 12-type registry
    out_dir: Path = Path("out")
    rate_hz: float = 0.5
    merge_window: int = 4
    k_range: tuple[int, int] = K_BOUNDS
    r_range: tuple[int, int] = R_BOUNDS
    trajectories_per_video: int = 4
    max_attempts: int = 8
    negatives_per_strategy: dict = field(
        default_factory=lambda: {s: 1 for s in NEGATIVE_STRATEGIES}
    )
    p_mask: float = 0.15
    split_fraction: float = 0.95
    ranking_candidates: int = 3
    seed: int = 42
    strict: bool = False
    train: TrainSection = field(default_factory=TrainSection)
    probe: ProbeSection = field(default_factory=ProbeSection)


_PATH_KEYS = ("annotations", "templates", "registry", "out_dir")
_SCALAR_KEYS = (
    "rate_hz",
    "merge_window",
    "trajectories_per_video",
    "max_attempts",
    "p_mask",
    "split_fraction",
    "ranking_candidates",
    "seed",
    "strict",
)


def _check_range(name: str, value: object, bounds: tuple[int, int]) -> tuple[int, int]:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        raise ConfigError(f"{name} must be a [lo, hi] integer pair")
    lo, hi = int(value[0]), int(value[1])
    if lo > hi:
        raise ConfigError(f"{name}: lo {lo} exceeds hi {hi}")
    if lo < bounds[0] or hi > bounds[1]:
        raise ConfigError(f"{name} must stay within {list(bounds)}, got {[lo, hi]}")
    return lo, hi


def config_from_dict(raw: dict) -> PipelineConfig:
    known = set(_PATH_KEYS) | set(_SCALAR_KEYS) | {
        "k_range",
        "r_range",
        "negatives_per_strategy",
        "train",
        "probe",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")

    cfg = PipelineConfig()
    for key in _PATH_KEYS:
        if key in raw and raw[key] is not None:
            if not isinstance(raw[key], str):
                raise ConfigError(f"{key} must be a path string")
            setattr(cfg, key, Path(raw[key]))
    for key in _SCALAR_KEYS:
        if key in raw:
            setattr(cfg, key, raw[key])
    if "k_range" in raw:
        cfg.k_range = _check_range("k_range", raw["k_range"], K_BOUNDS)
    if "r_range" in raw:
        cfg.r_range = _check_range("r_range", raw["r_range"], R_BOUNDS)
    if "negatives_per_strategy" in raw:
        counts = raw["negatives_per_strategy"]
        if not isinstance(counts, dict):
            raise ConfigError("negatives_per_strategy must be an object")
        for name, count in counts.items():
            if name not in NEGATIVE_STRATEGIES:
                raise ConfigError(f"negatives_per_strategy: unknown strategy {name!r}")
            if not isinstance(count, int) or isinstance(count, bool) or count < 0:
                raise ConfigError(f"negatives_per_strategy[{name!r}] must be a count")
        cfg.negatives_per_strategy = {s: counts.get(s, 1) for s in NEGATIVE_STRATEGIES}
    if "train" in raw:
        cfg.train = _section(TrainSection, raw["train"], "train")
    if "probe" in raw:
        cfg.probe = _section(ProbeSection, raw["probe"], "probe")
    validate_config(cfg)
    return cfg


def _section(cls, raw: object, name: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"{name} must be an object")
    fields = {f for f in cls.__dataclass_fields__}
    unknown = set(raw) - fields
    if unknown:
        raise ConfigError(f"unknown {name} keys {sorted(unknown)}")
    return cls(**raw)


def validate_config(cfg: PipelineConfig) -> None:
    if cfg.rate_hz <= 0:
        raise ConfigError("rate_hz must be positive")
    if cfg.merge_window < 1:
        raise ConfigError("merge_window must be >= 1")
    _check_range("k_range", list(cfg.k_range), K_BOUNDS)
    _check_range("r_range", list(cfg.r_range), R_BOUNDS)
    if cfg.trajectories_per_video < 1:
        raise ConfigError("trajectories_per_video must be >= 1")
    if cfg.max_attempts < 1:
        raise ConfigError("max_attempts must be >= 1")
    if not 0.0 < cfg.p_mask < 1.0:
        raise ConfigError("p_mask must be in (0, 1)")
    if not 0.0 < cfg.split_fraction < 1.0:
        raise ConfigError("split_fraction must be in (0, 1)")
    if cfg.ranking_candidates < 0:
        raise ConfigError("ranking_candidates must be >= 0")
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool):
        raise ConfigError("seed must be an integer")
    if cfg.train.lr <= 0 or cfg.train.epochs < 1:
        raise ConfigError("train.lr must be positive and train.epochs >= 1")
    if cfg.probe.lr <= 0 or cfg.probe.epochs < 1:
        raise ConfigError("probe.lr must be positive and probe.epochs >= 1")
    if cfg.probe.train_houses_per_rule < 1 or cfg.probe.test_houses_per_rule < 1:
        raise ConfigError("probe house counts must be >= 1")


def load_config(path: str | Path) -> PipelineConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    cfg = config_from_dict(raw)
    # paths in the file are relative to the file itself
    base = Path(path).resolve().parent
    for key in _PATH_KEYS:
        value = getattr(cfg, key)
        if isinstance(value, Path) and not value.is_absolute():
            setattr(cfg, key, base / value)
    return cfg
