"""
Configuration & Constants
=========================
Centralizes numerical tolerances, default curvatures, file-format
markers, paths, and the declarative run configuration file.
"""

import math
import os
import logging
from dataclasses import dataclass, field, fields, asdict

from curvednet.errors import ConfigError

logger = logging.getLogger(__name__)

# ── Paths ────────────────────────────────────────────────
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
LOG_DIR = os.path.join(BASE_DIR, "logs")
LOG_DIR_ENV = "CURVEDNET_LOG_DIR"
LOG_LEVEL_ENV = "CURVEDNET_LOG_LEVEL"

# ── Numerical Tolerances ────────────────────────────────
XI_DEFAULT = 1e-5  # ball clipping margin
ATANH_LIMIT = 1.0 - 1e-12
ZERO_NORM = 1e-30
SINGULARITY_TOL = 1e-12
MIN_NORMAL_NORM = 1e-12
PROB_FLOOR = 1e-300
SPHERE_RTOL = 1e-9
BALL_SLACK = 1e-12

# ── Curvatures ──────────────────────────────────────────
DEFAULT_CURVATURE_S = 1.0
DEFAULT_CURVATURE_H = -1.0
ALTERNATE_CURVATURES_H = (-0.01, -0.005, -1e-4)

# ── File Formats ────────────────────────────────────────
MODEL_MAGIC = "CURVEDNET-MODEL-v1"
EMBEDDINGS_MAGIC = "# curvednet-embeddings v1 dim="
SPLITS = ("train", "test_id", "test_ood")
OOD_LABEL = -1
OOD_TAG = "ood"
SCORES_HEADER = ("id", "split", "z", "as")
DENSITY_HEADER = ("bin_lo", "bin_hi", "count_id", "count_ood")
MAX_ID_LENGTH = 128

# ── Evaluation ──────────────────────────────────────────
TARGET_TPR = 0.95
GRADCHECK_TOL = 1e-4
GRADCHECK_POINTS = 10
GRADCHECK_COORDS = 50
GRADCHECK_MARGIN = 1e-3
DEGENERATE_FRACTION = 0.99
DENSITY_BINS = 50

# ── Choices ─────────────────────────────────────────────
ARCHITECTURES = ("baseline", "sio", "hio", "mio", "sit", "hit", "mit")
GEOMETRIES = ("euclidean", "spherical", "hyperbolic")
EXTRACTORS = ("auto", "mlp", "identity")
DATA_SOURCES = ("synthetic", "embeddings")
DETECTION_ERROR_MODES = ("min", "at_tpr")
AUPR_POSITIVES = ("ood", "id")
SCORE_MODES = ("default", "euclidean", "geometric")
DENSITY_QUANTITIES = ("as", "z", "tanh")


@dataclass
class RunConfig:
    """Every key accepted in a ``key = value`` run configuration file."""

    # model
    architecture: str = "hio"
    curvature_s: float = DEFAULT_CURVATURE_S
    curvature_h: float = DEFAULT_CURVATURE_H
    embed_dim: int = 8
    hidden_dims: tuple = (64, 64)
    extractor: str = "auto"
    mixed_components: tuple = ("spherical", "hyperbolic")
    hyperbolic_linear: bool = False
    xi: float = XI_DEFAULT

    # training
    epochs: int = 50
    lr: float = 0.05
    batch_size: int = 64
    grad_clip: float = 5.0
    seed: int = 0

    # scoring & metrics
    score_mode: str = "default"
    detection_error_mode: str = "min"
    aupr_positive: str = "ood"
    density_bins: int = DENSITY_BINS
    density_quantity: str = "as"

    # data
    data_source: str = "synthetic"
    n_super: int = 4
    n_sub_per_super: int = 3
    data_dim: int = 16
    super_spread: float = 10.0
    sub_spread: float = 2.0
    noise_std: float = 0.5
    samples_per_leaf: int = 200
    ood_leaves: int = 2
    train_fraction: float = 0.8

    # comparison experiment
    compare_seeds: tuple = (0, 1, 2, 3, 4)
    compare_architectures: tuple = ("baseline", "hio")
    sweep_curvatures: tuple = field(default_factory=tuple)

    def as_dict(self):
        return asdict(self)


# ── Parsing ─────────────────────────────────────────────

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}

# element type of tuple-valued keys
_TUPLE_ITEMS = {
    "hidden_dims": int,
    "mixed_components": str,
    "compare_seeds": int,
    "compare_architectures": str,
    "sweep_curvatures": float,
}


def _parse_scalar(kind, text):
    if kind is bool:
        lowered = text.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got '{text}'")
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    return text


def parse_value(name, text):
    """Convert the raw text of key ``name`` to the RunConfig field type."""
    kinds = {f.name: f.type for f in fields(RunConfig)}
    kind = kinds[name]
    if kind in ("tuple", tuple):
        item = _TUPLE_ITEMS[name]
        parts = [p.strip() for p in text.split(",") if p.strip()]
        return tuple(_parse_scalar(item, p) for p in parts)
    kind = {"str": str, "int": int, "float": float, "bool": bool}.get(kind, kind)
    return _parse_scalar(kind, text)


def parse_key_values(text, source="<config>"):
    """
    Parse flat ``key = value`` text into an ordered dict of raw strings.

    ``#`` starts a comment; blank lines are skipped; duplicate keys and
    lines without ``=`` are errors naming the line.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got '{raw.strip()}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: missing key")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        values[key] = (lineno, value)
    return values


def load_run_config(path):
    """
    Read a run configuration file.

    Unknown keys and unparseable values are errors (fail-fast).
    Raises ConfigError; returns a validated RunConfig.
    """
    if not os.path.exists(path):
        raise ConfigError(f"Config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        raw = parse_key_values(f.read(), source=path)

    known = {f.name for f in fields(RunConfig)}
    overrides = {}
    for key, (lineno, text) in raw.items():
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        try:
            overrides[key] = parse_value(key, text)
        except ValueError as e:
            raise ConfigError(f"{path}:{lineno}: bad value for '{key}': {e}") from e

    config = RunConfig(**overrides)
    validate_run_config(config)
    logger.info("Loaded run config from %s (%d keys)", path, len(overrides))
    return config


def validate_run_config(config):
    """
    Validate that every RunConfig value is in range and consistent.

    Collects all violations, then raises a single ConfigError.
    """
    errors = []

    def check(condition, message):
        if not condition:
            errors.append(message)

    check(config.architecture in ARCHITECTURES,
          f"architecture must be one of {ARCHITECTURES}, got '{config.architecture}'")
    check(math.isfinite(config.curvature_s) and config.curvature_s > 0,
          f"curvature_s must be finite and > 0, got {config.curvature_s}")
    check(math.isfinite(config.curvature_h) and config.curvature_h < 0,
          f"curvature_h must be finite and < 0, got {config.curvature_h}")
    check(config.embed_dim >= 1, "embed_dim must be >= 1")
    check(all(h >= 1 for h in config.hidden_dims), "hidden_dims must all be >= 1")
    check(config.extractor in EXTRACTORS, f"extractor must be one of {EXTRACTORS}")
    check(len(config.mixed_components) >= 1
          and all(c in GEOMETRIES for c in config.mixed_components),
          f"mixed_components must be a non-empty subset of {GEOMETRIES}")
    check(len(set(config.mixed_components)) == len(config.mixed_components),
          "mixed_components must not repeat a geometry")
    if config.architecture == "mit":
        check("euclidean" not in config.mixed_components,
              "mit already carries a Euclidean branch; drop 'euclidean' from mixed_components")
    if config.architecture in ("mio", "mit"):
        check(any(c != "euclidean" for c in config.mixed_components),
              "mixed architectures need at least one curved component")
    check(0.0 < config.xi < 1.0, f"xi must be in (0, 1), got {config.xi}")

    check(config.epochs >= 0, "epochs must be >= 0")
    check(math.isfinite(config.lr) and config.lr >= 0, "lr must be finite and >= 0")
    check(config.batch_size >= 1, "batch_size must be >= 1")
    check(config.grad_clip >= 0, "grad_clip must be >= 0 (0 disables clipping)")

    check(config.score_mode in SCORE_MODES, f"score_mode must be one of {SCORE_MODES}")
    check(config.detection_error_mode in DETECTION_ERROR_MODES,
          f"detection_error_mode must be one of {DETECTION_ERROR_MODES}")
    check(config.aupr_positive in AUPR_POSITIVES,
          f"aupr_positive must be one of {AUPR_POSITIVES}")
    check(config.density_bins >= 1, "density_bins must be >= 1")
    check(config.density_quantity in DENSITY_QUANTITIES,
          f"density_quantity must be one of {DENSITY_QUANTITIES}")

    check(config.data_source in DATA_SOURCES, f"data_source must be one of {DATA_SOURCES}")
    check(0.0 < config.train_fraction < 1.0, "train_fraction must be in (0, 1)")

    check(len(config.compare_seeds) >= 1, "compare_seeds must not be empty")
    check(all(a in ARCHITECTURES for a in config.compare_architectures),
          f"compare_architectures must be drawn from {ARCHITECTURES}")
    check(all(math.isfinite(k) and k < 0 for k in config.sweep_curvatures),
          "sweep_curvatures must all be finite and < 0")

    if errors:
        for err in errors:
            logger.error("Config validation failed: %s", err)
        raise ConfigError(
            "Config validation failed:\n  - " + "\n  - ".join(errors)
        )
    logger.debug("Run config validated")
