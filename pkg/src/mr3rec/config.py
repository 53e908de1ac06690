"""Flat key=value configuration files for the train and experiment commands.

Lines are `key = value`; blank lines and lines starting with '#' are
ignored. List values are comma-separated.
"""

from __future__ import annotations

from .errors import ConfigError, DataError
from .model import make_variant
from .train import TrainConfig


def parse_config(path) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = stripped.partition("=")
            out[key.strip()] = value.strip()
    return out


def get_float(cfg, key, default):
    try:
        return float(cfg.get(key, default))
    except ValueError:
        raise ConfigError(f"bad float for {key}: {cfg[key]!r}") from None


def get_int(cfg, key, default):
    try:
        return int(cfg.get(key, default))
    except ValueError:
        raise ConfigError(f"bad integer for {key}: {cfg[key]!r}") from None


def get_bool(cfg, key, default):
    raw = cfg.get(key)
    if raw is None:
        return default
    lowered = raw.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad boolean for {key}: {raw!r}")


def get_list(cfg, key, default=(), convert=str):
    raw = cfg.get(key)
    if raw is None:
        return list(default)
    items = [part.strip() for part in raw.split(",") if part.strip()]
    try:
        return [convert(item) for item in items]
    except ValueError:
        raise ConfigError(f"bad list value for {key}: {raw!r}") from None


def train_config_from(cfg: dict, *, variant_name=None,
                      seed=None) -> TrainConfig:
    """Build a TrainConfig from parsed key=value pairs.

    `variant_name`/`seed` override the file's `variant`/`seed` keys (the
    experiment driver iterates over both).
    """
    name = variant_name or cfg.get("variant", "mr3")
    try:
        variant = make_variant(
            name,
            norm_penalty=get_float(cfg, "lambda", 0.5),
            social_weight=get_float(cfg, "lambda_rel", 0.001),
            review_weight=get_float(cfg, "lambda_rev", 0.05),
        )
    except DataError as err:
        raise ConfigError(str(err)) from None
    try:
        return TrainConfig(
            n_factors=get_int(cfg, "factors", 10),
            learning_rate=get_float(cfg, "learning_rate", 0.0007),
            momentum=get_float(cfg, "momentum", 0.8),
            passes=get_int(cfg, "passes", 50),
            epochs_per_pass=get_int(cfg, "epochs_per_pass", 5),
            seed=get_int(cfg, "seed", 0) if seed is None else int(seed),
            variant=variant,
            lr_policy=cfg.get("lr_policy", "halve-on-increase"),
            init_scale=get_float(cfg, "init_scale", 0.1),
        )
    except DataError as err:
        raise ConfigError(str(err)) from None
