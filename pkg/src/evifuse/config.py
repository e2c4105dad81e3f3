"""Flat dotted-key configuration files.

Format: UTF-8 text, one ``key = value`` pair per line, ``#`` starts a
comment.  Values are parsed as booleans, integers, floats, comma-separated
lists of those, or bare strings.  Unknown keys and malformed values raise
``ConfigError`` naming the offending key.
"""

from .errors import ConfigError

DEFAULTS = {
    "data.k": 3,
    "data.views": 2,
    "data.dims": [8, 8],
    "data.separation": 1.0,
    "data.informativeness": [],
    "data.n_train": 1200,
    "data.n_test": 300,
    "data.train_csv": "",
    "data.test_csv": "",
    "model.hidden": 16,
    "model.use_pseudo": True,
    "train.epochs": 40,
    "train.batch_size": 128,
    "train.learning_rate": 5e-3,
    "train.lambda_max": 1.0,
    "train.anneal_epochs": 10,
    "train.regularizer": "phd",
    "train.mask_label": True,
    "holder.alpha_h": 2.0,
    "holder.gamma": 1.0,
    "kalman.enabled": False,
    "kalman.q": 1e-4,
    "kalman.r": 1e-2,
    "kalman.p0": 1.0,
    "corrupt.sigma2": 0.0,
    "corrupt.eta": 0.0,
    "corrupt.views": [],
    "grid.alpha_h": [1.1, 1.3, 1.5, 1.7, 2.0, 2.5],
    "grid.gamma": [0.5, 0.8, 1.0, 1.3, 1.5, 2.0],
    "cluster.enabled": True,
    "seed": 7,
}


def _parse_scalar(text: str):
    low = text.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def _parse_value(text: str):
    text = text.strip()
    if "," in text:
        items = [t.strip() for t in text.split(",")]
        return [_parse_scalar(t) for t in items if t != ""]
    return _parse_scalar(text)


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = _parse_value(value)
    return out


def load_config(path=None, overrides=None) -> dict:
    """Defaults, overlaid with the file at ``path`` and then ``overrides``."""
    cfg = dict(DEFAULTS)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                parsed = parse_config_text(fh.read())
        except OSError as err:
            raise ConfigError(f"cannot read config file {path}: {err}") from err
        for key, value in parsed.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            cfg[key] = value
    if overrides:
        cfg.update(overrides)
    _validate(cfg)
    return cfg


def _as_list(value):
    if isinstance(value, list):
        return value
    if value in ("", None):
        return []
    return [value]


def _validate(cfg: dict):
    def require(key, ok, why):
        if not ok:
            raise ConfigError(f"config key {key!r}: {why}")

    require("data.k", isinstance(cfg["data.k"], int) and cfg["data.k"] >= 2, "need an integer >= 2")
    require("data.views", isinstance(cfg["data.views"], int) and cfg["data.views"] >= 1, "need an integer >= 1")
    dims = _as_list(cfg["data.dims"])
    require("data.dims", len(dims) == cfg["data.views"] and all(isinstance(d, int) and d >= 1 for d in dims), "need one positive integer per view")
    cfg["data.dims"] = dims
    info = _as_list(cfg["data.informativeness"])
    require("data.informativeness", not info or len(info) == cfg["data.views"], "need one weight per view (or empty)")
    cfg["data.informativeness"] = [float(w) for w in info]
    require("data.separation", float(cfg["data.separation"]) >= 0, "must be non-negative")
    for key in ("data.n_train", "data.n_test"):
        require(key, isinstance(cfg[key], int) and cfg[key] >= 1, "need a positive integer")
    for key in ("train.epochs", "train.batch_size", "train.anneal_epochs", "model.hidden"):
        require(key, isinstance(cfg[key], int) and cfg[key] >= 0, "need a non-negative integer")
    require("train.anneal_epochs", cfg["train.anneal_epochs"] >= 1, "must be at least 1")
    require("train.lambda_max", 0.0 <= float(cfg["train.lambda_max"]) <= 1.0, "must lie in [0, 1]")
    require("train.regularizer", str(cfg["train.regularizer"]).lower() in ("phd", "kl"), "must be 'phd' or 'kl'")
    require("holder.alpha_h", float(cfg["holder.alpha_h"]) > 1.0, "must exceed 1")
    require("holder.gamma", float(cfg["holder.gamma"]) > 0.0, "must be positive")
    require("kalman.r", float(cfg["kalman.r"]) > 0.0, "must be positive")
    require("kalman.q", float(cfg["kalman.q"]) >= 0.0, "must be non-negative")
    require("kalman.p0", float(cfg["kalman.p0"]) >= 0.0, "must be non-negative")
    require("corrupt.sigma2", float(cfg["corrupt.sigma2"]) >= 0.0, "must be non-negative")
    require("corrupt.eta", 0.0 <= float(cfg["corrupt.eta"]) <= 1.0, "must lie in [0, 1]")
    cfg["corrupt.views"] = [int(v) for v in _as_list(cfg["corrupt.views"])]
    cfg["grid.alpha_h"] = [float(v) for v in _as_list(cfg["grid.alpha_h"])]
    cfg["grid.gamma"] = [float(v) for v in _as_list(cfg["grid.gamma"])]
    require("grid.alpha_h", all(v > 1.0 for v in cfg["grid.alpha_h"]), "entries must exceed 1")
    require("grid.gamma", all(v > 0.0 for v in cfg["grid.gamma"]), "entries must be positive")
    require("seed", isinstance(cfg["seed"], int), "need an integer")
