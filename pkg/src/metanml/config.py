"""Experiment configuration: a strict, versioned key-value format.

Files are INI-style sections of ``key = value`` lines.  Parsing is
strict: unknown sections or keys, missing required keys, and wrong
value shapes all raise ``ConfigError``.  ``schema_version`` gates
future layout changes; only version 1 exists.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "config_from_dict"]

SCHEMA_VERSION = 1

MODEL_KINDS = ("categorical", "softmax", "overparam")
SCHEDULE_KINDS = ("fixed", "epsilon", "berry_esseen", "plugin")
SIGMA_MIN_MODES = ("oracle", "plugin")


class ConfigError(ValueError):
    """Raised for any malformed or unknown configuration content."""


@dataclass(frozen=True)
class ExperimentConfig:
    schema_version: int
    name: str
    model: str
    num_classes: int
    seed: int
    num_cells: int | None = None
    num_features: int | None = None
    num_x: int = 8
    theta0: tuple = ()            # explicit values; empty means "draw"
    theta0_scale: float = 1.0     # stddev of the seeded draw
    x_marginal: tuple = ()        # explicit weights; empty means uniform
    schedule_kind: str = "fixed"
    rho: float | None = None
    epsilon: float | None = None
    delta: float | None = None
    c: float = 0.0
    sigma_min_mode: str = "oracle"
    per_query: bool = True
    reference_x: int = 0
    n_grid: tuple = (100,)
    replications: int = 1
    workers: int = 1
    eval_panel: int | None = None  # None means "all"
    out_dir: str | None = None


def _p_int(v):
    return int(v.strip())


def _p_float(v):
    return float(v.strip())


def _p_str(v):
    return v.strip()


def _p_bool(v):
    s = v.strip().lower()
    if s in ("1", "true", "yes"):
        return True
    if s in ("0", "false", "no"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _p_ints(v):
    return tuple(int(tok) for tok in v.split())


def _p_floats(v):
    return tuple(float(tok) for tok in v.split())


# section -> key -> (parser, required)
_SCHEMA = {
    "experiment": {
        "schema_version": (_p_int, True),
        "name": (_p_str, False),
        "model": (_p_str, True),
        "num_classes": (_p_int, True),
        "num_cells": (_p_int, False),
        "num_features": (_p_int, False),
        "num_x": (_p_int, False),
        "theta0": (_p_str, False),
        "x_marginal": (_p_str, False),
        "seed": (_p_int, True),
    },
    "schedule": {
        "kind": (_p_str, True),
        "rho": (_p_float, False),
        "epsilon": (_p_float, False),
        "delta": (_p_float, False),
        "c": (_p_float, False),
        "sigma_min": (_p_str, False),
        "per_query": (_p_bool, False),
        "reference_x": (_p_int, False),
    },
    "run": {
        "n_grid": (_p_ints, True),
        "replications": (_p_int, True),
        "workers": (_p_int, False),
        "eval_x": (_p_str, False),
    },
    "output": {
        "dir": (_p_str, False),
    },
}


def _validate(values):
    """Cross-field checks shared by file and dict construction."""
    if values["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {values['schema_version']}; "
            f"this build reads version {SCHEMA_VERSION}")
    if values["model"] not in MODEL_KINDS:
        raise ConfigError(f"model must be one of {MODEL_KINDS}")
    if values["num_classes"] < 2:
        raise ConfigError("num_classes must be at least 2")
    if values["model"] == "categorical":
        if not values.get("num_cells"):
            raise ConfigError("categorical model needs num_cells")
    else:
        if not values.get("num_features"):
            raise ConfigError(f"{values['model']} model needs num_features")
    kind = values["schedule_kind"]
    if kind not in SCHEDULE_KINDS:
        raise ConfigError(f"schedule kind must be one of {SCHEDULE_KINDS}")
    if kind == "fixed" and values.get("rho") is None:
        raise ConfigError("fixed schedule needs rho")
    if kind == "epsilon" and values.get("epsilon") is None:
        raise ConfigError("epsilon schedule needs epsilon")
    if kind == "berry_esseen" and values.get("delta") is None:
        raise ConfigError("berry_esseen schedule needs delta")
    if values["sigma_min_mode"] not in SIGMA_MIN_MODES:
        raise ConfigError(f"sigma_min must be one of {SIGMA_MIN_MODES}")
    if not values["n_grid"] or any(n < 1 for n in values["n_grid"]):
        raise ConfigError("n_grid must list positive sample sizes")
    if values["replications"] < 1:
        raise ConfigError("replications must be positive")
    if values["workers"] < 1:
        raise ConfigError("workers must be positive")
    if values["seed"] < 0:
        raise ConfigError("seed must be a nonnegative integer")


def _parse_theta0(text):
    """'draw', 'draw:<scale>', or whitespace-separated floats."""
    if text is None or text == "" or text == "draw":
        return (), 1.0
    if text.startswith("draw:"):
        return (), float(text.split(":", 1)[1])
    return _p_floats(text), 1.0


def _parse_eval_x(text):
    if text is None or text == "all":
        return None
    if text.startswith("panel:"):
        k = int(text.split(":", 1)[1])
        if k < 1:
            raise ConfigError("eval_x panel size must be positive")
        return k
    raise ConfigError(f"eval_x must be 'all' or 'panel:<k>', got {text!r}")


def parse_config(path):
    """Read and validate one experiment configuration file."""
    parser = configparser.ConfigParser(
        delimiters=("=",), interpolation=None, strict=True,
        inline_comment_prefixes=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh, source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc

    raw = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}] in {path}")
        for key, value in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}] of {path}")
            parse_fn, _req = _SCHEMA[section][key]
            try:
                raw[(section, key)] = parse_fn(value)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for '{key}' in [{section}] of {path}: {exc}"
                ) from exc
    for section, keys in _SCHEMA.items():
        for key, (_fn, required) in keys.items():
            if required and (section, key) not in raw:
                raise ConfigError(f"missing required key '{key}' in [{section}]")

    theta0, theta0_scale = _parse_theta0(raw.get(("experiment", "theta0")))
    marg_text = raw.get(("experiment", "x_marginal"))
    if marg_text in (None, "", "uniform"):
        x_marginal = ()
    else:
        x_marginal = _p_floats(marg_text)
    values = dict(
        schema_version=raw[("experiment", "schema_version")],
        name=raw.get(("experiment", "name"), "experiment"),
        model=raw[("experiment", "model")],
        num_classes=raw[("experiment", "num_classes")],
        num_cells=raw.get(("experiment", "num_cells")),
        num_features=raw.get(("experiment", "num_features")),
        num_x=raw.get(("experiment", "num_x"), 8),
        theta0=theta0,
        theta0_scale=theta0_scale,
        x_marginal=x_marginal,
        seed=raw[("experiment", "seed")],
        schedule_kind=raw[("schedule", "kind")],
        rho=raw.get(("schedule", "rho")),
        epsilon=raw.get(("schedule", "epsilon")),
        delta=raw.get(("schedule", "delta")),
        c=raw.get(("schedule", "c"), 0.0),
        sigma_min_mode=raw.get(("schedule", "sigma_min"), "oracle"),
        per_query=raw.get(("schedule", "per_query"), True),
        reference_x=raw.get(("schedule", "reference_x"), 0),
        n_grid=raw[("run", "n_grid")],
        replications=raw[("run", "replications")],
        workers=raw.get(("run", "workers"), 1),
        eval_panel=_parse_eval_x(raw.get(("run", "eval_x"))),
        out_dir=raw.get(("output", "dir")),
    )
    _validate(values)
    return ExperimentConfig(**values)


def config_from_dict(entries):
    """Build a validated config programmatically (presets, tests)."""
    allowed = {f.name for f in fields(ExperimentConfig)}
    unknown = set(entries) - allowed
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    values = dict(
        schema_version=SCHEMA_VERSION, name="experiment", num_x=8,
        theta0=(), theta0_scale=1.0, x_marginal=(), schedule_kind="fixed",
        rho=None, epsilon=None, delta=None, c=0.0, sigma_min_mode="oracle",
        per_query=True, reference_x=0, n_grid=(100,), replications=1,
        workers=1, eval_panel=None, out_dir=None, num_cells=None,
        num_features=None)
    values.update(entries)
    missing = [k for k in ("model", "num_classes", "seed") if k not in values]
    if missing:
        raise ConfigError(f"missing required config fields: {missing}")
    _validate(values)
    return ExperimentConfig(**values)
