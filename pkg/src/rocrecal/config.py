"""Flat ``key = value`` configuration files.

Blank lines and ``#`` comments are ignored. Lists are comma-separated,
booleans are ``true``/``false``. Unknown or repeated keys are errors.

Synthetic data
    ``d`` (required), ``n_train``, ``n_test``, ``seed``, and per stratum
    ``s1_*`` / ``s2_*``: ``share``, ``mean``, ``scale``, ``intercept``,
    ``coef``, ``quad`` (lists of length ``d``), ``rate_pos``, ``rate_neg``.
Experiment
    ``mode`` (given-strata | pca-strata), ``strata_mode`` (sign | quantile),
    ``n_strata``, ``unbalancing`` (none | weighting | undersampling),
    ``class_weights`` (w0,w1), ``undersample_rate``, ``calib_fraction``,
    ``l2``, ``epochs``, ``lr``, ``reps``, ``master_seed``, ``workers``.
Calibrator
    ``span``, ``min_neighbors``, ``monotone``, ``floor``, ``laplace``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Callable

from rocrecal.calibrator import CalibratorConfig
from rocrecal.errors import ConfigError, RocrecalError
from rocrecal.experiment import ExperimentConfig
from rocrecal.synth import StratumSpec, SyntheticSpec


def _bool(text: str) -> bool:
    if text.lower() not in ("true", "false"):
        raise ValueError(f"expected true or false, got {text!r}")
    return text.lower() == "true"


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


_STRATUM_KEYS: dict[str, Callable[[str], Any]] = {
    "share": float,
    "mean": _floats,
    "scale": _floats,
    "intercept": float,
    "coef": _floats,
    "quad": _floats,
    "rate_pos": float,
    "rate_neg": float,
}

KEYS: dict[str, Callable[[str], Any]] = {
    "d": int,
    "n_train": int,
    "n_test": int,
    "seed": int,
    "mode": str,
    "strata_mode": str,
    "n_strata": int,
    "unbalancing": str,
    "class_weights": _floats,
    "undersample_rate": float,
    "calib_fraction": float,
    "l2": float,
    "epochs": int,
    "lr": float,
    "reps": int,
    "master_seed": int,
    "workers": int,
    "span": float,
    "min_neighbors": int,
    "monotone": _bool,
    "floor": float,
    "laplace": _bool,
}
for _p in ("s1", "s2"):
    for _k, _conv in _STRATUM_KEYS.items():
        KEYS[f"{_p}_{_k}"] = _conv

CALIBRATOR_KEYS = ("span", "min_neighbors", "monotone", "floor", "laplace")
EXPERIMENT_KEYS = (
    "mode", "strata_mode", "n_strata", "unbalancing", "class_weights", "undersample_rate",
    "calib_fraction", "l2", "epochs", "lr", "reps", "master_seed", "workers",
)


def parse_config(text: str) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: key {key!r} given twice")
        try:
            values[key] = KEYS[key](value)
        except ValueError as err:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {err}") from None
    return values


def load_config(path) -> dict[str, Any]:
    return parse_config(Path(path).read_text())


def spec_from_values(values: dict[str, Any]) -> SyntheticSpec:
    if "d" not in values:
        raise ConfigError("missing required key 'd'")
    d = values["d"]
    strata = []
    defaults = {
        "share": 1.0,
        "mean": (0.0,) * d,
        "scale": (1.0,) * d,
        "intercept": 0.0,
        "coef": (0.0,) * d,
        "quad": (0.0,) * d,
        "rate_pos": 1.0,
        "rate_neg": 1.0,
    }
    for p in ("s1", "s2"):
        strata.append(StratumSpec(**{k: values.get(f"{p}_{k}", v) for k, v in defaults.items()}))
    kwargs = {k: values[k] for k in ("n_train", "n_test", "seed") if k in values}
    try:
        return SyntheticSpec(d=d, strata=tuple(strata), **kwargs)
    except RocrecalError as err:
        raise ConfigError(str(err)) from None


def calibrator_config_from_values(values: dict[str, Any], **defaults) -> CalibratorConfig:
    kwargs = dict(defaults)
    kwargs.update({k: values[k] for k in CALIBRATOR_KEYS if k in values})
    return CalibratorConfig(**kwargs)


def experiment_from_values(values: dict[str, Any]) -> ExperimentConfig:
    kwargs = {k: values[k] for k in EXPERIMENT_KEYS if k in values}
    if "class_weights" in kwargs:
        if len(kwargs["class_weights"]) != 2:
            raise ConfigError("class_weights needs exactly two values: w0,w1")
    kwargs["calibrator"] = calibrator_config_from_values(values, laplace=True)
    try:
        return ExperimentConfig(spec=spec_from_values(values), **kwargs)
    except RocrecalError as err:
        raise ConfigError(str(err)) from None
