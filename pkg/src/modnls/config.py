"""Run configuration files (TOML) merged with command-line overrides.

A file looks like::

    largest_mode = 128
    T = 1.0
    m = 100
    steps = [16, 32, 64, 128, 256, 512, 1024]
    base_seed = 20240601

    [scheme]
    names = ["randomized_exponential", "strang"]
    dealias = false

    [modulation]
    kind = "rough_fourier"
    alpha = 0.5
    seed = 3

Keys left out take the defaults of :class:`RunConfig`.
"""

from __future__ import annotations

import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .experiments import RunConfig
from .modulation import KINDS

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_FIELDS = {f.name for f in fields(RunConfig)}
_MODULATION_KEYS = {"kind", "slope", "intercept", "alpha", "n_modes", "seed", "horizon",
                    "amplitude", "n_steps"}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


def _flatten(raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        if key == "scheme":
            if not isinstance(value, dict):
                raise ConfigError("scheme: expected a section")
            for sub, v in value.items():
                if sub == "names":
                    out["schemes"] = v
                elif sub == "dealias":
                    out["dealias"] = v
                else:
                    raise ConfigError(f"scheme.{sub}: unknown key")
        elif key == "modulation":
            if not isinstance(value, dict):
                raise ConfigError("modulation: expected a section")
            for sub in value:
                if sub not in _MODULATION_KEYS:
                    raise ConfigError(f"modulation.{sub}: unknown key")
            out["modulation"] = dict(value)
        elif key in _FIELDS:
            out[key] = value
        else:
            raise ConfigError(f"{key}: unknown key")
    return out


def load_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: cannot parse ({exc})") from exc
    return _flatten(raw)


def resolve_seed(value):
    """'random' draws a fresh seed from OS entropy; anything else must be an int."""
    if isinstance(value, str) and value.lower() == "random":
        return int(np.random.SeedSequence().entropy % (1 << 63))
    return value


def parse_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then file values, then non-None ``overrides``; validated.

    Override keys are RunConfig field names plus ``alpha``, ``kind`` and
    ``modulation_seed``, which edit the modulation section.
    """
    values = load_file(path) if path is not None else {}
    modulation = dict(values.pop("modulation", RunConfig().modulation))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "kind":
            if modulation.get("kind") != value:
                modulation = {"kind": value}
        elif key == "alpha":
            modulation["alpha"] = value
            if modulation.get("kind") != "rough_fourier":
                modulation = {"kind": "rough_fourier", "alpha": value}
        elif key == "modulation_seed":
            modulation["seed"] = value
        elif key in _FIELDS:
            values[key] = value
        else:
            raise ConfigError(f"{key}: unknown override")
    if modulation.get("kind") not in KINDS:
        raise ConfigError(f"modulation.kind: expected one of {KINDS}, got {modulation.get('kind')!r}")
    if modulation["kind"] == "rough_fourier" and "alpha" not in modulation:
        raise ConfigError("modulation.alpha: required for rough_fourier")
    values["modulation"] = modulation
    for key in ("base_seed", "reference_seed"):
        if key in values:
            values[key] = resolve_seed(values[key])
    _check_types(values)
    try:
        return RunConfig(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    except TypeError as exc:
        raise ConfigError(f"invalid value: {exc}") from exc


_INT_KEYS = ("dim", "largest_mode", "m", "refinement", "workers", "base_seed", "reference_seed")
_FLOAT_KEYS = ("sigma", "T")
_BOOL_KEYS = ("dealias", "reference_check", "max_over_steps")


def _check_types(values: dict) -> None:
    for key in _INT_KEYS:
        if key in values and (isinstance(values[key], bool) or not isinstance(values[key], int)):
            raise ConfigError(f"{key}: expected an integer, got {values[key]!r}")
    for key in _FLOAT_KEYS:
        if key in values:
            if isinstance(values[key], bool) or not isinstance(values[key], (int, float)):
                raise ConfigError(f"{key}: expected a number, got {values[key]!r}")
            values[key] = float(values[key])
    for key in _BOOL_KEYS:
        if key in values and not isinstance(values[key], bool):
            raise ConfigError(f"{key}: expected true or false, got {values[key]!r}")
    if "steps" in values and not isinstance(values["steps"], (list, tuple)):
        raise ConfigError(f"steps: expected a list, got {values['steps']!r}")
    if "schemes" in values and not isinstance(values["schemes"], (list, tuple)):
        raise ConfigError(f"scheme.names: expected a list, got {values['schemes']!r}")
