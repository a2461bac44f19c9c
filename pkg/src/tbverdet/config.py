"""Run configuration: defaults, config files, environment overrides.

Every setting has a dotted key such as ``params.beta`` or
``contour.nodes_per_edge``.  Values are resolved in increasing priority from
built-in defaults, a YAML/JSON config file, environment variables named
``TBVERDET_`` plus the upper-cased key with dots replaced by underscores
(``TBVERDET_PARAMS_BETA``), and finally command-line flags.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import yaml

from .contour import ContourSettings, ThermoOpticalParams
from .errors import ValidationError

__all__ = ["DEFAULTS", "ENV_PREFIX", "FORMAT_VERSION", "RunConfig", "dumps17", "env_name"]

FORMAT_VERSION = 1
ENV_PREFIX = "TBVERDET_"


def _float_list(value):
    if isinstance(value, str):
        value = [v for v in value.replace(",", " ").split() if v]
    return [float(v) for v in value]


def _opt_int(value):
    return None if value in (None, "", "none", "None") else int(value)


def _opt_str(value):
    return None if value in (None, "", "none", "None") else str(value)


# key -> (default, parser)
DEFAULTS: dict[str, tuple[object, object]] = {
    "model.preset": ("graphene", _opt_str),
    "model.file": (None, _opt_str),
    "model.a": (1.0, float),
    "params.beta": (10.0, float),
    "params.mu": (0.0, float),
    "params.omega0": (7.0, float),
    "params.eta": (0.0, float),
    "params.b": (0.0, float),
    "grid.n1": (64, int),
    "grid.n2": (None, _opt_int),
    "contour.nodes_per_edge": (16, int),
    "contour.delta": (0.5, float),
    "contour.half_height_factor": (0.5, float),
    "contour.panel_ratio": (2.0, float),
    "contour.delta_min": (0.1, float),
    "finite.N": (12, int),
    "finite.b": (0.0, float),
    "finite.b_step": (1e-3, float),
    "finite.eta_list": ([0.1, 0.05], _float_list),
    "finite.max_sites": (10_000, int),
    "finite.method": ("residue", str),
    "optics.d": (1.0, float),
    "optics.eps_r": (1.0, float),
    "optics.mu_r": (1.0, float),
    "optics.c": (1.0, float),
    "optics.omega": (None, lambda v: None if v in (None, "", "none", "None") else float(v)),
    "run.workers": (None, _opt_int),
    "output.path": (None, _opt_str),
    "output.format": ("json", str),
}


def env_name(key: str) -> str:
    return ENV_PREFIX + key.upper().replace(".", "_")


def _flatten(data, prefix=""):
    out = {}
    for k, v in data.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


@dataclass
class RunConfig:
    """Resolved settings; ``values`` maps every dotted key to its value."""

    values: dict

    @classmethod
    def resolve(cls, overrides: dict | None = None, config_file=None, environ=None) -> "RunConfig":
        environ = os.environ if environ is None else environ
        values = {k: d for k, (d, _) in DEFAULTS.items()}
        layers = []
        if config_file:
            try:
                data = yaml.safe_load(Path(config_file).read_text()) or {}
            except (OSError, yaml.YAMLError) as exc:
                raise ValidationError(f"cannot read config file {config_file}: {exc}") from exc
            if not isinstance(data, dict):
                raise ValidationError(f"config file {config_file} must contain a mapping")
            layers.append(("config file", _flatten(data)))
        layers.append(("environment", {k: environ[env_name(k)] for k in DEFAULTS if env_name(k) in environ}))
        layers.append(("command line", {k: v for k, v in (overrides or {}).items() if v is not None}))
        for source, layer in layers:
            for key, raw in layer.items():
                if key not in DEFAULTS:
                    raise ValidationError(f"unknown config key {key!r} from {source}")
                try:
                    values[key] = DEFAULTS[key][1](raw)
                except (TypeError, ValueError) as exc:
                    raise ValidationError(f"bad value {raw!r} for {key} from {source}") from exc
        cfg = cls(values)
        cfg.validate()
        return cfg

    def __getitem__(self, key):
        return self.values[key]

    def validate(self) -> None:
        v = self.values
        for key, value in v.items():
            if isinstance(value, float) and not math.isfinite(value):
                raise ValidationError(f"{key} must be finite")
        if v["grid.n1"] < 1 or (v["grid.n2"] is not None and v["grid.n2"] < 1):
            raise ValidationError("grid sizes must be positive")
        if v["run.workers"] is not None and v["run.workers"] < 1:
            raise ValidationError("run.workers must be at least 1")
        if v["output.format"] not in ("json", "text"):
            raise ValidationError("output.format must be 'json' or 'text'")
        if v["finite.method"] not in ("residue", "quadrature"):
            raise ValidationError("finite.method must be 'residue' or 'quadrature'")
        self.params()
        self.contour_settings()

    def params(self, **changes) -> ThermoOpticalParams:
        v = self.values
        kw = dict(beta=v["params.beta"], mu=v["params.mu"], omega0=v["params.omega0"],
                  eta=v["params.eta"], b=v["params.b"])
        kw.update(changes)
        return ThermoOpticalParams(**kw)

    def contour_settings(self) -> ContourSettings:
        v = self.values
        return ContourSettings(
            nodes_per_edge=v["contour.nodes_per_edge"],
            delta=v["contour.delta"],
            half_height_factor=v["contour.half_height_factor"],
            panel_ratio=v["contour.panel_ratio"],
            delta_min=v["contour.delta_min"],
        )

    def grid(self) -> tuple[int, int]:
        n1 = self.values["grid.n1"]
        n2 = self.values["grid.n2"]
        return n1, n1 if n2 is None else n2

    def as_dict(self) -> dict:
        return dict(sorted(self.values.items()))


def _fmt(value) -> str:
    if isinstance(value, bool) or value is None:
        return {True: "true", False: "false", None: "null"}[value]
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return "null"
        text = f"{value:.17g}"
        return text if any(ch in text for ch in ".en") else text + ".0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        return "{" + ", ".join(f"{_fmt(str(k))}: {_fmt(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    try:  # numpy scalars
        return _fmt(value.item())
    except AttributeError:
        raise TypeError(f"cannot serialise {type(value).__name__}") from None


def dumps17(obj) -> str:
    """JSON text with every float printed to 17 significant digits."""
    return _fmt(obj)
