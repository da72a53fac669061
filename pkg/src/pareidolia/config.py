"""Pipeline configuration: one flat record, strict JSON round trip."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class PipelineConfig:
    decay_kind: str = "linear"
    omega_min: float = 0.25
    omega_max: float = 2.5
    fit_order: int = 5
    fit_segments: int = 1
    samples_per_branch: int = 128
    pyramid_depth: int = 3
    eps_den: float = 1e-6
    d_tol: float = 0.75
    w_min: float = 1e-3
    m_eps: float = 1e-4
    max_step: int = 2
    metric_bins: int = 16

    def __post_init__(self):
        if self.decay_kind not in ("linear", "sine"):
            raise ValidationError(f"decay_kind must be linear or sine, got {self.decay_kind!r}")
        if not 0.0 < self.omega_min < 1.0 < self.omega_max:
            raise ValidationError(
                f"need 0 < omega_min < 1 < omega_max, got [{self.omega_min}, {self.omega_max}]"
            )
        if not 1 <= self.fit_order <= 31:
            raise ValidationError(f"fit_order must be in 1..31, got {self.fit_order}")
        if self.fit_segments < 1:
            raise ValidationError(f"fit_segments must be >= 1, got {self.fit_segments}")
        if self.samples_per_branch < 2:
            raise ValidationError("samples_per_branch must be >= 2")
        if not 1 <= self.pyramid_depth <= 8:
            raise ValidationError(f"pyramid_depth must be in 1..8, got {self.pyramid_depth}")
        if not self.eps_den > 0.0:
            raise ValidationError("eps_den must be positive")
        if not self.d_tol > 0.0:
            raise ValidationError("d_tol must be positive")
        if not self.w_min > 0.0:
            raise ValidationError("w_min must be positive")
        if self.m_eps < 0.0:
            raise ValidationError("m_eps must be >= 0")
        if self.max_step not in (1, 2):
            raise ValidationError(f"max_step must be 1 or 2, got {self.max_step}")
        if self.metric_bins < 1:
            raise ValidationError("metric_bins must be >= 1")

    def to_dict(self):
        return asdict(self)


_FLOAT_FIELDS = {"omega_min", "omega_max", "eps_den", "d_tol", "w_min", "m_eps"}
_INT_FIELDS = {
    "fit_order",
    "fit_segments",
    "samples_per_branch",
    "pyramid_depth",
    "max_step",
    "metric_bins",
}


def config_from_dict(obj):
    if not isinstance(obj, dict):
        raise ValidationError("config document must be an object")
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(obj) - known
    if unknown:
        raise ValidationError(f"unknown config fields: {sorted(unknown)}")
    kwargs = {}
    for name, value in obj.items():
        if name in _FLOAT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(f"config field {name} must be a number")
            kwargs[name] = float(value)
        elif name in _INT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValidationError(f"config field {name} must be an integer")
            kwargs[name] = value
        else:
            if not isinstance(value, str):
                raise ValidationError(f"config field {name} must be a string")
            kwargs[name] = value
    return PipelineConfig(**kwargs)


def parse_config(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"config: {e.msg}", line=e.lineno, col=e.colno) from e
    return config_from_dict(obj)


def serialize_config(cfg):
    return json.dumps(cfg.to_dict(), indent=2) + "\n"
