"""Hyperparameters and run configuration.

The config file is flat ``key = value`` text; ``#`` starts a comment.
Every key of :class:`Config` may appear at most once and unknown keys are
rejected, so a misspelt threshold fails loudly instead of silently using the
default.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field, fields

CONFIG_ENV = "RIMFIT_CONFIG"


class BadConfig(ValueError):
    pass


@dataclass(frozen=True)
class HyperParams:
    """The nine tunables of the fitting pipeline. Defaults are parameter set A."""

    g_m: float = 0.6  # IoU above which food boxes merge
    s: int = 8  # step between the two ends of a direction vector, in contour points
    epsilon: float = 2.0  # max L1 change between consecutive direction vectors
    l_min: int = 60  # min points for an extracted contour
    d_chord: float = 7.0  # contours whose max deviation from their chord is below this are straight
    h_gap: float = 10.0  # allowed spread of rim-to-food distances
    m_score: float = 150.0  # mean squared residual (px^2) below which two contours merge
    a_p: float = 0.08  # max fraction of ellipse area outside its plate box
    d_f: float = 450.0  # max distance from ellipse centre to nearest food centre

    def __post_init__(self):
        if self.s < 1 or self.l_min < 1:
            raise BadConfig("s and l_min must be >= 1")
        for name in ("g_m", "epsilon", "d_chord", "h_gap", "m_score", "d_f"):
            if getattr(self, name) <= 0:
                raise BadConfig(f"{name} must be positive")
        if not 0 < self.a_p < 1:
            raise BadConfig("a_p must lie in (0, 1)")
        if self.g_m > 1:
            raise BadConfig("g_m must lie in (0, 1]")

    @classmethod
    def set_a(cls):
        return cls()

    @classmethod
    def set_b(cls):
        return cls(g_m=0.7, s=7, epsilon=2.0, l_min=60, d_chord=7.5, h_gap=10.0,
                   m_score=125.0, a_p=0.06, d_f=450.0)


@dataclass(frozen=True)
class Config:
    hyper: HyperParams = field(default_factory=HyperParams)
    canny_sigma: float = 2.5
    canny_low_quantile: float = 0.7
    canny_high_quantile: float = 0.9
    detector_floor: float = 0.35
    strict_containment: bool = False
    squared_chord: bool = False
    squared_food_distance: bool = False
    chamfer_normalized: bool = True
    n_samples: int = 360

    def __post_init__(self):
        if self.canny_sigma <= 0:
            raise BadConfig("canny_sigma must be positive")
        if not 0 <= self.canny_low_quantile <= self.canny_high_quantile <= 1:
            raise BadConfig("need 0 <= canny_low_quantile <= canny_high_quantile <= 1")
        if not 0 <= self.detector_floor <= 1:
            raise BadConfig("detector_floor must lie in [0, 1]")
        if self.n_samples < 3:
            raise BadConfig("n_samples must be >= 3")

    def to_flat(self):
        out = {f.name: getattr(self.hyper, f.name) for f in fields(HyperParams)}
        for f in fields(self):
            if f.name != "hyper":
                out[f.name] = getattr(self, f.name)
        return out

    @classmethod
    def from_flat(cls, flat):
        hyper_keys = {f.name for f in fields(HyperParams)}
        own_keys = {f.name for f in fields(cls)} - {"hyper"}
        unknown = set(flat) - hyper_keys - own_keys
        if unknown:
            raise BadConfig(f"unknown config keys: {sorted(unknown)}")
        hyper = HyperParams(**{k: v for k, v in flat.items() if k in hyper_keys})
        return cls(hyper=hyper, **{k: v for k, v in flat.items() if k in own_keys})


def _field_types():
    types = {f.name: f.type for f in fields(HyperParams)}
    types.update({f.name: f.type for f in fields(Config) if f.name != "hyper"})
    return types


def _parse_value(key, raw, typ):
    try:
        if typ in ("bool", bool):
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if typ in ("int", int):
            return int(raw)
        return float(raw)
    except ValueError:
        raise BadConfig(f"bad value for {key}: {raw!r}") from None


def parse_config(text):
    types = _field_types()
    flat = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadConfig(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in types:
            raise BadConfig(f"line {lineno}: unknown key {key!r}")
        if key in flat:
            raise BadConfig(f"line {lineno}: duplicate key {key!r}")
        flat[key] = _parse_value(key, raw, types[key])
    try:
        return Config.from_flat(flat)
    except TypeError as exc:
        raise BadConfig(str(exc)) from None


def format_config(cfg):
    lines = []
    for key, value in cfg.to_flat().items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        else:
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def load_config(path=None):
    """Read a config file; falls back to ``$RIMFIT_CONFIG`` and then to defaults."""
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return Config()
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise BadConfig(f"cannot read config {path}: {exc}") from None


def save_config(cfg, path):
    with open(path, "w") as fh:
        fh.write(format_config(cfg))


def replace(cfg, **changes):
    hyper_names = {f.name for f in fields(HyperParams)}
    hyper = {k: v for k, v in changes.items() if k in hyper_names}
    rest = {k: v for k, v in changes.items() if k not in hyper_names}
    if hyper:
        rest["hyper"] = dataclasses.replace(cfg.hyper, **hyper)
    return dataclasses.replace(cfg, **rest)
