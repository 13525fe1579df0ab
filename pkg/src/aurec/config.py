"""Flat key/value pipeline configuration.

Config files hold ``key = value`` lines (``#`` comments). Keys mirror the
field names of :class:`Config`; per-AU state counts use ``states.<au>``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .errors import DataError


@dataclass
class Config:
    region: str = "lower"
    aus: tuple = ()  # empty: every AU seen in the training manifest
    crop_margin: float = 0.2
    # tracker
    half_window: int = 5
    pyramid_levels: int = 3
    lk_max_iter: int = 20
    lk_epsilon: float = 0.01
    min_eig_ratio: float = 1e-4
    # features
    geo_k: int = 8
    gabor_scales: int = 4
    gabor_orientations: int = 4
    gabor_base_wavelength: float = 4.0
    gabor_sigma_ratio: float = 0.56
    gabor_aspect: float = 1.0
    downsample: int = 4
    k2d: int = 8
    app_k: int = 48
    # hmm
    default_states: int = 3
    states: dict = field(default_factory=dict)
    gmm_components: int = 3
    # fusion
    hidden: int = 0  # 0: max(8, 2M)
    learning_rate: float = 0.05
    momentum: float = 0.9
    epochs: int = 2000
    truncations: int = 5
    threshold: float = 0.5
    seed: int = 0

    def n_states(self, au):
        return int(self.states.get(int(au), self.default_states))

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["aus"] = [int(a) for a in self.aus]
        d["states"] = {str(k): int(v) for k, v in sorted(self.states.items())}
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["aus"] = tuple(int(a) for a in d.get("aus", ()))
        d["states"] = {int(k): int(v) for k, v in d.get("states", {}).items()}
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def _coerce(name, text, current):
    if isinstance(current, bool):
        return text.lower() in ("1", "true", "yes", "on")
    if isinstance(current, int):
        return int(text)
    if isinstance(current, float):
        return float(text)
    if isinstance(current, tuple):
        return tuple(int(v) for v in text.replace(",", " ").split())
    return text


def parse_config(text, base=None):
    cfg = dataclasses.replace(base) if base is not None else Config()
    cfg.states = dict(cfg.states)
    fields = {f.name for f in dataclasses.fields(Config)}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise DataError(f"config line {lineno}: expected key = value")
        key, value = key.strip(), value.strip()
        if key.startswith("states."):
            cfg.states[int(key.split(".", 1)[1])] = int(value)
            continue
        if key not in fields or key == "states":
            raise DataError(f"config line {lineno}: unknown key {key!r}")
        try:
            setattr(cfg, key, _coerce(key, value, getattr(cfg, key)))
        except ValueError as exc:
            raise DataError(f"config line {lineno}: {exc}") from None
    return cfg
