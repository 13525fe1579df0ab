"""Synthetic expression sequences for desk-scale end-to-end checks.

Each synthetic AU is a smooth displacement field over the face (a sum of
Gaussian lobes) plus a local contrast boost at the same spots. Frames warp a
per-subject random texture by ``ramp(f)`` times the summed fields of the
active AUs, so combinations are additive by construction.
"""

from __future__ import annotations

import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .dataset import GroundTruth, ImageSequence, Manifest, ManifestRecord, write_landmarks, write_manifest, write_pgm
from .errors import DataError


@dataclass(frozen=True)
class Lobe:
    center: tuple  # (x, y)
    shift: tuple  # (dx, dy) at the centre, pixels
    radius: float | None = None  # None: uniform translation

    def weight(self, x, y):
        if self.radius is None:
            return np.ones(np.broadcast(x, y).shape)
        cx, cy = self.center
        return np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * self.radius ** 2))


@dataclass(frozen=True)
class SynthAu:
    au: int
    lobes: tuple
    contrast_gain: float = 0.5


@dataclass
class SynthSpec:
    region: str
    frame_shape: tuple  # (rows, cols)
    landmarks: np.ndarray  # (P, 2) template x y
    aus: list
    combinations: list = field(default_factory=list)
    t: int = 9
    noise: float = 0.01
    texture_seed: int = 0
    amplitude_jitter: float = 0.2
    ramp_gamma_range: tuple = (0.8, 1.25)
    landmark_jitter: float = 1.5
    expressions: dict = field(default_factory=dict)  # class tuple -> expression label

    def __post_init__(self):
        defined = {a.au for a in self.aus}
        for combo in self.combinations:
            missing = set(combo) - defined
            if missing:
                raise DataError(f"combination {combo} references undefined AUs {sorted(missing)}")
        for a in self.aus:
            for lobe in a.lobes:
                if not np.all(np.isfinite(lobe.shift)) or np.hypot(*lobe.shift) > 20:
                    raise DataError(f"AU {a.au}: displacement lobe out of bounds")

    def classes(self):
        return [(a.au,) for a in self.aus] + [tuple(sorted(c)) for c in self.combinations]

    def au_by_id(self, au):
        for a in self.aus:
            if a.au == au:
                return a
        raise KeyError(au)


def default_spec(region="lower", **kw):
    if region == "lower":
        lm = np.array([(44, 30), (84, 30), (52, 44), (64, 42), (76, 44), (34, 50), (94, 50),
                       (52, 58), (64, 60), (76, 58), (54, 74), (74, 74)], dtype=float)
        aus = [
            SynthAu(9, (Lobe((44, 30), (1.0, -3.0), 9), Lobe((84, 30), (-1.0, -3.0), 9))),
            SynthAu(10, (Lobe((64, 43), (0.0, -3.0), 10),)),
            SynthAu(12, (Lobe((34, 50), (-2.5, -2.0), 9), Lobe((94, 50), (2.5, -2.0), 9))),
            SynthAu(15, (Lobe((34, 50), (0.0, 3.0), 9), Lobe((94, 50), (0.0, 3.0), 9))),
            SynthAu(17, (Lobe((64, 74), (0.0, -3.0), 12),)),
            SynthAu(25, (Lobe((64, 59), (0.0, 3.5), 9),)),
        ]
        combos = [(9, 17), (10, 17), (12, 25), (15, 17), (9, 25), (10, 25)]
        shape = (96, 128)
    elif region == "upper":
        lm = np.array([(38, 30), (52, 26), (66, 30), (94, 30), (108, 26), (122, 30),
                       (52, 42), (108, 42), (52, 54), (108, 54), (64, 48), (96, 48),
                       (48, 70), (112, 70)], dtype=float)
        aus = [
            SynthAu(1, (Lobe((66, 30), (0.0, -3.0), 9), Lobe((94, 30), (0.0, -3.0), 9))),
            SynthAu(2, (Lobe((38, 30), (0.0, -3.0), 9), Lobe((122, 30), (0.0, -3.0), 9))),
            SynthAu(4, (Lobe((66, 30), (2.0, 2.5), 12), Lobe((94, 30), (-2.0, 2.5), 12))),
            SynthAu(5, (Lobe((52, 42), (0.0, -2.5), 6), Lobe((108, 42), (0.0, -2.5), 6))),
            SynthAu(6, (Lobe((48, 70), (0.0, -3.0), 10), Lobe((112, 70), (0.0, -3.0), 10))),
            SynthAu(7, (Lobe((52, 54), (0.0, -2.0), 6), Lobe((108, 54), (0.0, -2.0), 6))),
        ]
        combos = [(1, 2), (1, 4), (1, 6), (4, 5), (6, 7), (2, 5)]
        shape = (100, 160)
    else:
        raise DataError(f"unknown region {region!r}")
    return SynthSpec(region, shape, lm, aus, combos, **kw)


# class -> expression label, used when a synthetic set should carry expressions
DEFAULT_EXPRESSIONS = {
    "lower": {(9,): "disgust", (10,): "angry", (12,): "happy", (15,): "gloomy", (17,): "gloomy",
              (25,): "surprise", (9, 17): "disgust", (10, 17): "angry", (12, 25): "happy",
              (15, 17): "gloomy", (9, 25): "fear", (10, 25): "fear"},
    "upper": {(1,): "surprise", (2,): "surprise", (4,): "angry", (5,): "fear", (6,): "happy",
              (7,): "angry", (1, 2): "surprise", (1, 4): "gloomy", (1, 6): "happy", (4, 5): "fear",
              (6, 7): "disgust", (2, 5): "surprise"},
}


def displacement_field(spec, scales, x, y):
    """Summed displacement (dx, dy) at points (x, y) for AU -> scale."""
    dx = np.zeros(np.broadcast(x, y).shape)
    dy = np.zeros_like(dx)
    for au, s in scales.items():
        for lobe in spec.au_by_id(au).lobes:
            w = s * lobe.weight(x, y)
            dx += w * lobe.shift[0]
            dy += w * lobe.shift[1]
    return dx, dy


def contrast_field(spec, scales, x, y):
    c = np.zeros(np.broadcast(x, y).shape)
    for au, s in scales.items():
        a = spec.au_by_id(au)
        for lobe in a.lobes:
            if lobe.radius is not None:
                c += s * a.contrast_gain * lobe.weight(x, y)
    return c


def make_texture(shape, rng):
    noise = ndimage.gaussian_filter(rng.standard_normal(shape), 2.0)
    noise /= noise.std()
    rows, cols = shape
    yy, xx = np.mgrid[0:rows, 0:cols]
    shading = 0.05 * np.sin(2 * np.pi * (xx / cols * rng.uniform(0.5, 1.5) + rng.uniform()))
    return np.clip(0.5 + 0.12 * noise + shading, 0.0, 1.0)


def render_sequence(spec, aus, rng, t=None):
    """Render one sequence for the AU tuple; returns (ImageSequence, ramp)."""
    t = t or spec.t
    rows, cols = spec.frame_shape
    base = make_texture(spec.frame_shape, rng)
    scales = {au: 1.0 + rng.uniform(-spec.amplitude_jitter, spec.amplitude_jitter) for au in aus}
    gamma = rng.uniform(*spec.ramp_gamma_range)
    ramp = (np.arange(t) / (t - 1)) ** gamma
    yy, xx = np.mgrid[0:rows, 0:cols].astype(float)
    dx, dy = displacement_field(spec, scales, xx, yy)
    frames = []
    for r in ramp:
        # inverse warp: the field is smooth, so evaluating it at the target is close enough
        sx, sy = xx - r * dx, yy - r * dy
        src = ndimage.map_coordinates(base, [sy, sx], order=1, mode="nearest")
        boost = 1.0 + r * contrast_field(spec, scales, sx, sy)
        img = 0.5 + (src - 0.5) * boost
        if spec.noise > 0:
            img = img + rng.normal(0.0, spec.noise, img.shape)
        frames.append(np.clip(img, 0.0, 1.0))
    jitter = rng.uniform(-spec.landmark_jitter, spec.landmark_jitter, 2)
    lm = spec.landmarks + jitter
    return ImageSequence(np.stack(frames), lm, spec.region), ramp


def _class_name(aus):
    return "au" + "+".join(str(a) for a in aus)


def synth_sequences(spec, n_per_class, seed):
    """In-memory variant of :func:`synth_generate`: list of (seq, truth, ramp)."""
    out = []
    for ci, aus in enumerate(spec.classes()):
        for i in range(n_per_class):
            rng = np.random.default_rng([seed, spec.texture_seed, ci, i])
            seq, ramp = render_sequence(spec, aus, rng)
            out.append((seq, GroundTruth(frozenset(aus), 1.0, spec.expressions.get(aus)), ramp))
    return out


def synth_generate(spec, n_per_class, seed, out_dir, force=False):
    """Write PGM frames, landmark files and ``manifest.tsv`` under ``out_dir``."""
    out_dir = Path(out_dir)
    if out_dir.exists() and any(out_dir.iterdir()):
        if not force:
            raise DataError(f"output directory {out_dir} is not empty (use --force)")
        shutil.rmtree(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for ci, aus in enumerate(spec.classes()):
        for i in range(n_per_class):
            rng = np.random.default_rng([seed, spec.texture_seed, ci, i])
            seq, _ = render_sequence(spec, aus, rng)
            name = f"{_class_name(aus)}_{i:03d}"
            seq_dir = out_dir / "seqs" / name
            seq_dir.mkdir(parents=True)
            for f, frame in enumerate(seq.frames):
                write_pgm(seq_dir / f"frame_{f:03d}.pgm", frame)
            write_landmarks(out_dir / "seqs" / f"{name}.lm", seq.initial_landmarks)
            truth = GroundTruth(frozenset(aus), 1.0, spec.expressions.get(aus))
            records.append(ManifestRecord(f"seqs/{name}", f"seqs/{name}.lm", spec.region, truth))
    manifest = Manifest(records, out_dir)
    write_manifest(manifest, out_dir / "manifest.tsv")
    return manifest
