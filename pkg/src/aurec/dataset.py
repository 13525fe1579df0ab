"""Sequences, manifests, PGM/landmark I/O and face-region cropping."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import DataError

REGIONS = ("upper", "lower")
EXPRESSIONS = ("surprise", "gloomy", "fear", "happy", "angry", "disgust")

# (rows, cols) of the resampled face-part crop
CROP_SHAPES = {"upper": (52, 157), "lower": (57, 102)}

# Default selected grid points (Candide-3 vertex numbering). Only the counts
# are enforced by the loaders; the indices document which vertices a landmark
# file is expected to list, in order.
POINT_SUBSETS = {
    # brows, upper/lower lids, cheeks
    "upper": (15, 16, 17, 18, 48, 49, 50, 51, 20, 21, 53, 54, 28, 61),
    # nose flanks, lip contour, chin
    "lower": (75, 76, 7, 31, 64, 79, 80, 8, 84, 85, 10, 26),
}


@dataclass(frozen=True)
class GroundTruth:
    aus: frozenset
    apex_intensity: float = 1.0
    expression: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "aus", frozenset(int(a) for a in self.aus))
        if not 0.0 < self.apex_intensity <= 1.0:
            raise DataError(f"apex intensity {self.apex_intensity} outside (0, 1]")
        if self.expression is not None and self.expression not in EXPRESSIONS:
            raise DataError(f"unknown expression {self.expression!r}")


@dataclass(frozen=True)
class ManifestRecord:
    sequence: str
    landmarks: str
    region: str
    truth: GroundTruth


@dataclass
class Manifest:
    records: list = field(default_factory=list)
    root: Path | None = None

    def resolve(self, path):
        p = Path(path)
        if self.root is not None and not p.is_absolute():
            p = self.root / p
        return p

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


@dataclass
class ImageSequence:
    """Grayscale frames (t, rows, cols) in [0, 1], neutral first."""

    frames: np.ndarray
    initial_landmarks: np.ndarray
    region: str

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=float)
        self.initial_landmarks = np.asarray(self.initial_landmarks, dtype=float)
        if self.frames.ndim != 3:
            raise DataError("frames must be a (t, rows, cols) stack")
        if self.frames.shape[0] < 2:
            raise DataError("sequence too short: need at least 2 frames")
        if self.frames.shape[1] < 1 or self.frames.shape[2] < 1:
            raise DataError("empty frame")
        if self.region not in REGIONS:
            raise DataError(f"unknown region {self.region!r}")
        if self.initial_landmarks.ndim != 2 or self.initial_landmarks.shape[1] != 2:
            raise DataError("landmarks must be an (n, 2) array of x y")

    @property
    def t(self):
        return self.frames.shape[0]


def parse_manifest(text, root=None):
    """Parse the tab-separated manifest format.

    Each data line is ``seq_dir, landmark_file, region, au_list,
    apex_intensity, expression`` separated by tabs; ``#`` starts a comment
    line and ``-`` stands for "no expression".
    """
    records = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 6:
            raise DataError(f"manifest line {lineno}: expected 6 tab-separated fields, got {len(cols)}")
        seq, lm, region, au_text, inten_text, expr = (c.strip() for c in cols)
        if region not in REGIONS:
            raise DataError(f"manifest line {lineno}: unknown region {region!r}")
        if seq in seen:
            raise DataError(f"manifest line {lineno}: duplicate sequence path {seq!r}")
        try:
            aus = frozenset(int(a) for a in au_text.split(",") if a.strip())
            inten = float(inten_text)
        except ValueError as exc:
            raise DataError(f"manifest line {lineno}: {exc}") from None
        if not aus:
            raise DataError(f"manifest line {lineno}: empty AU list")
        try:
            truth = GroundTruth(aus, inten, None if expr == "-" else expr)
        except DataError as exc:
            raise DataError(f"manifest line {lineno}: {exc}") from None
        seen.add(seq)
        records.append(ManifestRecord(seq, lm, region, truth))
    return Manifest(records, Path(root) if root is not None else None)


def serialize_manifest(manifest, header=True):
    lines = ["# seq_dir\tlandmarks\tregion\taus\tapex_intensity\texpression"] if header else []
    for r in manifest.records:
        aus = ",".join(str(a) for a in sorted(r.truth.aus))
        lines.append("\t".join([
            r.sequence, r.landmarks, r.region, aus,
            repr(float(r.truth.apex_intensity)), r.truth.expression or "-",
        ]))
    return "\n".join(lines) + "\n"


def read_manifest(path):
    path = Path(path)
    return parse_manifest(path.read_text(encoding="utf-8"), root=path.parent)


def write_manifest(manifest, path):
    Path(path).write_text(serialize_manifest(manifest), encoding="utf-8")


def read_pgm(path):
    with Image.open(path) as im:
        if im.format != "PPM" or im.mode != "L":
            raise DataError(f"{path}: not an 8-bit grayscale PGM")
        return np.asarray(im, dtype=float) / 255.0


def write_pgm(path, pixels):
    data = np.clip(np.rint(np.asarray(pixels) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path, format="PPM")


def read_landmarks(path):
    pts = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected 'x y'")
        try:
            pts.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric coordinate") from None
    return np.array(pts, dtype=float).reshape(-1, 2)


def write_landmarks(path, points):
    Path(path).write_text("".join(f"{x!r} {y!r}\n" for x, y in np.asarray(points, dtype=float).tolist()))


def load_sequence(record, manifest=None, subsets=None):
    """Decode one manifest record into an :class:`ImageSequence`."""
    subsets = subsets or POINT_SUBSETS
    resolve = manifest.resolve if manifest is not None else Path
    seq_dir = resolve(record.sequence)
    files = sorted(p for p in Path(seq_dir).iterdir() if p.suffix.lower() == ".pgm")
    if len(files) < 2:
        raise DataError(f"{seq_dir}: sequence too short ({len(files)} frame(s))")
    frames = [read_pgm(p) for p in files]
    shape = frames[0].shape
    for p, fr in zip(files, frames):
        if fr.shape != shape:
            raise DataError(f"{p}: dimension mismatch {fr.shape} vs {shape}")
    lm = read_landmarks(resolve(record.landmarks))
    expected = len(subsets[record.region])
    if lm.shape[0] != expected:
        raise DataError(f"{record.landmarks}: {lm.shape[0]} landmarks, region "
                        f"{record.region!r} expects {expected}")
    return ImageSequence(np.stack(frames), lm, record.region)


def crop_box(landmarks, frame_shape, margin=0.2):
    """Landmark bounding box grown by ``margin`` per side, clamped to the frame.

    Returns ``(x0, y0, x1, y1)`` in pixel coordinates.
    """
    lm = np.asarray(landmarks, dtype=float)
    x0, y0 = lm.min(axis=0)
    x1, y1 = lm.max(axis=0)
    bw, bh = x1 - x0, y1 - y0
    if bw <= 0 or bh <= 0:
        raise DataError("degenerate region: landmark bounding box has zero area")
    rows, cols = frame_shape
    return (max(0.0, x0 - margin * bw), max(0.0, y0 - margin * bh),
            min(cols - 1.0, x1 + margin * bw), min(rows - 1.0, y1 + margin * bh))


def crop_region(frame, landmarks, region, margin=0.2):
    """Bilinear resample of the landmark box to the region's fixed crop shape."""
    frame = np.asarray(frame, dtype=float)
    x0, y0, x1, y1 = crop_box(landmarks, frame.shape, margin)
    out_rows, out_cols = CROP_SHAPES[region]
    ys = np.linspace(y0, y1, out_rows)
    xs = np.linspace(x0, x1, out_cols)
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return ndimage.map_coordinates(frame, [yy, xx], order=1, mode="nearest")


def crop_sequence(seq, margin=0.2):
    """Crop every frame with the box of the first-frame landmarks."""
    x0, y0, x1, y1 = crop_box(seq.initial_landmarks, seq.frames.shape[1:], margin)
    out_rows, out_cols = CROP_SHAPES[seq.region]
    yy, xx = np.meshgrid(np.linspace(y0, y1, out_rows), np.linspace(x0, x1, out_cols),
                         indexing="ij")
    return np.stack([ndimage.map_coordinates(f, [yy, xx], order=1, mode="nearest")
                     for f in seq.frames])


def load_point_subsets(text):
    """Parse ``region: i j k ...`` lines into a subsets mapping."""
    subsets = dict(POINT_SUBSETS)
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        name, _, rest = line.partition(":")
        name = name.strip()
        if name not in REGIONS:
            raise DataError(f"point subsets line {lineno}: unknown region {name!r}")
        idx = tuple(int(v) for v in rest.split())
        if not idx:
            raise DataError(f"point subsets line {lineno}: empty index list")
        subsets[name] = idx
    return subsets

