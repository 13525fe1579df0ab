"""Pyramidal Lucas-Kanade tracking of the selected grid points.

Points are chained frame to frame. A point the tracker loses in some frame
is refilled from the least-squares affine motion of the points that were
tracked successfully across the same step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from . import _kernels
from .errors import DataError

_BLUR = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


@dataclass(frozen=True)
class TrackerParams:
    half_window: int = 5
    levels: int = 3
    max_iter: int = 20
    epsilon: float = 0.01
    # fraction of the window area
    min_eig_ratio: float = 1e-4

    @property
    def window_area(self):
        return (2 * self.half_window + 1) ** 2


class TrackedPoint(NamedTuple):
    position: np.ndarray
    valid: bool
    residual: float


@dataclass
class PyramidLevel:
    image: np.ndarray
    grad_x: np.ndarray
    grad_y: np.ndarray


@dataclass
class LandmarkTrajectory:
    """Per-frame positions ``(t, P, 2)`` with validity bookkeeping."""

    positions: np.ndarray
    valid: np.ndarray
    reconstructed: np.ndarray
    residual: np.ndarray
    source_dims: tuple

    @property
    def t(self):
        return self.positions.shape[0]

    @property
    def n_points(self):
        return self.positions.shape[1]

    def truncated(self, end):
        """Prefix ending at frame index ``end`` (inclusive)."""
        s = slice(0, end + 1)
        return LandmarkTrajectory(self.positions[s], self.valid[s], self.reconstructed[s],
                                  self.residual[s], self.source_dims)

    def to_text(self):
        lines = []
        for f in range(self.t):
            for p in range(self.n_points):
                x, y = (float(v) for v in self.positions[f, p])
                lines.append(f"{f} {p} {x!r} {y!r} {int(self.valid[f, p])} "
                             f"{int(self.reconstructed[f, p])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, source_dims=(0, 0)):
        rows = [line.split() for line in text.splitlines() if line.strip()]
        t = max(int(r[0]) for r in rows) + 1
        n = max(int(r[1]) for r in rows) + 1
        pos = np.zeros((t, n, 2))
        valid = np.zeros((t, n), bool)
        rec = np.zeros((t, n), bool)
        for r in rows:
            f, p = int(r[0]), int(r[1])
            pos[f, p] = float(r[2]), float(r[3])
            valid[f, p] = r[4] == "1"
            rec[f, p] = r[5] == "1"
        residual = np.where(rec, np.inf, 0.0)
        return cls(pos, valid, rec, residual, tuple(source_dims))


def _blur(img):
    out = ndimage.correlate1d(img, _BLUR, axis=0, mode="nearest")
    return ndimage.correlate1d(out, _BLUR, axis=1, mode="nearest")


def _gradients(img):
    gx = np.zeros_like(img)
    gy = np.zeros_like(img)
    gx[:, 1:-1] = 0.5 * (img[:, 2:] - img[:, :-2])
    gy[1:-1, :] = 0.5 * (img[2:, :] - img[:-2, :])
    return gx, gy


def build_pyramid(frame, levels):
    """Gaussian pyramid: level ``k+1`` is level ``k`` blurred and decimated by 2.

    The coarsest level must keep at least 2 pixels per axis, so each side
    must be at least ``2**levels`` pixels.
    """
    frame = np.ascontiguousarray(frame, dtype=float)
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if min(frame.shape) < 2 ** levels:
        raise DataError(f"frame {frame.shape} too small for {levels} pyramid levels")
    out = [frame]
    for _ in range(levels - 1):
        out.append(np.ascontiguousarray(_blur(out[-1])[::2, ::2]))
    return out


def _with_gradients(pyramid):
    levels = []
    for img in pyramid:
        gx, gy = _gradients(img)
        levels.append(PyramidLevel(img, np.ascontiguousarray(gx), np.ascontiguousarray(gy)))
    return levels


def prepare_pyramid(frame, params=TrackerParams()):
    return _with_gradients(build_pyramid(frame, params.levels))


def track_point(prev_pyr, next_pyr, point, params=TrackerParams()):
    """Track one point coarse to fine between two prepared pyramids."""
    if not isinstance(prev_pyr[0], PyramidLevel):
        prev_pyr = _with_gradients(prev_pyr)
    if not isinstance(next_pyr[0], PyramidLevel):
        next_pyr = _with_gradients(next_pyr)
    px, py = float(point[0]), float(point[1])
    rows, cols = prev_pyr[0].image.shape
    threshold = params.min_eig_ratio * params.window_area
    valid = 0 <= px <= cols - 1 and 0 <= py <= rows - 1
    gx = gy = 0.0
    residual = np.inf
    n_levels = len(prev_pyr)
    for k in range(n_levels - 1, -1, -1):
        scale = 2.0 ** k
        lp, ln = prev_pyr[k], next_pyr[k]
        vx, vy, min_eig, residual = _kernels.lk_track_level(
            lp.image, ln.image, lp.grad_x, lp.grad_y, px / scale, py / scale,
            gx, gy, params.half_window, params.max_iter, params.epsilon)
        if min_eig < threshold:
            valid = False
        if k > 0:
            gx, gy = 2.0 * (gx + vx), 2.0 * (gy + vy)
        else:
            gx, gy = gx + vx, gy + vy
    new = np.array([px + gx, py + gy])
    if not (0 <= new[0] <= cols - 1 and 0 <= new[1] <= rows - 1) or not np.all(np.isfinite(new)):
        valid = False
    return TrackedPoint(new, bool(valid), float(residual))


def fit_affine(src, dst):
    """Least-squares 2x3 affine map taking ``src`` points onto ``dst``."""
    src = np.asarray(src, float)
    dst = np.asarray(dst, float)
    design = np.column_stack([src, np.ones(len(src))])
    coef, _, rank, _ = np.linalg.lstsq(design, dst, rcond=None)
    if rank < 3:
        raise DataError("tracking lost: valid points are collinear")
    return coef.T


def apply_affine(a, pts):
    pts = np.asarray(pts, float)
    return pts @ a[:, :2].T + a[:, 2]


def track_grid(seq, params=TrackerParams()):
    """Track ``seq.initial_landmarks`` through every frame of ``seq``."""
    t = seq.t
    lm = seq.initial_landmarks
    n = lm.shape[0]
    positions = np.zeros((t, n, 2))
    valid = np.ones((t, n), bool)
    reconstructed = np.zeros((t, n), bool)
    residual = np.zeros((t, n))
    positions[0] = lm
    prev_pyr = prepare_pyramid(seq.frames[0], params)
    for f in range(1, t):
        next_pyr = prepare_pyramid(seq.frames[f], params)
        ok = np.zeros(n, bool)
        for p in range(n):
            tp = track_point(prev_pyr, next_pyr, positions[f - 1, p], params)
            positions[f, p] = tp.position
            ok[p] = tp.valid
            residual[f, p] = tp.residual
        if not ok.all():
            if ok.sum() < 3:
                raise DataError(f"tracking lost: {int(ok.sum())} valid point(s) in frame {f}")
            a = fit_affine(positions[f - 1, ok], positions[f, ok])
            lost = ~ok
            positions[f, lost] = apply_affine(a, positions[f - 1, lost])
            reconstructed[f, lost] = True
            residual[f, lost] = np.inf
        prev_pyr = next_pyr
    return LandmarkTrajectory(positions, valid, reconstructed, residual, seq.frames.shape[1:])
