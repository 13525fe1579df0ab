"""Geometric features: landmark displacements, expression intensity, state buckets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .reduction import PcaBasis, pca_fit, pca_project


@dataclass(frozen=True)
class StateBucketing:
    """Intensity cut points with per-edge inclusivity.

    ``upper_closed[i]`` is true when a value equal to ``boundaries[i]``
    belongs to the cell below the edge. States are numbered from 0.
    """

    n_states: int
    boundaries: tuple
    upper_closed: tuple

    @classmethod
    def for_states(cls, n_states):
        if n_states == 3:
            # [0, .33) [.33, .66] (.66, 1]
            return cls(3, (0.33, 0.66), (False, True))
        if n_states == 5:
            # [0, .2) [.2, .4) [.4, .6] (.6, .8) [.8, 1]
            return cls(5, (0.2, 0.4, 0.6, 0.8), (False, False, True, False))
        if n_states == 1:
            return cls(1, (), ())
        raise ValueError(f"unsupported state count {n_states}")


def bucket_state(v, bucketing):
    if v < 0 or not np.isfinite(v):
        raise ValueError(f"intensity must be finite and >= 0, got {v}")
    state = 0
    for edge, closed in zip(bucketing.boundaries, bucketing.upper_closed):
        if v > edge or (v == edge and not closed):
            state += 1
        else:
            break
    return state


def displacement_features(traj):
    """(t, 2P) displacements from frame 0, interleaved x, y per point."""
    pos = traj.positions if hasattr(traj, "positions") else np.asarray(traj, float)
    d = pos - pos[0]
    return d.reshape(d.shape[0], -1)


def intensity_profile(traj):
    """Summed landmark travel of each frame over that of the last frame."""
    pos = traj.positions if hasattr(traj, "positions") else np.asarray(traj, float)
    dist = np.linalg.norm(pos - pos[0], axis=2).sum(axis=1)
    if not dist[-1] > 0:
        raise DataError("static sequence: no landmark motion at the apex frame")
    return dist / dist[-1]


def intensity(traj, f):
    """Intensity of frame ``f`` (0-based); frame 0 gives 0, the last frame 1."""
    prof = intensity_profile(traj)
    if not 0 <= f < len(prof):
        raise IndexError(f"frame {f} outside sequence of length {len(prof)}")
    return float(prof[f])


def bucket_profile(profile, bucketing):
    return np.array([bucket_state(v, bucketing) for v in profile], dtype=np.intp)


@dataclass
class GeoFeatureSpace:
    bucketing: StateBucketing
    bases: list  # one PcaBasis per state

    @property
    def k(self):
        return self.bases[0].k

    def project(self, x, state):
        return pca_project(self.bases[state], x)


def fit_geo_space(features_by_state, k, bucketing):
    """One PCA basis per state, all of dimension ``k``."""
    if len(features_by_state) != bucketing.n_states:
        raise ValueError("need one feature group per state")
    bases = []
    for s, feats in enumerate(features_by_state):
        feats = np.asarray(feats, dtype=float)
        if feats.shape[0] == 0:
            raise DataError(f"state {s} has no training frames")
        bases.append(pca_fit(feats, k))
    return GeoFeatureSpace(bucketing, bases)


__all__ = ["PcaBasis", "StateBucketing", "GeoFeatureSpace", "bucket_state",
           "displacement_features", "intensity", "intensity_profile", "fit_geo_space"]
