"""Left-to-right GMM-HMMs, one per action unit and feature bank.

Training is supervised: every frame's state comes from bucketing its
expression intensity, so each state's mixture is fit directly by EM on the
frames assigned to it. Scoring is the Viterbi max-path log-probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .errors import DataError, NumericError
from .geo import StateBucketing, bucket_profile, intensity_profile

VAR_FLOOR = 1e-6
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class Gmm:
    weights: np.ndarray  # (m,)
    means: np.ndarray  # (m, k)
    variances: np.ndarray  # (m, k)

    @property
    def n_components(self):
        return len(self.weights)

    def component_logpdf(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        diff = x[:, None, :] - self.means[None]
        quad = np.sum(diff * diff / self.variances[None], axis=2)
        norm = np.sum(np.log(self.variances), axis=1) + self.means.shape[1] * _LOG_2PI
        return -0.5 * (quad + norm[None]) + np.log(self.weights)[None]

    def logpdf(self, x):
        """Log mixture density of each row of ``x``."""
        return logsumexp(self.component_logpdf(x), axis=1)


def _kmeans_pp(x, m, rng):
    centers = [x[rng.integers(len(x))]]
    for _ in range(1, m):
        d2 = np.min(((x[:, None, :] - np.array(centers)[None]) ** 2).sum(axis=2), axis=1)
        total = d2.sum()
        if total <= 0:
            break
        centers.append(x[rng.choice(len(x), p=d2 / total)])
    return np.array(centers)


def fit_gmm(samples, n_components=3, seed=0, max_iter=200, tol=1e-8, var_floor=VAR_FLOOR,
            return_history=False):
    """Diagonal-covariance mixture by EM from a k-means++ start.

    Falls back to fewer components when there are fewer distinct samples;
    components whose responsibility mass vanishes are dropped.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise DataError("fit_gmm: empty sample set")
    if not np.all(np.isfinite(x)):
        raise NumericError("fit_gmm: non-finite samples")
    n, k = x.shape
    m = min(n_components, len(np.unique(x, axis=0)))
    rng = np.random.default_rng(seed)
    means = _kmeans_pp(x, m, rng)
    m = len(means)
    var0 = np.maximum(x.var(axis=0), var_floor)
    gmm = Gmm(np.full(m, 1.0 / m), means, np.tile(var0, (m, 1)))
    history = []
    prev = -np.inf
    for _ in range(max_iter):
        logp = gmm.component_logpdf(x)
        ll_rows = logsumexp(logp, axis=1)
        ll = float(ll_rows.sum())
        history.append(ll)
        if ll - prev < tol:
            break
        prev = ll
        resp = np.exp(logp - ll_rows[:, None])
        nk = resp.sum(axis=0)
        keep = nk > 1e-10 * n
        resp, nk = resp[:, keep], nk[keep]
        means = (resp.T @ x) / nk[:, None]
        var = (resp.T @ (x * x)) / nk[:, None] - means * means
        gmm = Gmm(nk / n, means, np.maximum(var, var_floor))
    if return_history:
        return gmm, history
    return gmm


@dataclass
class AuHmm:
    au: int
    bank: str  # "geo" | "app"
    n_states: int
    space_key: str
    gmms: list
    log_trans: np.ndarray
    log_init: np.ndarray
    seed: int = 0
    space: object = None  # resolved feature space, not serialized

    def emission_logprob(self, raw):
        """(t, n_states) log-densities, each state using its own projection."""
        if self.space is None:
            raise RuntimeError(f"AU {self.au} {self.bank}: feature space not attached")
        cols = [self.gmms[j].logpdf(self.space.project(raw, j)) for j in range(self.n_states)]
        return np.column_stack(cols)


def left_to_right(n_states):
    """Self-loop and advance-by-one, split evenly; the last state absorbs."""
    a = np.zeros((n_states, n_states))
    for i in range(n_states - 1):
        a[i, i] = a[i, i + 1] = 0.5
    a[-1, -1] = 1.0
    init = np.zeros(n_states)
    init[0] = 1.0
    return a, init


def _log(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def assign_states(traj, bucketing):
    return bucket_profile(intensity_profile(traj), bucketing)


def state_seed(seed, au, bank, state):
    ss = np.random.SeedSequence([int(seed), int(au), 0 if bank == "geo" else 1, int(state)])
    return int(ss.generate_state(1)[0])


def train_au_hmm(sequences, au, bank, space, space_key, n_states, seed=0, n_components=3):
    """Fit the per-state mixtures of one AU model.

    ``sequences`` is a list of ``(raw_features, states)`` pairs for the
    sequences that contain ``au``; ``raw_features`` are the pre-projection
    per-frame features of the bank.
    """
    pools = [[] for _ in range(n_states)]
    for raw, states in sequences:
        states = np.asarray(states)
        for j in range(n_states):
            sel = np.flatnonzero(states == j)
            if len(sel):
                pools[j].append(space.project(raw[sel], j))
    gmms = []
    for j, pool in enumerate(pools):
        if not pool:
            raise DataError(f"AU {au} ({bank}): state {j} has no training frames")
        gmms.append(fit_gmm(np.concatenate(pool), n_components, state_seed(seed, au, bank, j)))
    trans, init = left_to_right(n_states)
    return AuHmm(au, bank, n_states, space_key, gmms, _log(trans), _log(init), seed, space)


def viterbi_path(log_emit, model):
    log_emit = np.ascontiguousarray(log_emit, dtype=float)
    return _kernels.viterbi(np.ascontiguousarray(model.log_init), np.ascontiguousarray(model.log_trans),
                            log_emit)


def viterbi_log_score(raw, model):
    """Max over left-to-right state paths of the joint log-probability."""
    score, _ = viterbi_path(model.emission_logprob(raw), model)
    return score


def viterbi_log_score_emissions(log_emit, log_init, log_trans):
    score, _ = _kernels.viterbi(np.ascontiguousarray(log_init, dtype=float),
                                np.ascontiguousarray(log_trans, dtype=float),
                                np.ascontiguousarray(log_emit, dtype=float))
    return score


__all__ = ["Gmm", "AuHmm", "StateBucketing", "fit_gmm", "train_au_hmm", "assign_states",
           "left_to_right", "viterbi_log_score", "viterbi_path", "viterbi_log_score_emissions"]
