"""Fusion of per-AU HMM scores into multi-label AU decisions.

Each sequence becomes a 2M score vector (geometric bank, then appearance
bank), every slot a Viterbi log-score divided by the frame count. A
one-hidden-layer tanh/logistic network trained on MSE maps standardized
score vectors to per-AU outputs that double as intensity estimates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericError
from .hmm import viterbi_log_score_emissions


@dataclass(frozen=True)
class TrainParams:
    hidden: int | None = None  # default max(8, 2M)
    learning_rate: float = 0.05
    momentum: float = 0.9
    epochs: int = 2000
    seed: int = 0


@dataclass
class FusionNet:
    w1: np.ndarray  # (H, 2M)
    b1: np.ndarray
    w2: np.ndarray  # (M, H)
    b2: np.ndarray
    in_mean: np.ndarray
    in_std: np.ndarray
    masked: np.ndarray = None  # slots with zero training variance, fed as 0
    final_loss: float = float("nan")
    seed: int = 0
    loss_history: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.masked is None:
            self.masked = np.zeros(self.w1.shape[1], dtype=bool)

    @property
    def n_inputs(self):
        return self.w1.shape[1]

    @property
    def n_outputs(self):
        return self.w2.shape[0]

    def standardize(self, s):
        z = (np.asarray(s, dtype=float) - self.in_mean) / self.in_std
        return np.where(self.masked, 0.0, z)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def score_slots(emissions_geo, emissions_app, geo_models, app_models):
    """Per-frame-normalized Viterbi scores from precomputed emission matrices."""
    if [m.au for m in geo_models] != [m.au for m in app_models]:
        raise DataError("geometric and appearance banks cover different AU lists")
    vals = []
    for emit, model in zip(list(emissions_geo) + list(emissions_app), list(geo_models) + list(app_models)):
        t = emit.shape[0]
        vals.append(viterbi_log_score_emissions(emit, model.log_init, model.log_trans) / t)
    return np.array(vals)


def build_score_vector(geo_raw, app_raw, geo_models, app_models, net=None):
    """2M score vector for one sequence; standardized when ``net`` is given."""
    emis_g = [m.emission_logprob(geo_raw) for m in geo_models]
    emis_a = [m.emission_logprob(app_raw) for m in app_models]
    s = score_slots(emis_g, emis_a, geo_models, app_models)
    if not np.all(np.isfinite(s)):
        raise NumericError("non-finite HMM score")
    return net.standardize(s) if net is not None else s


def _forward_std(params, z):
    w1, b1, w2, b2 = params
    h = np.tanh(z @ w1.T + b1)
    o = _sigmoid(h @ w2.T + b2)
    return h, o


def forward(net, s):
    """Outputs in (0, 1) for one raw score vector or a batch of them."""
    s = np.asarray(s, dtype=float)
    if s.shape[-1] != net.n_inputs:
        raise ValueError(f"expected {net.n_inputs} inputs, got {s.shape[-1]}")
    _, o = _forward_std((net.w1, net.b1, net.w2, net.b2), net.standardize(s))
    return o


def loss_and_grad(params, z, y):
    """Mean squared error over all samples and outputs, and its gradient."""
    w1, b1, w2, b2 = params
    h, o = _forward_std(params, z)
    n, m = y.shape
    err = o - y
    loss = float(np.mean(err * err))
    d_out = (2.0 / (n * m)) * err * o * (1.0 - o)
    g_w2 = d_out.T @ h
    g_b2 = d_out.sum(axis=0)
    d_hid = (d_out @ w2) * (1.0 - h * h)
    g_w1 = d_hid.T @ z
    g_b1 = d_hid.sum(axis=0)
    return loss, (g_w1, g_b1, g_w2, g_b2)


def init_params(n_in, n_hidden, n_out, seed):
    rng = np.random.default_rng(seed)
    w1 = rng.normal(0.0, 1.0 / np.sqrt(n_in), (n_hidden, n_in))
    w2 = rng.normal(0.0, 1.0 / np.sqrt(n_hidden), (n_out, n_hidden))
    return [w1, np.zeros(n_hidden), w2, np.zeros(n_out)]


def train(scores, targets, params=TrainParams()):
    """Full-batch momentum gradient descent; keeps the best-loss epoch."""
    x = np.asarray(scores, dtype=float)
    y = np.asarray(targets, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DataError("fusion training set is empty")
    if y.shape[0] != x.shape[0]:
        raise ValueError("scores and targets differ in length")
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite training scores")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    masked = ~(std > 1e-12 * np.maximum(1.0, np.abs(mean)))
    std = np.where(masked, 1.0, std)
    z = np.where(masked, 0.0, (x - mean) / std)
    n_in, n_out = x.shape[1], y.shape[1]
    hidden = params.hidden or max(8, n_in)
    theta = init_params(n_in, hidden, n_out, params.seed)
    vel = [np.zeros_like(p) for p in theta]
    best = (np.inf, [p.copy() for p in theta])
    history = []
    for _ in range(params.epochs):
        loss, grads = loss_and_grad(theta, z, y)
        history.append(loss)
        if not np.isfinite(loss):
            raise NumericError("fusion training diverged")
        if loss < best[0]:
            best = (loss, [p.copy() for p in theta])
        for p, v, g in zip(theta, vel, grads):
            v *= params.momentum
            v -= params.learning_rate * g
            p += v
    loss, _ = loss_and_grad(theta, z, y)
    if loss < best[0]:
        best = (loss, [p.copy() for p in theta])
    history.append(loss)
    w1, b1, w2, b2 = best[1]
    return FusionNet(w1, b1, w2, b2, mean, std, masked, best[0], params.seed, history)


def augment_truncations(profile, n_copies=5):
    """End frames and achieved intensities of the truncated training copies.

    Copy ``j`` ends at the frame whose intensity is nearest ``j / n_copies``
    (ties to the earlier frame); the last copy is the full sequence.
    Duplicate end frames collapse, so short sequences yield fewer copies.
    """
    profile = np.asarray(profile, dtype=float)
    ends = []
    for j in range(1, n_copies):
        ends.append(int(np.argmin(np.abs(profile - j / n_copies))))
    ends.append(len(profile) - 1)
    out = []
    for e in dict.fromkeys(ends):
        out.append((e, float(np.clip(profile[e], 0.0, 1.0))))
    return out


def make_target(aus, present, intensity):
    return np.array([intensity if a in present else 0.0 for a in aus])


def decide(outputs, aus, threshold=0.5):
    """AUs whose output reaches the threshold (ties fire)."""
    return frozenset(a for a, o in zip(aus, outputs) if o >= threshold)
