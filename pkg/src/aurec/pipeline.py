"""End-to-end training, prediction and evaluation.

Feature spaces are shared by every AU with the same state count and are
keyed ``geo:<n>`` / ``app:<n>``. Parallel work (per-sequence feature
extraction, per-state mixture fits) goes through an order-preserving map,
so results do not depend on the job count.
"""

from __future__ import annotations

import time
from collections import Counter, OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fusion
from .bundle import ModelBundle
from .config import Config
from .dataset import GroundTruth, crop_sequence, load_sequence
from .errors import DataError, NumericError
from .gabor import BankFilter, BankParams, downsample, fit_appearance_space, make_gabor_bank
from .geo import StateBucketing, bucket_profile, displacement_features, fit_geo_space, intensity_profile
from .hmm import AuHmm, _log, fit_gmm, left_to_right, state_seed, viterbi_log_score_emissions
from .rules import (au_recognition_metrics, class_scores, confusion_and_metrics, induce_rules,
                    metrics_from_confusion, roc_area, tally_outcome)
from .tracker import TrackerParams, track_grid

TALLY_KEYS = ("true", "missing_or_extra", "false")
# "spurious" counts predictions holding an AU outside the truth; it drives F


@dataclass
class SequenceFeatures:
    name: str
    truth: GroundTruth | None
    positions: np.ndarray  # (t, P, 2) tracked landmarks
    geo: np.ndarray  # (t, 2P)
    profile: np.ndarray  # (t,)
    maps: np.ndarray  # (t, p, r, c) downsampled Gabor magnitudes

    @property
    def t(self):
        return self.geo.shape[0]


def tracker_params(cfg):
    return TrackerParams(cfg.half_window, cfg.pyramid_levels, cfg.lk_max_iter, cfg.lk_epsilon,
                         cfg.min_eig_ratio)


def bank_params(cfg):
    return BankParams(cfg.gabor_scales, cfg.gabor_orientations, cfg.gabor_base_wavelength,
                      np.sqrt(2.0), cfg.gabor_sigma_ratio, cfg.gabor_aspect)


_FILTERS = {}


def _bank_filter(cfg, shape):
    bp = bank_params(cfg)
    key = (bp, tuple(shape))
    if key not in _FILTERS:
        _FILTERS[key] = BankFilter(make_gabor_bank(bp.scales, bp.orientations, bp), shape)
    return _FILTERS[key]


def _stage(stage, name, fn, *args):
    """Run ``fn`` and re-raise data/numeric errors tagged with stage and sequence."""
    try:
        return fn(*args)
    except (DataError, NumericError) as exc:
        raise type(exc)(f"{stage}: {name}: {exc}") from None


def process_sequence(seq, cfg, name="", truth=None):
    """Tracking, geometric features, intensity profile and Gabor maps of one sequence."""
    traj = _stage("tracking", name, track_grid, seq, tracker_params(cfg))
    profile = _stage("intensity", name, intensity_profile, traj)
    crops = _stage("crop", name, crop_sequence, seq, cfg.crop_margin)
    filt = _stage("gabor", name, _bank_filter, cfg, crops.shape[1:])
    maps = downsample(filt.responses(crops), cfg.downsample)
    return SequenceFeatures(name, truth, traj.positions, displacement_features(traj), profile, maps)


def _process_item(args):
    seq, cfg_dict, name, truth = args
    return process_sequence(seq, Config.from_dict(cfg_dict), name, truth)


def _process_record(args):
    record, manifest, cfg_dict = args
    seq = _stage("load", record.sequence, load_sequence, record, manifest)
    return process_sequence(seq, Config.from_dict(cfg_dict), record.sequence, record.truth)


def parallel_map(fn, items, jobs=1):
    """Order-preserving map, in-process for ``jobs <= 1``."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def extract_manifest(manifest, cfg, jobs=1):
    if len(manifest) == 0:
        raise DataError("manifest has no records")
    return parallel_map(_process_record, [(r, manifest, cfg.to_dict()) for r in manifest], jobs)


def extract_sequences(items, cfg, jobs=1):
    """``items``: iterable of (ImageSequence, name, GroundTruth or None)."""
    return parallel_map(_process_item, [(s, cfg.to_dict(), n, t) for s, n, t in items], jobs)


# ---------------------------------------------------------------- training

def _au_list(feats, cfg):
    seen = sorted({a for f in feats for a in f.truth.aus})
    aus = [int(a) for a in cfg.aus] if cfg.aus else seen
    for a in aus:
        if not any(a in f.truth.aus for f in feats):
            raise DataError(f"AU {a} has no positive training sequences")
    return aus


def fit_spaces(feats, cfg, state_counts):
    spaces = {}
    for n in sorted(set(state_counts)):
        b = StateBucketing.for_states(n)
        states = [bucket_profile(f.profile, b) for f in feats]
        geo_groups = [np.concatenate([f.geo[s == j] for f, s in zip(feats, states)]) for j in range(n)]
        for j, g in enumerate(geo_groups):
            if len(g) < 2:
                raise DataError(f"feature spaces: state {j} of {n} has {len(g)} training frame(s)")
        k = min([cfg.geo_k, geo_groups[0].shape[1]] + [len(g) - 1 for g in geo_groups])
        spaces[f"geo:{n}"] = _stage("geo space", f"{n} states", fit_geo_space, geo_groups, k, b)
        app_groups = [np.concatenate([f.maps[s == j] for f, s in zip(feats, states)]) for j in range(n)]
        spaces[f"app:{n}"] = _stage("appearance space", f"{n} states", fit_appearance_space,
                                    app_groups, b, cfg.k2d, cfg.app_k)
    return spaces


def project_all(spaces, f):
    """(space key, state) -> projected frames of one sequence."""
    out = {}
    for key, space in spaces.items():
        raw = f.geo if key.startswith("geo") else f.maps
        for j in range(space.bucketing.n_states):
            out[(key, j)] = space.project(raw, j)
    return out


def emissions(model, proj):
    return np.column_stack([model.gmms[j].logpdf(proj[(model.space_key, j)])
                            for j in range(model.n_states)])


def _fit_state(args):
    pool, n_components, seed = args
    return fit_gmm(pool, n_components, seed)


def train_hmm_banks(feats, projections, aus, spaces, cfg, jobs=1):
    """Per-AU GMM-HMMs for both banks; mixture fits run in parallel."""
    tasks, index = [], []
    for bank in ("geo", "app"):
        for au in aus:
            n = cfg.n_states(au)
            key = f"{bank}:{n}"
            b = spaces[key].bucketing
            for j in range(n):
                pool = [proj[(key, j)][bucket_profile(f.profile, b) == j]
                        for f, proj in zip(feats, projections) if au in f.truth.aus]
                pool = np.concatenate(pool)
                if len(pool) == 0:
                    raise DataError(f"hmm training: AU {au} ({bank}): state {j} has no training frames")
                tasks.append((pool, cfg.gmm_components, state_seed(cfg.seed, au, bank, j)))
                index.append((bank, au, j))
    gmms = parallel_map(_fit_state, tasks, jobs)
    by_model = OrderedDict()
    for (bank, au, j), g in zip(index, gmms):
        by_model.setdefault((bank, au), []).append(g)
    banks = {"geo": [], "app": []}
    for (bank, au), gs in by_model.items():
        n = len(gs)
        trans, init = left_to_right(n)
        key = f"{bank}:{n}"
        banks[bank].append(AuHmm(au, bank, n, key, gs, _log(trans), _log(init), cfg.seed, spaces[key]))
    return banks["geo"], banks["app"]


def prefix_scores(emits, models, end):
    """2M slot scores of the prefix ending at frame ``end`` (inclusive)."""
    return np.array([viterbi_log_score_emissions(e[:end + 1], m.log_init, m.log_trans) / (end + 1)
                     for e, m in zip(emits, models)])


def training_set(feats, projections, models, aus, cfg):
    xs, ys = [], []
    for f, proj in zip(feats, projections):
        emits = [emissions(m, proj) for m in models]
        for end, level in fusion.augment_truncations(f.profile, cfg.truncations):
            xs.append(prefix_scores(emits, models, end))
            ys.append(fusion.make_target(aus, f.truth.aus, level))
    x = np.array(xs)
    if not np.all(np.isfinite(x)):
        raise NumericError("score vectors: non-finite HMM score")
    return x, np.array(ys)


def train_from_features(feats, cfg, jobs=1, timings=None):
    """Fit feature spaces, both HMM banks and the fusion net."""
    timings = timings if timings is not None else OrderedDict()
    clock = time.perf_counter()

    def lap(stage):
        nonlocal clock
        now = time.perf_counter()
        timings[stage] = timings.get(stage, 0.0) + now - clock
        clock = now

    if not feats:
        raise DataError("no training sequences")
    aus = _au_list(feats, cfg)
    spaces = fit_spaces(feats, cfg, [cfg.n_states(a) for a in aus])
    lap("feature spaces")
    projections = [project_all(spaces, f) for f in feats]
    lap("projection")
    geo_models, app_models = train_hmm_banks(feats, projections, aus, spaces, cfg, jobs)
    lap("hmm training")
    x, y = training_set(feats, projections, geo_models + app_models, aus, cfg)
    lap("score vectors")
    params = fusion.TrainParams(cfg.hidden or None, cfg.learning_rate, cfg.momentum, cfg.epochs, cfg.seed)
    net = fusion.train(x, y, params)
    lap("fusion training")
    return ModelBundle(cfg, aus, spaces, geo_models, app_models, net), timings


def train_manifest(manifest, cfg, jobs=1):
    timings = OrderedDict()
    t0 = time.perf_counter()
    feats = extract_manifest(manifest, cfg, jobs)
    timings["tracking and features"] = time.perf_counter() - t0
    return train_from_features(feats, cfg, jobs, timings)


# ---------------------------------------------------------------- prediction

@dataclass
class Prediction:
    name: str
    aus: frozenset
    outputs: np.ndarray
    scores: np.ndarray
    expression: str | None = None


def predict_features(bundle, f):
    proj = project_all(bundle.spaces, f)
    models = bundle.geo_models + bundle.app_models
    s = prefix_scores([emissions(m, proj) for m in models], models, f.t - 1)
    if not np.all(np.isfinite(s)):
        raise NumericError(f"scoring: {f.name}: non-finite HMM score")
    out = fusion.forward(bundle.net, s)
    expr = bundle.rules.classify(out) if bundle.rules is not None else None
    return Prediction(f.name, fusion.decide(out, bundle.aus, bundle.config.threshold), out, s, expr)


# ---------------------------------------------------------------- evaluation

def class_name(aus):
    return "+".join(str(a) for a in sorted(aus))


def _class_key(name):
    parts = name.split("+")
    return (len(parts), [(0, int(a), "") if a.isdigit() else (1, 0, a) for a in parts])


@dataclass
class Report:
    tally: dict  # class name -> Counter over TALLY_KEYS and "spurious"
    r: float
    f: float
    n: int
    expressions: list = field(default_factory=list)  # class names, when present
    confusion: np.ndarray | None = None
    class_metrics: list = field(default_factory=list)
    accuracy: float | None = None
    auc: list = field(default_factory=list)


def evaluate(bundle, feats):
    if not feats:
        raise DataError("evaluation manifest has no records")
    preds = [predict_features(bundle, f) for f in feats]
    known = set(bundle.aus)
    pairs = [(frozenset(f.truth.aus) & known, p.aus) for f, p in zip(feats, preds)]
    tally = {}
    for t, p in pairs:
        c = tally.setdefault(class_name(t), Counter({k: 0 for k in TALLY_KEYS + ("spurious",)}))
        c[tally_outcome(t, p)] += 1
        c["spurious"] += bool(p - t)
    r, fa = au_recognition_metrics(pairs)
    rep = Report(dict(sorted(tally.items(), key=lambda kv: _class_key(kv[0]))), r, fa, len(pairs))
    truths = [f.truth.expression for f in feats]
    if bundle.rules is not None and all(e is not None for e in truths):
        add_expression_metrics(rep, truths, [p.expression for p in preds],
                               [class_scores(p.outputs, bundle.rules, sorted(set(truths))) for p in preds])
    return rep, preds


def add_expression_metrics(rep, truths, predicted, scores=None):
    classes = sorted(set(truths) | set(predicted))
    rep.expressions = classes
    rep.confusion, rep.class_metrics, rep.accuracy = confusion_and_metrics(zip(truths, predicted), classes)
    if scores is not None:
        score_classes = sorted(set(truths))
        for c in classes:
            if c in score_classes and 0 < truths.count(c) < len(truths):
                col = [s[score_classes.index(c)] for s in scores]
                rep.auc.append(roc_area(col, truths, c))
            else:
                rep.auc.append(float("nan"))
    return rep


def report_from_records(tally, confusion=None, classes=None):
    """Rebuild R/F and expression metrics from machine-readable records."""
    n = sum(sum(c[k] for k in TALLY_KEYS) for c in tally.values())
    if n == 0 and confusion is None:
        raise DataError("no tally or confusion records")
    if n:
        r = sum(c["true"] for c in tally.values()) / n
        fa = sum(c["spurious"] for c in tally.values()) / n
    else:
        r = fa = float("nan")
    rep = Report(tally, r, fa, n)
    if confusion is not None:
        rep.expressions = list(classes)
        rep.confusion = np.asarray(confusion)
        rep.class_metrics, rep.accuracy = metrics_from_confusion(rep.confusion)
    return rep


def train_rules(bundle, feats, seed=0):
    missing = [f.name for f in feats if f.truth.expression is None]
    if missing:
        raise DataError(f"rules training: {missing[0]}: no expression label")
    outs = np.array([predict_features(bundle, f).outputs for f in feats])
    labels = [f.truth.expression for f in feats]
    bundle.rules = induce_rules(outs, labels, [f"AU{a}" for a in bundle.aus], seed)
    return bundle
