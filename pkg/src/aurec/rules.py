"""Rule induction from AU intensities to expressions, and evaluation metrics.

The inducer is RIPPER-style sequential covering (the IREP grow/prune core,
without the global MDL optimisation pass).
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

MAX_CONDITIONS = 4


@dataclass(frozen=True)
class Condition:
    slot: int
    op: str  # ">=" | "<="
    threshold: float

    def holds(self, x):
        v = x[..., self.slot]
        return v >= self.threshold if self.op == ">=" else v <= self.threshold


@dataclass(frozen=True)
class Rule:
    conditions: tuple
    label: str

    def covers(self, x):
        x = np.asarray(x, dtype=float)
        mask = np.ones(x.shape[:-1], dtype=bool)
        for c in self.conditions:
            mask &= c.holds(x)
        return mask


@dataclass
class RuleList:
    rules: list
    default: str
    au_names: list = field(default_factory=list)
    # per rule (and the default as last entry): class counts on the training rows it caught
    distributions: list = field(default_factory=list)

    def classify(self, x):
        return classify_expression(x, self)

    def format(self):
        names = self.au_names or [f"x{i}" for i in range(_max_slot(self.rules) + 1)]
        lines = []
        for r in self.rules:
            conds = " and ".join(f"({names[c.slot]} {c.op} {c.threshold!r})" for c in r.conditions)
            lines.append(f"{conds} => {r.label}")
        lines.append(f"=> {self.default}")
        return "\n".join(lines) + "\n"


def _max_slot(rules):
    return max((c.slot for r in rules for c in r.conditions), default=-1)


_COND = re.compile(r"\(\s*(\S+)\s*(>=|<=)\s*([-+0-9.eE]+)\s*\)")


def parse_rules(text, au_names):
    """Inverse of :meth:`RuleList.format` for the given slot names."""
    index = {name: i for i, name in enumerate(au_names)}
    rules = []
    default = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        body, sep, label = line.rpartition("=>")
        if not sep:
            raise DataError(f"rules line {lineno}: missing '=>'")
        label = label.strip()
        body = body.strip()
        if not body:
            default = label
            continue
        conds = []
        for name, op, thr in _COND.findall(body):
            if name not in index:
                raise DataError(f"rules line {lineno}: unknown attribute {name!r}")
            conds.append(Condition(index[name], op, float(thr)))
        if not conds:
            raise DataError(f"rules line {lineno}: no conditions parsed")
        rules.append(Rule(tuple(conds), label))
    if default is None:
        raise DataError("rules: missing default line '=> <label>'")
    return RuleList(rules, default, list(au_names))


def classify_expression(x, rl):
    x = np.asarray(x, dtype=float)
    for r in rl.rules:
        if r.covers(x):
            return r.label
    return rl.default


def _rule_index(x, rl):
    for i, r in enumerate(rl.rules):
        if r.covers(x):
            return i
    return len(rl.rules)


def class_scores(x, rl, classes):
    """Laplace-smoothed class distribution of the rule that fires on ``x``."""
    i = _rule_index(x, rl)
    counts = rl.distributions[i] if rl.distributions else {}
    total = sum(counts.values())
    return np.array([(counts.get(c, 0) + 1.0) / (total + len(classes)) for c in classes])


# ---------------------------------------------------------------- induction

def _candidate_thresholds(values):
    v = np.unique(values)
    return (v[:-1] + v[1:]) / 2.0


def _foil_gains(p0, n0, p1, n1):
    p1 = np.asarray(p1, dtype=float)
    n1 = np.asarray(n1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = p1 * (np.log2(p1 / (p1 + n1)) - math.log2(p0 / (p0 + n0)))
    return np.where(p1 > 0, g, -np.inf)


def _grow(pos, neg):
    conds = []
    p_mask = np.ones(len(pos), bool)
    n_mask = np.ones(len(neg), bool)
    while n_mask.any() and len(conds) < MAX_CONDITIONS:
        p0, n0 = p_mask.sum(), n_mask.sum()
        best = None
        cov_pos, cov_neg = pos[p_mask], neg[n_mask]
        both = np.vstack([cov_pos, cov_neg])
        for slot in range(pos.shape[1]):
            thr = _candidate_thresholds(both[:, slot])
            if len(thr) == 0:
                continue
            pv, nv = np.sort(cov_pos[:, slot]), np.sort(cov_neg[:, slot])
            p_le = np.searchsorted(pv, thr, side="right")
            n_le = np.searchsorted(nv, thr, side="right")
            # midpoints never coincide with a data value, so >= is the complement of <=
            for op, p1s, n1s in ((">=", len(pv) - p_le, len(nv) - n_le), ("<=", p_le, n_le)):
                gains = _foil_gains(p0, n0, p1s, n1s)
                i = int(np.argmax(gains))
                if best is None or gains[i] > best[0]:
                    best = (float(gains[i]), Condition(slot, op, float(thr[i])))
        if best is None or not np.isfinite(best[0]) or best[0] <= 0:
            break
        c = best[1]
        conds.append(c)
        p_mask &= c.holds(pos)
        n_mask &= c.holds(neg)
    return conds


def _prune_value(conds, pos, neg):
    r = Rule(tuple(conds), "")
    p = int(r.covers(pos).sum()) if len(pos) else 0
    n = int(r.covers(neg).sum()) if len(neg) else 0
    if p + n == 0:
        return -np.inf, p, n
    return (p - n) / (p + n), p, n


def _prune(conds, pos, neg):
    """Keep the condition prefix with the best (p - n) / (p + n) on prune data."""
    if len(pos) + len(neg) == 0:
        return conds
    best_len, best_val = len(conds), _prune_value(conds, pos, neg)[0]
    for L in range(len(conds) - 1, 0, -1):
        v = _prune_value(conds[:L], pos, neg)[0]
        if v > best_val:
            best_len, best_val = L, v
    return conds[:best_len]


def _split(n_pos, n_neg, rng):
    """Stratified 2:1 grow/prune index split."""
    def one(n):
        idx = rng.permutation(n)
        n_grow = int(math.ceil(2 * n / 3))
        return idx[:n_grow], idx[n_grow:]
    return one(n_pos), one(n_neg)


def induce_rules(x, labels, au_names=None, seed=0, max_rules=50):
    """Ordered rule list; rarer classes first, the most frequent as default."""
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels, dtype=object)
    if len(labels) == 0:
        raise DataError("induce_rules: empty training set")
    freq = Counter(labels.tolist())
    # increasing frequency; name breaks ties so the order is deterministic
    order = sorted(freq, key=lambda c: (freq[c], str(c)))
    rng = np.random.default_rng(seed)
    rules = []
    remaining = np.ones(len(labels), bool)
    for cls in order[:-1]:
        alive = remaining.copy()
        while len(rules) < max_rules:
            pos = x[alive & (labels == cls)]
            neg = x[alive & (labels != cls)]
            if len(pos) == 0:
                break
            (gp, pp), (gn, pn) = _split(len(pos), len(neg), rng)
            conds = _grow(pos[gp], neg[gn])
            if not conds:
                break
            conds = _prune(conds, pos[pp], neg[pn])
            _, p, n = _prune_value(conds, pos[pp], neg[pn])
            if p + n > 0 and n / (p + n) > 0.5:
                break
            rule = Rule(tuple(conds), cls)
            covered = rule.covers(x) & alive
            if not (covered & (labels == cls)).any():
                break
            rules.append(rule)
            alive &= ~covered
        remaining &= labels != cls
    rl = RuleList(rules, order[-1], list(au_names) if au_names is not None else [])
    uncovered = [lab for xi, lab in zip(x, labels) if _rule_index(xi, rl) == len(rules)]
    if uncovered:
        uc = Counter(uncovered)
        rl.default = max(sorted(uc), key=lambda c: uc[c])
    rl.distributions = _distributions(x, labels, rl)
    return rl


def _distributions(x, labels, rl):
    dists = [Counter() for _ in range(len(rl.rules) + 1)]
    for xi, lab in zip(x, labels):
        dists[_rule_index(xi, rl)][lab] += 1
    return [dict(d) for d in dists]


# ---------------------------------------------------------------- metrics

@dataclass
class ClassMetrics:
    tpr: float
    fpr: float
    precision: float


def confusion_matrix(pairs, classes):
    idx = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for true, pred in pairs:
        if true not in idx or pred not in idx:
            raise DataError(f"label outside class list: {true!r} / {pred!r}")
        cm[idx[true], idx[pred]] += 1
    return cm


def metrics_from_confusion(cm):
    """Per-class TPR/FPR/precision and overall accuracy; NaN marks 0/0."""
    cm = np.asarray(cm, dtype=float)
    total = cm.sum()
    if total == 0:
        raise DataError("confusion matrix is empty")
    rows, cols, diag = cm.sum(axis=1), cm.sum(axis=0), np.diag(cm)

    def ratio(a, b):
        return a / b if b > 0 else float("nan")

    per_class = [ClassMetrics(ratio(diag[i], rows[i]), ratio(cols[i] - diag[i], total - rows[i]),
                              ratio(diag[i], cols[i])) for i in range(len(cm))]
    return per_class, float(diag.sum() / total)


def confusion_and_metrics(pairs, classes):
    pairs = list(pairs)
    if not pairs:
        raise DataError("no (true, predicted) pairs")
    cm = confusion_matrix(pairs, classes)
    per_class, acc = metrics_from_confusion(cm)
    return cm, per_class, acc


def roc_area(scores, truths, cls):
    """One-vs-rest AUC as the rank statistic, ties counted half."""
    scores = np.asarray(scores, dtype=float)
    is_pos = np.array([t == cls for t in truths])
    pos, neg = scores[is_pos], scores[~is_pos]
    if len(pos) == 0 or len(neg) == 0:
        raise DataError(f"undefined AUC for class {cls!r}: need positives and negatives")
    greater = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((greater + 0.5 * ties) / (len(pos) * len(neg)))


def au_recognition_metrics(pairs):
    """(R, F): exact-set recognition rate and spurious-AU false-alarm rate."""
    pairs = list(pairs)
    if not pairs:
        raise DataError("no (true, predicted) pairs")
    exact = sum(1 for t, p in pairs if frozenset(t) == frozenset(p))
    false = sum(1 for t, p in pairs if frozenset(p) - frozenset(t))
    return exact / len(pairs), false / len(pairs)


def tally_outcome(true, pred):
    """'true', 'missing_or_extra' or 'false' for the Tables 2-3 style tally."""
    true, pred = frozenset(true), frozenset(pred)
    if true == pred:
        return "true"
    if pred and not (pred & true):
        return "false"
    return "missing_or_extra"
