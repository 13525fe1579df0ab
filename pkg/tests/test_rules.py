import numpy as np
import pytest

from aurec.errors import DataError
from aurec.rules import (Condition, Rule, RuleList, au_recognition_metrics, class_scores, classify_expression,
                         confusion_and_metrics, confusion_matrix, induce_rules, metrics_from_confusion,
                         parse_rules, roc_area, tally_outcome)

from .published_tallies import EXPRESSION_ORDER, EXPRESSION_CONFUSION, EXPRESSION_ROWS, lower_face_pairs


def accuracy(rl, x, y):
    return np.mean([classify_expression(xi, rl) == yi for xi, yi in zip(x, y)])


def test_separable_one_au(rng):
    x = rng.random((60, 3))
    x[:30, 0] = rng.uniform(0.7, 1.0, 30)
    x[30:, 0] = rng.uniform(0.0, 0.5, 30)
    y = ["surprise"] * 30 + ["happy"] * 30
    rl = induce_rules(x, y, ["AU1", "AU2", "AU4"])
    assert accuracy(rl, x, y) == 1.0


def test_single_class():
    rl = induce_rules(np.random.default_rng(0).random((10, 2)), ["fear"] * 10)
    assert rl.rules == [] and rl.default == "fear"


def test_xor(rng):
    x = rng.random((200, 2))
    y = np.where((x[:, 0] > 0.5) ^ (x[:, 1] > 0.5), "angry", "happy")
    rl = induce_rules(x, y)
    majority = max(np.mean(y == "angry"), np.mean(y == "happy"))
    assert accuracy(rl, x, y) > majority
    assert len(rl.rules) >= 2


def test_max_conditions(rng):
    x = rng.random((300, 6))
    y = np.where(x.sum(axis=1) > 3, "fear", "gloomy")
    rl = induce_rules(x, y)
    assert all(1 <= len(r.conditions) <= 4 for r in rl.rules)


def test_classify_default_and_order():
    assert classify_expression([0.3], RuleList([], "happy")) == "happy"
    r1 = Rule((Condition(0, ">=", 0.5),), "surprise")
    assert classify_expression([0.9], RuleList([r1], "happy")) == "surprise"
    r2 = Rule((Condition(0, ">=", 0.2),), "fear")
    assert classify_expression([0.9], RuleList([r2, r1], "happy")) == "fear"
    assert classify_expression([0.9], RuleList([r1, r2], "happy")) == "surprise"


def test_format_parse_round_trip(rng):
    x = rng.random((80, 3))
    y = np.where(x[:, 0] > 0.6, "happy", np.where(x[:, 1] > 0.5, "angry", "gloomy"))
    rl = induce_rules(x, y, ["AU4", "AU7", "AU12"])
    text = rl.format()
    assert text.splitlines()[-1].startswith("=> ")
    back = parse_rules(text, ["AU4", "AU7", "AU12"])
    assert back.rules == rl.rules and back.default == rl.default
    with pytest.raises(DataError):
        parse_rules("(AU99 >= 0.5) => happy\n=> fear\n", ["AU4"])
    with pytest.raises(DataError, match="default"):
        parse_rules("(AU4 >= 0.5) => happy\n", ["AU4"])


def test_class_scores_laplace():
    r = Rule((Condition(0, ">=", 0.5),), "happy")
    rl = RuleList([r], "fear", ["AU1"], [{"happy": 8, "fear": 1}, {"fear": 5}])
    s = class_scores([0.9], rl, ["fear", "happy"])
    assert np.allclose(s, [2 / 11, 9 / 11])


def test_expression_confusion_metrics():
    per_class, acc = metrics_from_confusion(EXPRESSION_CONFUSION)
    assert acc == pytest.approx(2675 / 2916) and abs(acc - 0.9174) < 1e-4
    for name, m in zip(EXPRESSION_ORDER, per_class):
        tpr, fpr, prec = EXPRESSION_ROWS[name]
        assert abs(m.tpr - tpr) < 0.001 and abs(m.fpr - fpr) < 0.001 and abs(m.precision - prec) < 0.001


def test_confusion_from_pairs():
    cm, per_class, acc = confusion_and_metrics([("a", "a"), ("a", "b"), ("b", "b")], ["a", "b"])
    assert cm.tolist() == [[1, 1], [0, 1]]
    assert acc == pytest.approx(2 / 3)
    with pytest.raises(DataError):
        confusion_matrix([("a", "z")], ["a", "b"])
    with pytest.raises(DataError):
        confusion_and_metrics([], ["a"])


def test_identity_predictions():
    classes = ["x", "y", "z"]
    _, per_class, acc = confusion_and_metrics([(c, c) for c in classes * 3], classes)
    assert acc == 1.0
    assert all((m.tpr, m.fpr, m.precision) == (1.0, 0.0, 1.0) for m in per_class)


def test_nan_for_unpredicted_class():
    _, per_class, _ = confusion_and_metrics([("a", "a"), ("b", "a")], ["a", "b"])
    assert np.isnan(per_class[1].precision)


def test_roc_cases():
    assert roc_area([0.9, 0.4, 0.6, 0.1], ["p", "p", "n", "n"], "p") == 0.75
    assert roc_area([0.9, 0.8, 0.2, 0.1], ["p", "p", "n", "n"], "p") == 1.0
    assert roc_area([0.5] * 4, ["p", "n", "p", "n"], "p") == 0.5
    with pytest.raises(DataError, match="undefined AUC"):
        roc_area([0.1, 0.2], ["p", "p"], "p")


def test_lower_face_recognition_rate():
    pairs = lower_face_pairs()
    assert len(pairs) == 280
    r, f = au_recognition_metrics(pairs)
    assert abs(r - 0.961) < 0.0005
    assert abs(f - 0.025) < 0.0005
    tallies = [tally_outcome(t, p) for t, p in pairs]
    assert (tallies.count("true"), tallies.count("missing_or_extra"), tallies.count("false")) == (269, 9, 2)


def test_recognition_extremes():
    sets = [frozenset({1}), frozenset({2, 4})]
    assert au_recognition_metrics([(s, s) for s in sets]) == (1.0, 0.0)
    assert au_recognition_metrics([(s, s | {9}) for s in sets]) == (0.0, 1.0)
    with pytest.raises(DataError):
        au_recognition_metrics([])


def test_tally_outcome():
    assert tally_outcome({1, 2}, {1, 2}) == "true"
    assert tally_outcome({1, 2}, {1}) == "missing_or_extra"
    assert tally_outcome({1}, {1, 5}) == "missing_or_extra"
    assert tally_outcome({1}, {5}) == "false"
    assert tally_outcome({1}, set()) == "missing_or_extra"
