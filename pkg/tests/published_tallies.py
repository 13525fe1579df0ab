"""Published tallies used as metric anchors."""

import numpy as np

EXPRESSION_ORDER = ["surprise", "gloomy", "fear", "happy", "angry", "disgust"]

# rows true, columns predicted, in EXPRESSION_ORDER
EXPRESSION_CONFUSION = np.array([
    [581, 8, 4, 1, 6, 0],
    [8, 446, 0, 2, 30, 0],
    [21, 8, 393, 1, 51, 0],
    [0, 0, 0, 618, 0, 0],
    [28, 17, 0, 1, 398, 18],
    [6, 2, 0, 1, 28, 239],
])

# (tpr, fpr, precision) per class, as printed
EXPRESSION_ROWS = {
    "surprise": (0.968, 0.027, 0.902),
    "gloomy": (0.918, 0.014, 0.927),
    "fear": (0.829, 0.002, 0.990),
    "happy": (1.000, 0.003, 0.990),
    "angry": (0.861, 0.047, 0.776),
    "disgust": (0.866, 0.007, 0.930),
}


def lower_face_pairs():
    """(true set, predicted set) pairs of the published lower-face tally.

    The printed "19+17+24" prediction for 9+17+23+24 is read as 9+17+24.
    """
    rows = [
        ("9", 8, []), ("10", 12, []), ("12", 12, []), ("15", 8, []), ("17", 16, []), ("20", 12, []),
        ("25", 48, []), ("26", 24, [("25+26", 4), ("25", 2)]), ("27", 24, []), ("9+17", 24, []),
        ("9+17+23+24", 4, [("9+17+24", 1)]), ("9+25", 4, []), ("10+17", 8, [("17", 2), ("10", 1)]),
        ("10+15+17", 4, []), ("10+25", 8, []), ("12+25", 16, []), ("12+26", 8, [("12+25", 1)]),
        ("15+17", 16, []), ("17+23+24", 8, []), ("20+25", 16, []),
    ]
    pairs = []
    for truth, n, wrong in rows:
        t = frozenset(int(a) for a in truth.split("+"))
        for pred, k in wrong:
            pairs += [(t, frozenset(int(a) for a in pred.split("+")))] * k
        pairs += [(t, t)] * (n - sum(k for _, k in wrong))
    return pairs
