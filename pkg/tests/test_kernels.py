import itertools

import numpy as np
import pytest

from aurec import _kernels, _pykernels
from aurec.tracker import TrackerParams, prepare_pyramid

try:
    from aurec import _core
except ImportError:  # extension not built
    _core = None

needs_core = pytest.mark.skipif(_core is None, reason="compiled extension not built")


def brute_viterbi(log_init, log_trans, log_emit):
    t, n = log_emit.shape
    best = -np.inf
    for path in itertools.product(range(n), repeat=t):
        s = log_init[path[0]] + log_emit[0, path[0]]
        for f in range(1, t):
            s += log_trans[path[f - 1], path[f]] + log_emit[f, path[f]]
        best = max(best, s)
    return best


def random_model(rng, n, t):
    with np.errstate(divide="ignore"):
        trans = rng.random((n, n)) * (rng.random((n, n)) > 0.3)
        trans[np.arange(n), np.arange(n)] += 0.1
        trans /= trans.sum(axis=1, keepdims=True)
        init = rng.random(n) * (rng.random(n) > 0.3)
        init[0] += 0.1
        init /= init.sum()
        return np.log(init), np.log(trans), rng.normal(0, 3, (t, n))


@pytest.mark.parametrize("mod", [_pykernels, pytest.param(_core, marks=needs_core)])
def test_viterbi_matches_brute_force(mod, rng):
    for _ in range(40):
        n, t = rng.integers(1, 5, endpoint=True), rng.integers(1, 6, endpoint=True)
        li, lt, le = random_model(rng, n, t)
        score, path = mod.viterbi(li, lt, le)
        assert abs(score - brute_viterbi(li, lt, le)) < 1e-9
        # the returned path attains the score
        s = li[path[0]] + le[0, path[0]] + sum(lt[path[f - 1], path[f]] + le[f, path[f]] for f in range(1, t))
        assert abs(s - score) < 1e-9


@needs_core
def test_backends_agree_on_viterbi(rng):
    for _ in range(20):
        li, lt, le = random_model(rng, 4, 9)
        a, pa = _core.viterbi(li, lt, le)
        b, pb = _pykernels.viterbi(li, lt, le)
        assert a == pytest.approx(b, abs=1e-12)
        assert list(pa) == list(pb)


@needs_core
def test_backends_agree_on_jacobi(rng):
    m = rng.normal(size=(7, 7))
    m = m + m.T
    da, va, _ = _core.jacobi_eigh(m.copy(), 1e-12, 100)
    db, vb, _ = _pykernels.jacobi_eigh(m.copy(), 1e-12, 100)
    assert np.allclose(np.sort(da), np.sort(db), atol=1e-10)
    assert np.allclose(np.sort(da), np.linalg.eigvalsh(m), atol=1e-10)


@needs_core
def test_backends_agree_on_lk_level(rng):
    from tests.conftest import textured
    img = textured((48, 48), 3)
    nxt = np.roll(img, (1, 2), axis=(0, 1))
    p = TrackerParams()
    a, b = prepare_pyramid(img, p)[0], prepare_pyramid(nxt, p)[0]
    args = (a.image, b.image, a.grad_x, a.grad_y, 24.0, 24.0, 0.0, 0.0, 5, 20, 0.01)
    ra = _core.lk_track_level(*args)
    rb = _pykernels.lk_track_level(*args)
    assert np.allclose(ra, rb, rtol=1e-9, atol=1e-9)
    assert ra[0] == pytest.approx(2.0, abs=0.1) and ra[1] == pytest.approx(1.0, abs=0.1)


def test_backend_selected():
    assert _kernels.BACKEND in ("cython", "python")
    if _core is not None:
        assert _kernels.BACKEND == "cython" or _kernels.os.environ.get("AUREC_PURE_PYTHON")


def test_pure_python_env_switch():
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-c", "import aurec; print(aurec.BACKEND)"],
                         env={**__import__("os").environ, "AUREC_PURE_PYTHON": "1"},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
