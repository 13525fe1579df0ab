"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel with the best-of-N time for each backend and the
speedup. Exits without timing the compiled side when it is not built.
"""

import argparse
import timeit
from contextlib import contextmanager

import numpy as np
from scipy import ndimage

from aurec import _kernels, _pykernels
from aurec.synth import default_spec, synth_sequences
from aurec.tracker import _with_gradients, build_pyramid, track_grid

try:
    from aurec import _core
except ImportError:
    _core = None


@contextmanager
def backend(mod):
    saved = {k: getattr(_kernels, k) for k in ("lk_track_level", "viterbi", "jacobi_eigh")}
    for k in saved:
        setattr(_kernels, k, getattr(mod, k))
    try:
        yield
    finally:
        for k, v in saved.items():
            setattr(_kernels, k, v)


def cases():
    rng = np.random.default_rng(0)
    img = ndimage.gaussian_filter(rng.standard_normal((64, 64)), 2.0)
    lv = _with_gradients(build_pyramid(img, 1))[0]
    nxt = np.roll(img, (1, 2), axis=(0, 1))
    lk_args = (lv.image, nxt, lv.grad_x, lv.grad_y, 32.0, 32.0, 0.0, 0.0, 5, 20, 0.01)

    log_init = np.log(np.full(5, 0.2))
    log_trans = np.log(rng.dirichlet(np.ones(5), 5))
    log_emit = rng.normal(size=(40, 5))

    m = rng.normal(size=(24, 24))
    sym = m @ m.T

    seq, _, _ = synth_sequences(default_spec("lower"), 1, seed=0)[0]
    return {
        "lk_track_level (11x11 window)": lambda k: k.lk_track_level(*lk_args),
        "viterbi (5 states, 40 frames)": lambda k: k.viterbi(log_init, log_trans, log_emit),
        "jacobi_eigh (24x24)": lambda k: k.jacobi_eigh(sym.copy(), 1e-12, 100),
        "track_grid (12 points, 9 frames)": lambda k: track_grid(seq),
    }


def best(fn, mod, repeat):
    with backend(mod):
        timer = timeit.Timer(lambda: fn(mod))
        n, _ = timer.autorange()
        return min(timer.repeat(repeat, n)) / n


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'kernel':<36s}{'python':>12s}{'cython':>12s}{'speedup':>9s}")
    for name, fn in cases().items():
        py = best(fn, _pykernels, args.repeat)
        if _core is None:
            print(f"{name:<36s}{py * 1e6:10.1f}us{'-':>12s}{'-':>9s}")
            continue
        cy = best(fn, _core, args.repeat)
        print(f"{name:<36s}{py * 1e6:10.1f}us{cy * 1e6:10.1f}us{py / cy:8.1f}x")
    if _core is None:
        print("compiled backend not built; run pip install -e . --no-build-isolation")


if __name__ == "__main__":
    main()
