import numpy as np
import pytest

from aurec import pipeline
from aurec.config import Config
from aurec.synth import default_spec, synth_sequences


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def textured(shape, seed=0, sigmas=(1.0, 2.0, 4.0)):
    """Multi-scale smooth noise, so every pyramid level keeps trackable detail."""
    from scipy import ndimage
    r = np.random.default_rng(seed)
    img = np.zeros(shape)
    for s in sigmas:
        layer = ndimage.gaussian_filter(r.standard_normal(shape), s, mode="wrap")
        img += layer / layer.std()
    return 0.5 + 0.15 * img / img.std()


@pytest.fixture(scope="session")
def small_run():
    """A small trained lower-face model with its train and test features."""
    spec = default_spec("lower")
    cfg = Config(epochs=1500)
    train = synth_sequences(spec, 8, seed=11)
    test = synth_sequences(spec, 3, seed=12)
    ftr = pipeline.extract_sequences([(s, f"tr{i}", t) for i, (s, t, _) in enumerate(train)], cfg)
    fte = pipeline.extract_sequences([(s, f"te{i}", t) for i, (s, t, _) in enumerate(test)], cfg)
    bundle, _ = pipeline.train_from_features(ftr, cfg)
    return bundle, ftr, fte


_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    detail = dict(item.user_properties).get("detail", "")
    _CRITERIA[mark.args[0]] = ("PASS" if rep.passed else "FAIL", mark.args[1], detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[n]
        line = f"{status} criterion {n:>2}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
