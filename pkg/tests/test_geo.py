import numpy as np
import pytest

from aurec.errors import DataError
from aurec.geo import (StateBucketing, bucket_profile, bucket_state, displacement_features, fit_geo_space,
                       intensity, intensity_profile)
from aurec.hmm import assign_states
from aurec.reduction import pca_project


def linear_traj(t=5, end=(4.0, 0.0)):
    f = np.arange(t)[:, None, None] / (t - 1)
    return f * np.array(end)[None, None, :]  # (t, 1, 2)


def test_constant_trajectory_zero_features():
    pos = np.tile(np.array([[1.0, 2.0], [3.0, 4.0]]), (4, 1, 1))
    assert np.all(displacement_features(pos) == 0)


def test_linear_motion_features():
    feats = displacement_features(linear_traj())
    # frame 3 in 1-based numbering is index 2
    assert np.allclose(feats[2], (2.0, 0.0))
    assert np.all(feats[0] == 0)


def test_intensity_endpoints_and_midpoint():
    traj = linear_traj()
    assert intensity(traj, 0) == 0.0
    assert intensity(traj, 4) == 1.0
    assert intensity(traj, 2) == pytest.approx(0.5, abs=1e-12)


def test_intensity_static_errors():
    with pytest.raises(DataError, match="static sequence"):
        intensity_profile(np.zeros((3, 2, 2)))


def test_intensity_endpoints_random(rng):
    for _ in range(20):
        pos = np.cumsum(rng.normal(size=(6, 5, 2)), axis=0)
        p = intensity_profile(pos)
        assert abs(p[0]) < 1e-12 and abs(p[-1] - 1) < 1e-12


@pytest.mark.parametrize("v,state", [(0.0, 0), (0.32, 0), (0.33, 1), (0.5, 1), (0.66, 1),
                                     (0.6600001, 2), (1.0, 2), (1.3, 2)])
def test_three_state_buckets(v, state):
    # states are numbered from 0 here; 0.66 -> second state, 1.0 -> third
    assert bucket_state(v, StateBucketing.for_states(3)) == state


@pytest.mark.parametrize("v,state", [(0.0, 0), (0.2, 1), (0.4, 2), (0.6, 2), (0.61, 3), (0.8, 4), (1.0, 4)])
def test_five_state_buckets(v, state):
    assert bucket_state(v, StateBucketing.for_states(5)) == state


def test_bucket_errors():
    with pytest.raises(ValueError):
        bucket_state(-0.1, StateBucketing.for_states(3))
    with pytest.raises(ValueError):
        StateBucketing.for_states(4)


def test_assign_states_ramp():
    traj = linear_traj(t=7)
    states = assign_states(traj, StateBucketing.for_states(3))
    # intensities k/6: 2/6 = 0.333 already reaches 0.33 and 4/6 = 0.667 exceeds 0.66
    assert list(states) == [0, 0, 1, 1, 2, 2, 2]


def test_assign_states_two_frames():
    states = assign_states(linear_traj(t=2), StateBucketing.for_states(3))
    assert list(states) == [0, 2]


def test_assign_states_follows_dip():
    prof = np.array([0.0, 0.5, 0.2, 0.9, 1.0])
    assert list(bucket_profile(prof, StateBucketing.for_states(3))) == [0, 1, 0, 2, 2]


def test_fit_geo_space_identical_groups(rng):
    x = rng.normal(size=(20, 6))
    sp = fit_geo_space([x, x, x], 3, StateBucketing.for_states(3))
    for b in sp.bases[1:]:
        assert np.array_equal(b.components, sp.bases[0].components)


def test_fit_geo_space_rank1(rng):
    dirs = [np.eye(4)[i] for i in range(3)]
    groups = [rng.normal(size=(10, 1)) * d for d in dirs]
    sp = fit_geo_space(groups, 1, StateBucketing.for_states(3))
    for d, b in zip(dirs, sp.bases):
        assert abs(abs(b.components[:, 0] @ d) - 1) < 1e-10


def test_fit_geo_space_variances(rng):
    groups = [rng.normal(size=(30, 6)) * rng.uniform(0.5, 3, 6) for _ in range(3)]
    sp = fit_geo_space(groups, 2, StateBucketing.for_states(3))
    for j, g in enumerate(groups):
        top = np.linalg.eigvalsh(np.cov(g, rowvar=False, bias=True))[::-1][:2]
        assert np.allclose(pca_project(sp.bases[j], g).var(axis=0), top, rtol=1e-6)
        assert np.allclose(sp.project(g, j), pca_project(sp.bases[j], g))


def test_fit_geo_space_empty_state(rng):
    with pytest.raises(DataError, match="state 1"):
        fit_geo_space([rng.normal(size=(5, 3)), np.zeros((0, 3)), rng.normal(size=(5, 3))], 1,
                      StateBucketing.for_states(3))
