import numpy as np
import pytest

from aurec.errors import DataError
from aurec.fusion import (FusionNet, TrainParams, augment_truncations, build_score_vector, decide, forward,
                          init_params, loss_and_grad, make_target, train)
from aurec.hmm import AuHmm, Gmm

from .test_hmm import identity_space


def unit_model(au, bank, self_loop=True):
    g = Gmm(np.ones(1), np.zeros((1, 1)), np.ones((1, 1)))
    return AuHmm(au, bank, 1, f"{bank}:1", [g], np.zeros((1, 1)), np.zeros(1), 0, identity_space(1, 1))


def test_score_at_mode_closed_form():
    s = build_score_vector(np.zeros((1, 1)), np.zeros((1, 1)), [unit_model(1, "geo")], [unit_model(1, "app")])
    assert np.allclose(s, -0.5 * np.log(2 * np.pi), atol=1e-12)


def test_score_vector_deterministic_and_frame_doubling(rng):
    x = rng.normal(size=(5, 1))
    g, a = [unit_model(1, "geo")], [unit_model(1, "app")]
    s1 = build_score_vector(x, x, g, a)
    assert np.array_equal(s1, build_score_vector(x.copy(), x.copy(), g, a))
    doubled = np.repeat(x, 2, axis=0)
    assert np.allclose(build_score_vector(doubled, doubled, g, a), s1, atol=1e-12)


def test_score_vector_au_mismatch():
    with pytest.raises(DataError):
        build_score_vector(np.zeros((1, 1)), np.zeros((1, 1)), [unit_model(1, "geo")], [unit_model(2, "app")])


def net_from(params, n_in):
    w1, b1, w2, b2 = params
    return FusionNet(w1, b1, w2, b2, np.zeros(n_in), np.ones(n_in))


def test_zero_net_gives_half():
    net = net_from([np.zeros((3, 4)), np.zeros(3), np.zeros((2, 3)), np.zeros(2)], 4)
    assert np.array_equal(forward(net, np.arange(4.0)), [0.5, 0.5])


def test_pass_through_net():
    net = net_from([np.ones((1, 1)), np.zeros(1), np.ones((1, 1)), np.zeros(1)], 1)
    x = 0.7
    assert forward(net, [x])[0] == pytest.approx(1 / (1 + np.exp(-np.tanh(x))), abs=1e-15)


def test_random_net_range(rng):
    net = net_from(init_params(6, 8, 3, 1), 6)
    out = forward(net, rng.normal(0, 50, (20, 6)))
    assert np.all((out > 0) & (out < 1))
    with pytest.raises(ValueError):
        forward(net, np.zeros(5))


def fd_check(rng, n, n_in, hidden, n_out):
    params = init_params(n_in, hidden, n_out, int(rng.integers(1 << 30)))
    params = [p + rng.normal(0, 0.3, p.shape) for p in params]
    z = rng.normal(size=(n, n_in))
    y = rng.random((n, n_out))
    _, grads = loss_and_grad(params, z, y)
    worst = 0.0
    h = 1e-6
    for p, g in zip(params, grads):
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            lp, _ = loss_and_grad(params, z, y)
            p[idx] = old - h
            lm, _ = loss_and_grad(params, z, y)
            p[idx] = old
            fd = (lp - lm) / (2 * h)
            worst = max(worst, abs(fd - g[idx]) / max(abs(fd) + abs(g[idx]), 1e-7))
    return worst


def test_gradient_matches_finite_differences(rng):
    for _ in range(5):
        assert fd_check(rng, int(rng.integers(1, 8)), int(rng.integers(1, 7)), int(rng.integers(1, 6)),
                        int(rng.integers(1, 4))) < 1e-4


def test_overfit_single_pair():
    net = train(np.array([[0.3, -1.2, 2.0, 0.1]]), np.array([[0.9, 0.1]]), TrainParams(epochs=2000))
    assert net.final_loss < 1e-4


def test_constant_targets_loss_decreases(rng):
    x = rng.normal(size=(20, 4))
    net = train(x, np.full((20, 2), 0.5), TrainParams(epochs=300, seed=3))
    assert net.loss_history[-1] < net.loss_history[0]
    assert net.final_loss <= min(net.loss_history) + 1e-15


def test_train_masks_constant_slot(rng):
    x = rng.normal(size=(10, 3))
    x[:, 1] = 4.0
    net = train(x, rng.random((10, 1)), TrainParams(epochs=50))
    assert list(net.masked) == [False, True, False]
    assert np.all(np.isfinite(forward(net, x)))


def test_train_deterministic(rng):
    x, y = rng.normal(size=(15, 4)), rng.random((15, 2))
    a, b = train(x, y, TrainParams(epochs=100, seed=9)), train(x, y, TrainParams(epochs=100, seed=9))
    assert np.array_equal(a.w1, b.w1) and np.array_equal(a.w2, b.w2)


def test_train_errors():
    with pytest.raises(DataError):
        train(np.zeros((0, 2)), np.zeros((0, 1)))


def test_truncations_on_ramp():
    prof = np.linspace(0, 1, 11)
    copies = augment_truncations(prof, 5)
    assert [e for e, _ in copies] == [2, 4, 6, 8, 10]
    assert np.allclose([v for _, v in copies], [0.2, 0.4, 0.6, 0.8, 1.0])


def test_truncations_single_copy():
    assert augment_truncations(np.linspace(0, 1, 7), 1) == [(6, 1.0)]


def test_truncations_short_sequence_collapses():
    copies = augment_truncations(np.array([0.0, 1.0]), 5)
    assert [e for e, _ in copies] == [0, 1]


def test_target_intensity():
    assert list(make_target([1, 2, 4], {1, 4}, 0.6)) == [0.6, 0.0, 0.6]


def test_decide():
    assert decide([0.9, 0.2, 0.7], [1, 2, 3]) == {1, 3}
    assert decide([0.1, 0.49], [1, 2]) == frozenset()
    assert decide([0.5], [7]) == {7}
