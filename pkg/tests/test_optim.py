import numpy as np
import pytest

from chorus.core.errors import InvalidParams
from chorus.nn.init import fan_in, he_init
from chorus.nn.optim import Adam, AdamState, RMSprop, RMSpropState, adam_step, create_optimizer, rmsprop_step


def test_adam_zero_gradient_leaves_parameters():
    params = {"w": np.array([1.0, -2.0])}
    out = adam_step(params, {"w": np.zeros(2)}, AdamState(), lr=0.1)
    assert np.array_equal(out["w"], params["w"])


def test_adam_first_step_is_lr_times_sign():
    g = np.array([0.5, -3.0, 1e-3])
    out = adam_step({"w": np.zeros(3)}, {"w": g}, AdamState(), lr=0.01)
    assert np.allclose(out["w"], -0.01 * g / (np.abs(g) + 1e-8))


def test_adam_two_steps_follow_the_recurrence():
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
    g1, g2 = np.array([1.0]), np.array([-2.0])
    state = AdamState()
    p = adam_step({"w": np.array([0.0])}, {"w": g1}, state, lr)
    p = adam_step(p, {"w": g2}, state, lr)

    m1, v1 = (1 - b1) * g1, (1 - b2) * g1**2
    theta = -lr * (m1 / (1 - b1)) / (np.sqrt(v1 / (1 - b2)) + eps)
    m2, v2 = b1 * m1 + (1 - b1) * g2, b2 * v1 + (1 - b2) * g2**2
    theta = theta - lr * (m2 / (1 - b1**2)) / (np.sqrt(v2 / (1 - b2**2)) + eps)
    assert state.t == 2
    assert np.allclose(p["w"], theta)


def test_rmsprop_first_step():
    g = np.array([2.0, -0.5])
    out = rmsprop_step({"w": np.ones(2)}, {"w": g}, RMSpropState(), lr=0.01)
    assert np.allclose(out["w"], 1.0 - 0.01 * g / (np.sqrt(0.1) * np.abs(g) + 1e-8))


def test_rmsprop_three_steps_follow_the_recurrence():
    lr, rho, eps = 0.05, 0.9, 1e-8
    grads = [np.array([1.0, -0.5]), np.array([-2.0, 0.25]), np.array([0.5, 4.0])]
    state = RMSpropState()
    p = {"w": np.array([0.3, -0.7])}
    theta, v = p["w"].copy(), np.zeros(2)
    for g in grads:
        p = rmsprop_step(p, {"w": g}, state, lr)
        v = rho * v + (1 - rho) * g**2
        theta = theta - lr * g / (np.sqrt(v) + eps)
    assert np.allclose(p["w"], theta)
    assert np.allclose(state.v["w"], v)


def test_optimizers_keep_dtype():
    params = {"w": np.ones(3, dtype=np.float32)}
    grads = {"w": np.full(3, 0.5, dtype=np.float32)}
    for opt in (Adam(1e-3), RMSprop(1e-3)):
        assert opt.step(params, grads)["w"].dtype == np.float32


def test_factory():
    assert isinstance(create_optimizer("adam", 0.1), Adam)
    assert isinstance(create_optimizer("RMSprop", 0.1), RMSprop)
    with pytest.raises(InvalidParams):
        create_optimizer("sgd", 0.1)
    with pytest.raises(InvalidParams):
        Adam(0.0)


def test_he_init_statistics():
    w = he_init((1000, 100), seed=0, dtype=np.float64)
    assert fan_in((1000, 100)) == 100
    assert fan_in((16, 4, 3, 3)) == 36
    assert abs(w.std() - np.sqrt(2 / 100)) / np.sqrt(2 / 100) < 0.05
    assert abs(w.mean()) < 3 * np.sqrt(2 / 100) / np.sqrt(w.size)
    assert np.array_equal(w, he_init((1000, 100), seed=0, dtype=np.float64))
