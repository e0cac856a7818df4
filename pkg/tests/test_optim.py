import numpy as np
import pytest

from config import TrainConfig
from errors import ShapeError
from grad_engine import backward
from optim import AdamState, adam_step, adam_update


def test_zero_gradient_leaves_parameters():
    theta = np.array([1.0, -2.0, 3.0])
    state = AdamState(lr=0.1)
    for _ in range(20):
        adam_update([theta], [np.zeros(3)], state)
    np.testing.assert_array_equal(theta, [1.0, -2.0, 3.0])
    assert state.step == 20


def test_first_step_is_sign_step():
    theta = np.array([0.0])
    adam_update([theta], [np.array([0.5])], AdamState(lr=1e-3))
    assert theta[0] == pytest.approx(-1e-3, rel=1e-6)


def test_first_step_bounded_by_lr():
    rng = np.random.default_rng(0)
    theta = rng.normal(size=(4, 3))
    start = theta.copy()
    adam_update([theta], [rng.normal(size=(4, 3))], AdamState(lr=0.01))
    assert np.abs(theta - start).max() <= 0.01 * (1 + 1e-9)


def test_converges_on_quadratic():
    theta = np.array([0.0])
    state = AdamState(lr=0.01)
    for _ in range(5000):
        adam_update([theta], [2.0 * (theta - 3.0)], state)
        if abs(theta[0] - 3.0) <= 1e-3:
            break
    assert abs(theta[0] - 3.0) <= 1e-3


def test_identical_streams_identical_trajectories():
    rng = np.random.default_rng(1)
    grads = [rng.normal(size=5) for _ in range(30)]
    a, b = np.zeros(5), np.zeros(5)
    sa, sb = AdamState(), AdamState()
    for g in grads:
        adam_update([a], [g], sa)
        adam_update([b], [g.copy()], sb)
    np.testing.assert_array_equal(a, b)


def test_weight_decay_pulls_towards_zero():
    theta = np.array([2.0])
    adam_update([theta], [np.array([0.0])], AdamState(lr=0.1, weight_decay=0.5))
    assert theta[0] < 2.0


def test_clip_norm_scales_gradient():
    clipped, free = np.array([0.0, 0.0]), np.array([0.0, 0.0])
    g = np.array([30.0, 40.0])
    adam_update([clipped], [g], AdamState(lr=0.1, clip_norm=1.0))
    adam_update([free], [g], AdamState(lr=0.1))
    # the first step is a sign step, so clipping must not change it
    np.testing.assert_allclose(clipped, free, rtol=1e-6)


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        adam_update([np.zeros(3)], [np.zeros(2)], AdamState())


def test_adam_step_updates_encoder_params(tiny_instance):
    inst = tiny_instance
    before = [t.copy() for t in inst.params.tensors()]
    _, grads = backward(inst.params, inst.x_smooth, inst.state, inst.settings)
    state = AdamState.from_config(TrainConfig(lr=0.05))
    adam_step(inst.params, grads, state)
    assert state.step == 1
    assert any(not np.array_equal(a, b) for a, b in zip(before, inst.params.tensors()))
