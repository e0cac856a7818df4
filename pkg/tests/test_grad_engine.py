import numpy as np
import pytest

from clustering import cluster_state, fuse_views
from config import Activation, Defaults, NegativeMode, PairMode
from grad_engine import (
    StaleStateError,
    backward,
    difference_order_ratio,
    finite_diff_check,
    frozen_loss,
    random_instance,
    split_backward,
)
from losses import LossSettings
from model import forward, init_params


def grads_close(a, b, atol):
    for x, y in zip(a.tensors(), b.tensors()):
        np.testing.assert_allclose(x, y, atol=atol, rtol=0)


class TestFiniteDifferences:
    @pytest.mark.parametrize("seed", range(50))
    def test_random_instances(self, seed):
        inst = random_instance(seed, n=20, d_in=10, d_out=4, k=2 + seed % 2)
        error = finite_diff_check(inst.params, inst.x_smooth, inst.state, inst.settings)
        assert error <= Defaults.GRADCHECK_TOLERANCE

    @pytest.mark.parametrize("seed", range(3))
    def test_full_intra_cluster_pairs(self, seed):
        inst = random_instance(seed, pair_mode=PairMode.FULL_INTRA_CLUSTER)
        assert finite_diff_check(inst.params, inst.x_smooth, inst.state, inst.settings) <= Defaults.GRADCHECK_TOLERANCE

    @pytest.mark.parametrize("seed", range(3))
    def test_instance_negatives(self, seed):
        inst = random_instance(seed, negative_mode=NegativeMode.INSTANCES)
        assert finite_diff_check(inst.params, inst.x_smooth, inst.state, inst.settings) <= Defaults.GRADCHECK_TOLERANCE

    def test_deep_linear_encoder(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(10, 5))
        params = init_params(11, 5, (4, 3))
        state = cluster_state(fuse_views(forward(params, x)), 2, 0.7, seed=0)
        assert finite_diff_check(params, x, state, LossSettings()) <= Defaults.GRADCHECK_TOLERANCE

    def test_shared_encoder_with_second_input(self):
        rng = np.random.default_rng(12)
        x, x2 = rng.normal(size=(10, 4)), rng.normal(size=(10, 4))
        params = init_params(12, 4, 3, activation=Activation.TANH, shared=True)
        state = cluster_state(fuse_views(forward(params, x, x2)), 2, 0.8, seed=0)
        error = finite_diff_check(params, x, state, LossSettings(alpha=0.7), x_view2=x2)
        assert error <= Defaults.GRADCHECK_TOLERANCE

    def test_second_order_accuracy(self, tiny_instance):
        inst = tiny_instance
        ratio = difference_order_ratio(inst.params, inst.x_smooth, inst.state, inst.settings, epsilon=1e-2)
        assert 3.0 <= ratio <= 5.0


class TestBackward:
    def test_loss_matches_forward_exactly(self, tiny_instance):
        inst = tiny_instance
        losses, _ = backward(inst.params, inst.x_smooth, inst.state, inst.settings)
        assert losses == frozen_loss(inst.params, inst.x_smooth, inst.state, inst.settings)

    def test_linear_in_alpha(self, tiny_instance):
        inst = tiny_instance
        g_pos, g_neg = split_backward(inst.params, inst.x_smooth, inst.state, inst.settings)
        for alpha in (0.0, 0.5, 25.0):
            _, g = backward(inst.params, inst.x_smooth, inst.state, LossSettings(alpha=alpha))
            for total, pos, neg in zip(g.tensors(), g_pos.tensors(), g_neg.tensors()):
                np.testing.assert_allclose(total, pos + alpha * neg, atol=1e-10, rtol=0)

    def test_midpoint_identity(self, tiny_instance):
        inst = tiny_instance
        _, g1 = backward(inst.params, inst.x_smooth, inst.state, LossSettings(alpha=0.2))
        _, g2 = backward(inst.params, inst.x_smooth, inst.state, LossSettings(alpha=3.0))
        _, gm = backward(inst.params, inst.x_smooth, inst.state, LossSettings(alpha=1.6))
        for a, b, m in zip(g1.tensors(), g2.tensors(), gm.tensors()):
            np.testing.assert_allclose(a + b - 2.0 * m, 0.0, atol=1e-10)

    def test_tied_weights_zero_positive_gradient(self):
        x = np.random.default_rng(0).normal(size=(8, 4))
        params = init_params(0, 4, 2)
        params.encoder2[0].weight = params.w1.copy()
        state = cluster_state(fuse_views(forward(params, x)), 2, 1.0, seed=0)
        losses, grads = backward(params, x, state, LossSettings(alpha=0.0))
        assert losses.l_pos == 0.0
        for g in grads.tensors():
            np.testing.assert_array_equal(g, 0.0)

    def test_detached_centers_give_no_negative_gradient(self, tiny_instance):
        inst = tiny_instance
        _, g_neg = split_backward(inst.params, inst.x_smooth, inst.state, LossSettings(detach_centers=True))
        for g in g_neg.tensors():
            np.testing.assert_array_equal(g, 0.0)

    def test_nodes_outside_h_do_not_contribute(self, tiny_instance):
        inst = tiny_instance
        outside = np.setdiff1d(np.arange(inst.state.num_nodes), inst.state.h)
        assert outside.size
        perturbed = inst.x_smooth.copy()
        perturbed[outside[0]] += 5.0
        _, base = backward(inst.params, inst.x_smooth, inst.state, inst.settings)
        _, moved = backward(inst.params, perturbed, inst.state, inst.settings)
        grads_close(base, moved, atol=1e-12)

    def test_stale_state_rejected(self, tiny_instance):
        inst = tiny_instance
        with pytest.raises(StaleStateError):
            backward(inst.params, inst.x_smooth[:-1], inst.state, inst.settings)

    def test_random_instance_is_deterministic(self):
        a, b = random_instance(5), random_instance(5)
        np.testing.assert_array_equal(a.x_smooth, b.x_smooth)
        np.testing.assert_array_equal(a.state.h, b.state.h)
        for x, y in zip(a.params.tensors(), b.params.tensors()):
            np.testing.assert_array_equal(x, y)
