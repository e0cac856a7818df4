import numpy as np
import pytest

from clustering import ContrastBatch
from config import NegativeMode, PairMode, TrainConfig
from errors import ShapeError
from losses import (
    LossError,
    LossSettings,
    compute_losses,
    full_intra_cluster_loss,
    instance_negative_loss,
    negative_loss,
    positive_loss,
    positive_loss_distance_form,
    positive_loss_inner_form,
    total_loss,
)
from tensor_core import cosine, row_l2_normalize


def batch_of(blocks1, blocks2, cen1=None, cen2=None) -> ContrastBatch:
    blocks1 = [np.asarray(b, dtype=float) for b in blocks1]
    blocks2 = [np.asarray(b, dtype=float) for b in blocks2]
    members, start = [], 0
    for b in blocks1:
        members.append(np.arange(start, start + b.shape[0]))
        start += b.shape[0]
    return ContrastBatch(
        blocks1=blocks1,
        blocks2=blocks2,
        members=members,
        cen1=np.stack([b.mean(axis=0) for b in blocks1]) if cen1 is None else np.asarray(cen1, dtype=float),
        cen2=np.stack([b.mean(axis=0) for b in blocks2]) if cen2 is None else np.asarray(cen2, dtype=float),
    )


def random_batch(seed, sizes=(3, 2, 4), d=3) -> ContrastBatch:
    rng = np.random.default_rng(seed)
    return batch_of(
        [row_l2_normalize(rng.normal(size=(n, d))) for n in sizes],
        [row_l2_normalize(rng.normal(size=(n, d))) for n in sizes],
    )


class TestPositiveLoss:
    def test_identical_views(self):
        b = row_l2_normalize(np.random.default_rng(0).normal(size=(4, 3)))
        assert positive_loss(batch_of([b[:2], b[2:]], [b[:2], b[2:]])) == 0.0

    def test_antipodal_single_pair(self):
        assert positive_loss(batch_of([[[1.0, 0.0]]], [[[-1.0, 0.0]]])) == pytest.approx(4.0)

    def test_two_orthogonal_pairs(self):
        batch = batch_of([[[1.0, 0.0]], [[0.0, 1.0]]], [[[0.0, 1.0]], [[1.0, 0.0]]])
        assert positive_loss(batch) == pytest.approx(2.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_forms_agree_with_cosine(self, seed):
        batch = random_batch(seed)
        expected = sum(
            sum(2.0 - 2.0 * cosine(a, b) for a, b in zip(b1, b2)) for b1, b2 in zip(batch.blocks1, batch.blocks2)
        ) / batch.k
        assert positive_loss_distance_form(batch) == pytest.approx(expected, abs=1e-10)
        assert positive_loss_inner_form(batch) == pytest.approx(expected, abs=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_bounds(self, seed):
        batch = random_batch(seed)
        assert 0.0 <= positive_loss(batch) <= 4.0 * batch.sizes.max()

    def test_misaligned_blocks(self):
        with pytest.raises(ShapeError):
            positive_loss(batch_of([np.ones((2, 2))], [np.ones((3, 2))]))


class TestFullIntraCluster:
    def test_reduces_to_same_node_for_singletons(self):
        batch = batch_of([[[1.0, 0.0]], [[0.0, 1.0]]], [[[0.0, 1.0]], [[0.6, 0.8]]])
        assert full_intra_cluster_loss(batch) == pytest.approx(positive_loss(batch), abs=1e-12)

    def test_matches_pairwise_sum(self):
        batch = random_batch(7)
        expected = 0.0
        for b1, b2 in zip(batch.blocks1, batch.blocks2):
            expected += sum(np.sum((a - b) ** 2) for a in b1 for b in b2) / b1.shape[0]
        assert full_intra_cluster_loss(batch) == pytest.approx(expected / batch.k, abs=1e-10)


class TestNegativeLoss:
    def test_orthogonal_centers(self):
        u, v = [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]
        batch = batch_of([[u], [v]], [[u], [v]])
        assert negative_loss(batch) == pytest.approx(0.0, abs=1e-15)

    def test_swapped_centers(self):
        u, v = [1.0, 0.0], [0.0, 1.0]
        batch = batch_of([[u], [v]], [[v], [u]])
        assert negative_loss(batch) == pytest.approx(1.0)

    def test_scale_invariant(self):
        batch = random_batch(1)
        scaled = batch_of(batch.blocks1, batch.blocks2, cen1=3.0 * batch.cen1, cen2=3.0 * batch.cen2)
        assert negative_loss(scaled) == pytest.approx(negative_loss(batch), abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_range(self, seed):
        assert -1.0 <= negative_loss(random_batch(seed)) <= 1.0

    def test_single_cluster_rejected(self):
        with pytest.raises(LossError):
            negative_loss(batch_of([[[1.0, 0.0]]], [[[1.0, 0.0]]]))


class TestInstanceNegativeLoss:
    def test_matches_pairwise_mean(self):
        batch = random_batch(2)
        h1, h2 = np.concatenate(batch.blocks1), np.concatenate(batch.blocks2)
        m = h1.shape[0]
        expected = np.mean([cosine(h1[i], h2[j]) for i in range(m) for j in range(m) if i != j])
        assert instance_negative_loss(batch) == pytest.approx(expected, abs=1e-12)

    def test_needs_two_rows(self):
        with pytest.raises(LossError):
            instance_negative_loss(batch_of([[[1.0, 0.0]]], [[[0.0, 1.0]]]))


class TestTotalLoss:
    def test_alpha_zero(self):
        assert total_loss(1.5, 0.7, 0.0).total == 1.5

    def test_arithmetic(self):
        assert total_loss(2.0, 0.5, 1.0).total == pytest.approx(2.5)

    def test_large_alpha(self):
        assert total_loss(0.0, -1.0, 10.0).total == pytest.approx(-10.0)

    def test_negative_alpha(self):
        with pytest.raises(LossError):
            total_loss(1.0, 1.0, -0.1)


class TestComputeLosses:
    def test_modes_dispatch(self):
        batch = random_batch(3)
        full = compute_losses(batch, LossSettings(alpha=0.5, pair_mode=PairMode.FULL_INTRA_CLUSTER,
                                                  negative_mode=NegativeMode.INSTANCES))
        assert full.l_pos == pytest.approx(full_intra_cluster_loss(batch))
        assert full.l_neg == pytest.approx(instance_negative_loss(batch))
        assert full.total == pytest.approx(full.l_pos + 0.5 * full.l_neg)

    def test_settings_from_config(self):
        assert LossSettings.from_config(TrainConfig(ablation="wo_rns")).negative_mode is NegativeMode.INSTANCES
        settings = LossSettings.from_config(TrainConfig(alpha=2.0, pair_mode="full-intra-cluster"))
        assert settings == LossSettings(alpha=2.0, pair_mode=PairMode.FULL_INTRA_CLUSTER)
