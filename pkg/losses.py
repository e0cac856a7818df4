"""
CCGC Losses
===========
Cluster-guided positive loss, center-pair negative loss and their weighted
total. `compute_losses` is the single forward path used by training, the
backward pass and the finite-difference checker.

Version: 1.0.0
"""

import logging
from dataclasses import dataclass, asdict
from typing import Any, Dict

import numpy as np

from clustering import ContrastBatch
from config import NegativeMode, PairMode
from errors import CCGCError, ShapeError
from tensor_core import cosine_matrix

logger = logging.getLogger(__name__)

# Agreement required between the squared-distance and inner-product forms
FORM_AGREEMENT = 1e-10


@dataclass(frozen=True)
class LossBreakdown:
    """L = l_pos + alpha * l_neg."""
    l_pos: float
    l_neg: float
    alpha: float
    total: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class LossSettings:
    """Everything the loss (and its gradient) depends on besides the batch."""
    alpha: float = 1.0
    pair_mode: PairMode = PairMode.SAME_NODE
    negative_mode: NegativeMode = NegativeMode.CENTERS
    detach_centers: bool = False

    @classmethod
    def from_config(cls, cfg) -> "LossSettings":
        """Settings of a TrainConfig (or pass-through if already LossSettings)."""
        if isinstance(cfg, LossSettings):
            return cfg
        return cls(
            alpha=cfg.alpha,
            pair_mode=cfg.pair_mode,
            negative_mode=NegativeMode.INSTANCES if cfg.disable_rns else NegativeMode.CENTERS,
            detach_centers=cfg.detach_centers,
        )


# =============================================================================
# POSITIVE LOSS
# =============================================================================

def _check_aligned(batch: ContrastBatch) -> None:
    if len(batch.blocks1) != len(batch.blocks2):
        raise LossError("views have a different number of cluster blocks")
    for p, (b1, b2) in enumerate(zip(batch.blocks1, batch.blocks2)):
        if b1.shape != b2.shape:
            raise ShapeError(f"block {p} is misaligned: {b1.shape} vs {b2.shape}")


def positive_loss_distance_form(batch: ContrastBatch) -> float:
    """(1/K) sum over same-node cross-view pairs of ||b1_i - b2_i||^2."""
    total = 0.0
    for b1, b2 in zip(batch.blocks1, batch.blocks2):
        diff = b1 - b2
        total += float(np.einsum("ij,ij->", diff, diff))
    return total / batch.k


def positive_loss_inner_form(batch: ContrastBatch) -> float:
    """
    Same quantity expanded as ||a||^2 + ||b||^2 - 2<a, b>.

    For unit rows each term is 2 - 2cos(a, b).
    """
    total = 0.0
    for b1, b2 in zip(batch.blocks1, batch.blocks2):
        total += float(
            np.einsum("ij,ij->", b1, b1) + np.einsum("ij,ij->", b2, b2) - 2.0 * np.einsum("ij,ij->", b1, b2)
        )
    return total / batch.k


def positive_loss(batch: ContrastBatch) -> float:
    """
    Mean over clusters of the summed squared distance between aligned rows.

    Normalized by K only, not by cluster size. Both algebraic forms are
    evaluated and must agree.
    """
    _check_aligned(batch)
    value = positive_loss_distance_form(batch)
    check = positive_loss_inner_form(batch)
    if abs(value - check) > FORM_AGREEMENT * max(1.0, abs(value)):
        raise LossError(f"positive loss forms disagree: {value!r} vs {check!r}")
    return value


def full_intra_cluster_loss(batch: ContrastBatch) -> float:
    """
    Every cross-view pair inside a cluster is positive.

    (1/K) sum_p (1/n_p) sum_i sum_j ||b1_i - b2_j||^2, reducing to the
    same-node form when every cluster has a single member.
    """
    _check_aligned(batch)
    total = 0.0
    for b1, b2 in zip(batch.blocks1, batch.blocks2):
        n_p = b1.shape[0]
        s1 = b1.sum(axis=0)
        s2 = b2.sum(axis=0)
        total += float(np.einsum("ij,ij->", b1, b1) + np.einsum("ij,ij->", b2, b2)) - 2.0 * float(s1 @ s2) / n_p
    return total / batch.k


# =============================================================================
# NEGATIVE LOSS
# =============================================================================

def negative_loss(batch: ContrastBatch) -> float:
    """Mean cosine between view-1 center p and view-2 center q over all p != q."""
    k = batch.k
    if k < 2:
        raise LossError(f"negative loss needs at least 2 clusters, got K={k}")
    if batch.cen1.shape != batch.cen2.shape:
        raise ShapeError(f"center shapes differ: {batch.cen1.shape} vs {batch.cen2.shape}")
    cos = np.clip(cosine_matrix(batch.cen1, batch.cen2), -1.0, 1.0)
    off_diagonal = float(cos.sum() - np.trace(cos))
    return off_diagonal / (k * k - k)


def instance_negative_loss(batch: ContrastBatch) -> float:
    """
    Mean cross-view similarity over all non-matching high-confidence node pairs.

    Rows are unit or zero, so the inner product is the cosine.
    """
    _check_aligned(batch)
    h1 = np.concatenate(batch.blocks1)
    h2 = np.concatenate(batch.blocks2)
    m = h1.shape[0]
    if m < 2:
        raise LossError(f"instance negatives need at least 2 rows, got {m}")
    s1 = h1.sum(axis=0)
    s2 = h2.sum(axis=0)
    matched = float(np.einsum("ij,ij->", h1, h2))
    value = (float(s1 @ s2) - matched) / (m * m - m)
    return min(1.0, max(-1.0, value))


# =============================================================================
# TOTAL
# =============================================================================

def total_loss(l_pos: float, l_neg: float, alpha: float) -> LossBreakdown:
    """L = l_pos + alpha * l_neg."""
    if alpha < 0:
        raise LossError(f"alpha must be >= 0, got {alpha}")
    return LossBreakdown(l_pos=float(l_pos), l_neg=float(l_neg), alpha=float(alpha), total=float(l_pos + alpha * l_neg))


def compute_losses(batch: ContrastBatch, settings: LossSettings) -> LossBreakdown:
    """
    Forward losses for one contrast batch.

    Args:
        batch: Grouped high-confidence rows of both views
        settings: alpha, pair mode (same-node or all same-cluster pairs) and
            negative mode (center pairs or all non-matching instance pairs)

    Returns:
        LossBreakdown
    """
    if settings.pair_mode is PairMode.FULL_INTRA_CLUSTER:
        l_pos = full_intra_cluster_loss(batch)
    else:
        l_pos = positive_loss(batch)

    if settings.negative_mode is NegativeMode.INSTANCES:
        l_neg = instance_negative_loss(batch)
    else:
        l_neg = negative_loss(batch)

    bound = 4.0 * float(batch.sizes.max())
    if not (0.0 <= l_pos <= bound * (1.0 + FORM_AGREEMENT)):
        logger.warning(f"positive loss {l_pos:.6g} outside [0, {bound:g}]")
    return total_loss(l_pos, l_neg, settings.alpha)


# =============================================================================
# EXCEPTIONS
# =============================================================================

class LossError(CCGCError):
    """A loss is undefined for the given batch."""
    pass
