"""
CCGC Clustering
===============
K-means on the fused embedding, per-node confidence, global top-tau
high-confidence selection and per-view high-confidence cluster centers.

Version: 1.0.0
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from config import Defaults
from errors import CCGCError, ShapeError
from model import ViewPair

logger = logging.getLogger(__name__)

# Relative slack allowed when checking that inertia never increases
INERTIA_SLACK = 1e-9


# =============================================================================
# DATA CLASSES
# =============================================================================

@dataclass(eq=False)
class KMeansResult:
    """Output of one K-means run."""
    assignments: np.ndarray
    centers: np.ndarray
    inertia: float
    n_iter: int
    inertia_history: List[float] = field(default_factory=list)


@dataclass(eq=False)
class ClusterState:
    """Pseudo-labels, confidence and the high-confidence index set of one epoch."""
    assignments: np.ndarray
    centers: np.ndarray
    inertia: float
    confidence: np.ndarray
    high_conf_idx: np.ndarray
    tau: float
    forced_clusters: int = 0
    n_iter: int = 0

    @property
    def k(self) -> int:
        return int(self.centers.shape[0])

    @property
    def num_nodes(self) -> int:
        return int(self.assignments.shape[0])

    @property
    def h(self) -> np.ndarray:
        return self.high_conf_idx


@dataclass(eq=False)
class ContrastBatch:
    """High-confidence rows of both views grouped by pseudo-label."""
    blocks1: List[np.ndarray]
    blocks2: List[np.ndarray]
    members: List[np.ndarray]
    cen1: np.ndarray
    cen2: np.ndarray

    @property
    def k(self) -> int:
        return len(self.members)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([m.shape[0] for m in self.members], dtype=np.int64)

    @property
    def size(self) -> int:
        return int(self.sizes.sum())


# =============================================================================
# FUSION
# =============================================================================

def fuse_views(view: ViewPair) -> np.ndarray:
    """E = (E^v1 + E^v2) / 2."""
    if view.e1.shape != view.e2.shape:
        raise ShapeError(f"views differ in shape: {view.e1.shape} vs {view.e2.shape}")
    return 0.5 * (view.e1 + view.e2)


# =============================================================================
# K-MEANS
# =============================================================================

def _squared_distances(e: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """N x K matrix of squared Euclidean distances, one cluster at a time."""
    out = np.empty((e.shape[0], centers.shape[0]))
    for j, c in enumerate(centers):
        diff = e - c
        out[:, j] = np.einsum("ij,ij->i", diff, diff)
    return out


def _kmeans_pp(e: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: each new center drawn with probability proportional to D(x)^2."""
    n = e.shape[0]
    chosen = [int(rng.integers(n))]
    closest = np.einsum("ij,ij->i", e - e[chosen[0]], e - e[chosen[0]])
    for _ in range(1, k):
        total = closest.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            # every point coincides with a center; pick any unused index
            remaining = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(remaining))
        chosen.append(idx)
        diff = e - e[idx]
        closest = np.minimum(closest, np.einsum("ij,ij->i", diff, diff))
    return e[chosen].copy()


def _repair_empty(labels: np.ndarray, sq: np.ndarray, k: int) -> tuple:
    """
    Give every empty cluster the point farthest from its own center.

    Returns:
        (labels, repaired cluster count)
    """
    labels = labels.copy()
    own = sq[np.arange(labels.shape[0]), labels].copy()
    repaired = 0
    for j in range(k):
        counts = np.bincount(labels, minlength=k)
        if counts[j] > 0:
            continue
        donors = counts[labels] > 1
        candidates = np.where(donors, own, -np.inf)
        idx = int(np.argmax(candidates))
        labels[idx] = j
        own[idx] = 0.0
        repaired += 1
    return labels, repaired


def _centers(e: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    centers = np.empty((k, e.shape[1]))
    for j in range(k):
        centers[j] = e[labels == j].mean(axis=0)
    return centers


def kmeans(
    e: np.ndarray,
    k: int,
    seed: Union[int, Sequence[int]] = 0,
    max_iter: int = Defaults.KMEANS_MAX_ITER,
    tol: float = Defaults.KMEANS_TOL,
) -> KMeansResult:
    """
    Lloyd's algorithm with k-means++ seeding.

    Stops when the largest center shift falls below `tol` or after
    `max_iter` iterations. Empty clusters take the point farthest from its
    center. Inertia is recorded per iteration and never increases.

    Args:
        e: Embedding (N x d)
        k: Number of clusters, 1 <= k <= N
        seed: Seed for the k-means++ draws
        max_iter: Iteration cap
        tol: Center-shift tolerance

    Returns:
        KMeansResult
    """
    e = np.asarray(e, dtype=np.float64)
    n = e.shape[0]
    if k < 1:
        raise ClusteringError(f"k must be >= 1, got {k}")
    if k > n:
        raise ClusteringError(f"k={k} exceeds the number of points N={n}")

    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(e, k, rng)
    history: List[float] = []
    n_iter = 0

    for n_iter in range(1, max_iter + 1):
        sq = _squared_distances(e, centers)
        labels = np.argmin(sq, axis=1)
        inertia = float(sq[np.arange(n), labels].sum())
        _check_monotone(history, inertia)
        history.append(inertia)

        labels, _ = _repair_empty(labels, sq, k)
        updated = _centers(e, labels, k)
        shift = float(np.max(np.sqrt(np.einsum("ij,ij->i", updated - centers, updated - centers))))
        centers = updated
        if shift < tol:
            break

    sq = _squared_distances(e, centers)
    labels, repaired = _repair_empty(np.argmin(sq, axis=1), sq, k)
    if repaired:
        centers = _centers(e, labels, k)
    diff = e - centers[labels]
    inertia = float(np.einsum("ij,ij->", diff, diff))
    _check_monotone(history, inertia)
    history.append(inertia)

    logger.debug(f"K-means k={k} converged in {n_iter} iterations, inertia={inertia:.6g}")
    return KMeansResult(
        assignments=labels.astype(np.int64),
        centers=centers,
        inertia=inertia,
        n_iter=n_iter,
        inertia_history=history,
    )


def _check_monotone(history: List[float], inertia: float) -> None:
    if history and inertia > history[-1] + INERTIA_SLACK * max(1.0, history[-1]):
        raise ClusteringError(f"K-means inertia increased from {history[-1]!r} to {inertia!r}")


# =============================================================================
# CONFIDENCE & SELECTION
# =============================================================================

def confidence_scores(e: np.ndarray, assignments: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """CONF_i = exp(-||E_i - C_assign(i)||^2), in (0, 1]."""
    diff = e - centers[assignments]
    return np.exp(-np.einsum("ij,ij->i", diff, diff))


def top_count(n: int, tau: float) -> int:
    """ceil(tau * n), robust to floating error in the product."""
    return min(n, int(math.ceil(round(tau * n, 9))))


def select_high_confidence(
    scores: np.ndarray,
    assignments: np.ndarray,
    tau: float,
    k: Optional[int] = None,
) -> np.ndarray:
    """
    Global top-tau selection with a per-cluster survival guarantee.

    The ceil(tau * N) highest scores are kept, ties going to the lower node
    index. A cluster left without any member gets its single best node
    added.

    Args:
        scores: Confidence per node
        assignments: Pseudo-label per node
        tau: Fraction in (0, 1]
        k: Number of clusters (defaults to the labels present)

    Returns:
        Sorted ascending index array h
    """
    if not (0.0 < tau <= 1.0):
        raise ClusteringError(f"tau must be in (0, 1], got {tau}")
    scores = np.asarray(scores, dtype=np.float64)
    assignments = np.asarray(assignments, dtype=np.int64)
    n = scores.shape[0]

    order = np.argsort(-scores, kind="stable")
    keep = np.zeros(n, dtype=bool)
    keep[order[:top_count(n, tau)]] = True

    clusters = np.unique(assignments) if k is None else np.arange(k)
    for c in clusters:
        in_cluster = assignments == c
        if not in_cluster.any() or keep[in_cluster].any():
            continue
        # first node of this cluster in score order
        best = order[np.argmax(in_cluster[order])]
        keep[best] = True

    return np.flatnonzero(keep)


def cluster_state(
    e: np.ndarray,
    k: int,
    tau: float,
    seed: Union[int, Sequence[int]] = 0,
    max_iter: int = Defaults.KMEANS_MAX_ITER,
    tol: float = Defaults.KMEANS_TOL,
) -> ClusterState:
    """K-means, confidence and high-confidence selection in one step."""
    km = kmeans(e, k, seed=seed, max_iter=max_iter, tol=tol)
    conf = confidence_scores(e, km.assignments, km.centers)
    h = select_high_confidence(conf, km.assignments, tau, k=k)
    forced = int(h.shape[0] - top_count(e.shape[0], tau))
    if forced:
        logger.warning(f"{forced} cluster(s) kept alive by forcing their best node into h")
    return ClusterState(
        assignments=km.assignments,
        centers=km.centers,
        inertia=km.inertia,
        confidence=conf,
        high_conf_idx=h,
        tau=tau,
        forced_clusters=forced,
        n_iter=km.n_iter,
    )


# =============================================================================
# CONTRAST BATCH
# =============================================================================

def build_contrast_batch(view: ViewPair, state: ClusterState) -> ContrastBatch:
    """
    Group the high-confidence rows of both views by pseudo-label.

    Rows keep ascending node order inside each block, identically in both
    views. Centers are block row means per view.
    """
    if view.e1.shape[0] != state.num_nodes:
        raise ShapeError(f"view has {view.e1.shape[0]} rows, cluster state has {state.num_nodes}")
    h = state.high_conf_idx
    if h.size == 0:
        raise ClusteringError("high-confidence set is empty")

    labels_h = state.assignments[h]
    members, blocks1, blocks2 = [], [], []
    for p in range(state.k):
        idx = h[labels_h == p]
        if idx.size == 0:
            raise ClusteringError(f"cluster {p} has no high-confidence member")
        members.append(idx)
        blocks1.append(view.e1[idx])
        blocks2.append(view.e2[idx])

    cen1 = np.stack([b.mean(axis=0) for b in blocks1])
    cen2 = np.stack([b.mean(axis=0) for b in blocks2])
    return ContrastBatch(blocks1=blocks1, blocks2=blocks2, members=members, cen1=cen1, cen2=cen2)


# =============================================================================
# EXCEPTIONS
# =============================================================================

class ClusteringError(CCGCError):
    """K-means or high-confidence selection could not produce K clusters."""
    pass
