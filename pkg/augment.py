"""
CCGC Graph Augmentations
========================
Edge dropping, edge adding, personalized-PageRank diffusion and feature
masking. Used only by the ablation variants, where both encoders share
parameters and the second view is built from an augmented input.

Version: 1.0.0
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy import linalg

from config import AugmentKind, Defaults, MaskMode
from errors import CCGCError, ConfigError, ShapeError
from graph_io import GraphDataset
from smoothing import build_operator, renormalized_adjacency, smooth
from tensor_core import spmm

logger = logging.getLogger(__name__)

# Pair counts up to this are enumerated; larger graphs use rejection sampling
ENUMERATE_MAX_PAIRS = 5_000_000

# Neumann series stops early once the tail bound drops below this
SERIES_TARGET = 1e-12


@dataclass(frozen=True)
class AugmentSpec:
    """Which augmentation to apply to the second view, and how strongly."""
    kind: AugmentKind
    rate: float = 0.2
    seed: int = 0
    teleport: float = 0.2
    mask_mode: MaskMode = MaskMode.COLUMN

    def __post_init__(self):
        if not (0.0 <= self.rate <= 1.0):
            raise ConfigError(f"augmentation rate must be in [0, 1], got {self.rate}", field="aug_rate")
        if not (0.0 < self.teleport <= 1.0):
            raise ConfigError(f"teleport must be in (0, 1], got {self.teleport}", field="teleport")


def _check_rate(rate: float) -> None:
    if not (0.0 <= rate <= 1.0):
        raise ConfigError(f"augmentation rate must be in [0, 1], got {rate}", field="aug_rate")


# =============================================================================
# EDGE PERTURBATION
# =============================================================================

def drop_edges(dataset: GraphDataset, rate: float, seed: int) -> GraphDataset:
    """Remove each undirected edge independently with probability `rate`."""
    _check_rate(rate)
    rng = np.random.default_rng(seed)
    keep = rng.random(dataset.num_edges) >= rate
    logger.debug(f"drop_edges kept {int(keep.sum())}/{dataset.num_edges} edges")
    return dataset.with_edges(dataset.edges[keep])


def add_edges(dataset: GraphDataset, rate: float, seed: int) -> GraphDataset:
    """
    Add ceil(rate * |E|) distinct new edges drawn uniformly from absent pairs.

    Raises:
        AugmentError: Not enough absent pairs (e.g. the graph is complete)
    """
    _check_rate(rate)
    n = dataset.num_nodes
    e = dataset.num_edges
    n_new = int(math.ceil(round(rate * e, 9)))
    total_pairs = n * (n - 1) // 2
    absent = total_pairs - e
    if rate > 0 and absent == 0:
        raise AugmentError(f"graph is complete ({e} edges on {n} nodes); no edge can be added")
    if n_new > absent:
        raise AugmentError(f"cannot add {n_new} edges: only {absent} absent pairs")
    if n_new == 0:
        return dataset.with_edges(dataset.edges)

    rng = np.random.default_rng(seed)
    existing = dataset.edges[:, 0] * n + dataset.edges[:, 1]

    if total_pairs <= ENUMERATE_MAX_PAIRS:
        lo, hi = np.triu_indices(n, k=1)
        keys = lo * n + hi
        candidates = keys[~np.isin(keys, existing)]
        chosen = np.sort(rng.choice(candidates, size=n_new, replace=False))
    else:
        taken = set(existing.tolist())
        picked = []
        while len(picked) < n_new:
            u, v = rng.integers(n, size=2)
            if u == v:
                continue
            key = int(min(u, v) * n + max(u, v))
            if key in taken:
                continue
            taken.add(key)
            picked.append(key)
        chosen = np.sort(np.array(picked, dtype=np.int64))

    added = np.stack([chosen // n, chosen % n], axis=1)
    merged = np.concatenate([dataset.edges, added])
    order = np.lexsort((merged[:, 1], merged[:, 0]))
    logger.debug(f"add_edges added {n_new} edges to {e}")
    return dataset.with_edges(merged[order])


# =============================================================================
# DIFFUSION
# =============================================================================

@dataclass(frozen=True, eq=False)
class DiffusionOperator:
    """
    S = t (I - (1 - t) A_sym)^-1, either held densely or applied as a
    truncated Neumann series sum_k t (1 - t)^k A_sym^k.
    """
    teleport: float
    adjacency: sp.csr_matrix
    dense: Optional[np.ndarray] = None
    terms: int = 0
    tail_bound: float = 0.0

    @property
    def method(self) -> str:
        return "dense" if self.dense is not None else "neumann"

    def apply(self, x: np.ndarray) -> np.ndarray:
        if x.shape[0] != self.adjacency.shape[0]:
            raise ShapeError(f"diffusion operator has dim {self.adjacency.shape[0]}, input has {x.shape[0]} rows")
        if self.dense is not None:
            return self.dense @ x
        t = self.teleport
        term = np.array(x, dtype=np.float64)
        out = t * term
        for k in range(1, self.terms + 1):
            term = spmm(self.adjacency, term)
            out = out + t * (1.0 - t) ** k * term
        return out

    def matrix(self) -> np.ndarray:
        """Dense S (materialized from the series when needed)."""
        if self.dense is not None:
            return self.dense
        return self.apply(np.eye(self.adjacency.shape[0]))


def diffusion(
    dataset: GraphDataset,
    teleport: float,
    dense_max_nodes: int = Defaults.DENSE_DIFFUSION_MAX_NODES,
    max_terms: int = Defaults.NEUMANN_MAX_TERMS,
) -> DiffusionOperator:
    """
    Personalized-PageRank diffusion over the renormalized adjacency.

    Args:
        dataset: Graph
        teleport: Teleport probability t in (0, 1]
        dense_max_nodes: Largest N solved densely
        max_terms: Series length cap beyond that size

    Returns:
        DiffusionOperator
    """
    if not (0.0 < teleport <= 1.0):
        raise ConfigError(f"teleport must be in (0, 1], got {teleport}", field="teleport")
    n = dataset.num_nodes
    a_sym = renormalized_adjacency(n, dataset.edges)

    if n <= dense_max_nodes:
        system = np.eye(n) - (1.0 - teleport) * a_sym.toarray()
        try:
            inverse = linalg.solve(system, np.eye(n), assume_a="sym")
        except linalg.LinAlgError as exc:
            raise AugmentError(f"diffusion system is singular: {exc}")
        return DiffusionOperator(teleport=teleport, adjacency=a_sym, dense=teleport * inverse)

    decay = 1.0 - teleport
    if decay == 0.0:
        terms = 0
    else:
        terms = min(max_terms, max(0, int(math.ceil(math.log(SERIES_TARGET) / math.log(decay))) - 1))
    tail = decay ** (terms + 1)
    logger.warning(f"Diffusion on {n} nodes uses a {terms}-term series (tail bound {tail:.2e})")
    return DiffusionOperator(teleport=teleport, adjacency=a_sym, terms=terms, tail_bound=tail)


# =============================================================================
# FEATURE MASKING
# =============================================================================

def mask_features(
    dataset: GraphDataset,
    rate: float,
    seed: int,
    mode: MaskMode = MaskMode.COLUMN,
) -> GraphDataset:
    """Zero whole feature columns (or single entries) with probability `rate`."""
    _check_rate(rate)
    rng = np.random.default_rng(seed)
    x = dataset.features
    if mode is MaskMode.ENTRY:
        keep = rng.random(x.shape) >= rate
    else:
        keep = (rng.random(x.shape[1]) >= rate)[None, :]
    return dataset.with_features(np.where(keep, x, 0.0))


# =============================================================================
# SECOND-VIEW INPUT
# =============================================================================

def augmented_view_input(dataset: GraphDataset, spec: AugmentSpec, filter_layers: int) -> np.ndarray:
    """
    Input of the second encoder for an augmentation variant.

    Edge perturbations and masking are smoothed with the same t-layer filter
    as the first view. Diffusion replaces the filter with S.
    """
    if spec.kind is AugmentKind.DROP_EDGES:
        augmented = drop_edges(dataset, spec.rate, spec.seed)
        return smooth(build_operator(augmented, filter_layers), augmented.features)
    if spec.kind is AugmentKind.ADD_EDGES:
        augmented = add_edges(dataset, spec.rate, spec.seed)
        return smooth(build_operator(augmented, filter_layers), augmented.features)
    if spec.kind is AugmentKind.MASK_FEATURES:
        masked = mask_features(dataset, spec.rate, spec.seed, spec.mask_mode)
        return smooth(build_operator(dataset, filter_layers), masked.features)
    if spec.kind is AugmentKind.DIFFUSION:
        return diffusion(dataset, spec.teleport).apply(np.asarray(dataset.features))
    raise AugmentError(f"unknown augmentation {spec.kind!r}")


# =============================================================================
# EXCEPTIONS
# =============================================================================

class AugmentError(CCGCError):
    """An augmentation cannot be applied to this graph."""
    pass
