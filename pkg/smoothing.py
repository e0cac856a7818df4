"""
CCGC Attribute Smoothing
========================
Renormalized symmetric propagation operator D^-1/2 (A + I) D^-1/2 and the
t-layer Laplacian filter X~ = (I - L~)^t X.

Version: 1.0.0
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from errors import ShapeError, ConfigError
from graph_io import GraphDataset
from tensor_core import spmm

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PropagationOperator:
    """I - L~ as a sparse symmetric matrix, applied `layers` times."""
    matrix: sp.csr_matrix
    layers: int

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])


def renormalized_adjacency(num_nodes: int, edges: np.ndarray) -> sp.csr_matrix:
    """
    Symmetrically normalized adjacency with self-loops.

    Args:
        num_nodes: Number of nodes N
        edges: (E, 2) canonical undirected edge list without self-loops

    Returns:
        CSR matrix D^-1/2 (A + I) D^-1/2, where D is the degree matrix of A + I
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    u, v = edges[:, 0], edges[:, 1]
    diag = np.arange(num_nodes, dtype=np.int64)
    rows = np.concatenate([u, v, diag])
    cols = np.concatenate([v, u, diag])
    data = np.ones(rows.shape[0], dtype=np.float64)
    a_hat = sp.csr_matrix((data, (rows, cols)), shape=(num_nodes, num_nodes))

    # every node has the self-loop, so degrees are >= 1
    degree = np.asarray(a_hat.sum(axis=1)).ravel()
    d_inv_sqrt = sp.diags(1.0 / np.sqrt(degree))
    op = (d_inv_sqrt @ a_hat @ d_inv_sqrt).tocsr()
    op.sort_indices()
    return op


def build_operator(dataset: GraphDataset, t: int) -> PropagationOperator:
    """Propagation operator of a dataset for a t-layer filter."""
    if t < 0:
        raise ConfigError(f"filter layers must be >= 0, got {t}", field="filter_layers")
    matrix = renormalized_adjacency(dataset.num_nodes, dataset.edges)
    return PropagationOperator(matrix=matrix, layers=int(t))


def smooth(op: PropagationOperator, x: np.ndarray) -> np.ndarray:
    """Apply the operator `op.layers` times; t = 0 returns x unchanged."""
    if op.dim != x.shape[0]:
        raise ShapeError(f"operator dim {op.dim} does not match {x.shape[0]} rows")
    out = np.array(x, dtype=np.float64)
    for _ in range(op.layers):
        out = spmm(op.matrix, out)
    logger.debug(f"Smoothed {x.shape} with t={op.layers}")
    return out
