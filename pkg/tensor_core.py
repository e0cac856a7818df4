"""
CCGC Tensor Core
================
Dense and sparse matrix primitives shared by every other module.

Dense matrices are C-contiguous float64 numpy arrays. Symmetric sparse
matrices are scipy CSR matrices with sorted, duplicate-free indices.

Version: 1.0.0
"""

import logging
from typing import Optional

import numpy as np
import scipy.sparse as sp

from errors import ShapeError, CCGCError

logger = logging.getLogger(__name__)

# Rows with an l2 norm at or below this are treated as zero rows.
ZERO_NORM = 0.0


# =============================================================================
# CONSTRUCTION & VALIDATION
# =============================================================================

def as_dense(x, name: str = "matrix") -> np.ndarray:
    """Validate and convert to a finite 2-D float64 array."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got {arr.ndim}-D")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return arr


def sparse_from_triples(
    dim: int,
    rows: np.ndarray,
    cols: np.ndarray,
    values: np.ndarray,
    check_symmetric: bool = True,
) -> sp.csr_matrix:
    """
    Build a canonical symmetric sparse matrix from (row, col, value) triples.

    Args:
        dim: Matrix dimension
        rows, cols, values: Entry triples; (row, col) pairs must be unique
        check_symmetric: Reject inputs whose transpose differs

    Returns:
        CSR matrix with sorted indices
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)

    if not (rows.shape == cols.shape == values.shape):
        raise ShapeError("rows, cols and values must have equal length")
    if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= dim or cols.max() >= dim):
        raise ShapeError(f"entry index out of range for dim {dim}")
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("sparse values must be finite")

    keys = rows * dim + cols
    if np.unique(keys).size != keys.size:
        raise CCGCError("duplicate (row, col) entries in sparse triples")

    mat = sp.csr_matrix((values, (rows, cols)), shape=(dim, dim), dtype=np.float64)
    mat.sort_indices()

    if check_symmetric and (mat != mat.T).nnz:
        raise CCGCError("sparse matrix is not symmetric")
    return mat


def densify(s: sp.spmatrix) -> np.ndarray:
    """Dense copy of a sparse matrix."""
    return np.asarray(s.toarray(), dtype=np.float64)


def is_symmetric(s: sp.spmatrix, atol: float = 0.0) -> bool:
    """True if s equals its transpose within atol."""
    diff = (s - s.T).tocoo()
    return diff.nnz == 0 or float(np.max(np.abs(diff.data))) <= atol


# =============================================================================
# PRODUCTS
# =============================================================================

def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense matrix product with a dimension check."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError("matmul expects 2-D operands")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    return np.ascontiguousarray(a @ b)


def spmm(s: sp.spmatrix, m: np.ndarray) -> np.ndarray:
    """Sparse × dense product."""
    if s.shape[1] != m.shape[0]:
        raise ShapeError(f"spmm dimension mismatch: {s.shape} x {m.shape}")
    return np.ascontiguousarray(s @ m, dtype=np.float64)


# =============================================================================
# NORMALIZATION & SIMILARITY
# =============================================================================

def row_norms(m: np.ndarray) -> np.ndarray:
    """l2 norm of every row."""
    return np.sqrt(np.einsum("ij,ij->i", m, m))


def row_l2_normalize(m: np.ndarray, norms: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Scale every nonzero row to unit l2 norm. Zero rows stay zero.

    Args:
        m: Dense matrix
        norms: Precomputed row norms (optional)

    Returns:
        Row-normalized copy of m
    """
    if norms is None:
        norms = row_norms(m)
    safe = np.where(norms > ZERO_NORM, norms, 1.0)
    out = m / safe[:, None]
    out[norms <= ZERO_NORM] = 0.0
    return out


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; 0 when either vector is zero."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ShapeError(f"cosine length mismatch: {u.shape[0]} vs {v.shape[0]}")
    nu = float(np.sqrt(u @ u))
    nv = float(np.sqrt(v @ v))
    if nu <= ZERO_NORM or nv <= ZERO_NORM:
        return 0.0
    value = float(u @ v) / (nu * nv)
    return min(1.0, max(-1.0, value))


def cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine between rows of a and rows of b (zero rows give 0)."""
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"cosine_matrix width mismatch: {a.shape} vs {b.shape}")
    return row_l2_normalize(a) @ row_l2_normalize(b).T


# =============================================================================
# EXCEPTIONS
# =============================================================================

class NonFiniteError(CCGCError):
    """A matrix contains NaN or infinite entries."""
    pass
