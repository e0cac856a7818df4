"""
CCGC Graph Datasets
===================
Load, validate, save and describe graph dataset bundles, and draw
planted-partition (SBM) fixtures.

Bundle layout (one directory):
    features.csv  N lines of D comma-separated floats
    edges.tsv     one undirected edge per line, "u<TAB>v", 0-indexed
    labels.txt    optional, N lines with one integer each
    meta.json     optional, {"num_classes": K, "name": "..."}

Version: 1.0.0
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import scipy.sparse as sp

from errors import CCGCError

logger = logging.getLogger(__name__)

FEATURES_FILE = "features.csv"
EDGES_FILE = "edges.tsv"
LABELS_FILE = "labels.txt"
META_FILE = "meta.json"


# =============================================================================
# DATA CLASSES
# =============================================================================

@dataclass(frozen=True, eq=False)
class GraphDataset:
    """An attributed undirected graph with optional ground truth."""
    features: np.ndarray
    edges: np.ndarray
    num_classes: int
    labels: Optional[np.ndarray] = None
    name: str = ""
    dropped_self_loops: int = 0
    dropped_duplicates: int = 0

    def __post_init__(self):
        n = self.features.shape[0]
        if self.edges.size and (self.edges.min() < 0 or self.edges.max() >= n):
            raise DatasetError(f"edge endpoint out of range for {n} nodes")
        if self.edges.size and np.any(self.edges[:, 0] == self.edges[:, 1]):
            raise DatasetError("self-loops may not be stored in the edge list")
        if self.labels is not None:
            if self.labels.shape != (n,):
                raise DatasetError(f"expected {n} labels, got {self.labels.shape[0]}")
            if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
                raise DatasetError(f"labels must lie in [0, {self.num_classes})")
        for arr in (self.features, self.edges, self.labels):
            if arr is not None:
                arr.setflags(write=False)

    @property
    def num_nodes(self) -> int:
        return int(self.features.shape[0])

    @property
    def num_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency without self-loops."""
        n = self.num_nodes
        u, v = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        data = np.ones(rows.shape[0], dtype=np.float64)
        adj = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        adj.sort_indices()
        return adj

    def with_edges(self, edges: np.ndarray) -> "GraphDataset":
        """Copy with a replacement (already canonical) edge list."""
        return GraphDataset(
            features=self.features,
            edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
            num_classes=self.num_classes,
            labels=self.labels,
            name=self.name,
        )

    def with_features(self, features: np.ndarray) -> "GraphDataset":
        """Copy with replacement features."""
        return GraphDataset(
            features=np.array(features, dtype=np.float64),
            edges=self.edges,
            num_classes=self.num_classes,
            labels=self.labels,
            name=self.name,
        )


@dataclass
class DatasetStats:
    """Dataset statistics in the benchmark-table layout."""
    name: str
    type: str
    samples: int
    dimension: int
    edges: int
    classes: int
    class_histogram: List[int] = field(default_factory=list)
    isolated_nodes: int = 0
    mean_degree: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "type": self.type,
            "samples": self.samples,
            "dimension": self.dimension,
            "edges": self.edges,
            "classes": self.classes,
            "class_histogram": list(self.class_histogram),
            "isolated_nodes": self.isolated_nodes,
            "mean_degree": self.mean_degree,
        }


# =============================================================================
# EDGE CANONICALIZATION
# =============================================================================

def canonical_edges(pairs: np.ndarray) -> tuple[np.ndarray, int, int]:
    """
    Canonicalize an undirected edge list.

    Args:
        pairs: (E, 2) integer array, any orientation, may repeat

    Returns:
        Tuple of (sorted unique edges with min id first, self-loops dropped,
        duplicates dropped)
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    loops = pairs[:, 0] == pairs[:, 1]
    n_loops = int(loops.sum())
    pairs = pairs[~loops]

    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    canon = np.stack([lo, hi], axis=1) if pairs.size else np.empty((0, 2), dtype=np.int64)
    unique = np.unique(canon, axis=0) if canon.size else canon
    n_duplicates = int(canon.shape[0] - unique.shape[0])
    return unique.astype(np.int64), n_loops, n_duplicates


# =============================================================================
# LOADING
# =============================================================================

def _read_table(path: Path, sep: str) -> pd.DataFrame:
    try:
        return pd.read_csv(path, sep=sep, header=None, dtype=str,
                           keep_default_na=False, skip_blank_lines=True,
                           skipinitialspace=True)
    except pd.errors.EmptyDataError:
        return pd.DataFrame()
    except pd.errors.ParserError as e:
        raise DatasetError(f"malformed table: {e}", path=str(path))


def _cell_value(cell: str) -> float:
    try:
        return float(cell)
    except (TypeError, ValueError):
        return np.nan


def _numeric(frame: pd.DataFrame, path: Path, integer: bool = False) -> np.ndarray:
    """Convert a string table to numbers, reporting the first bad cell."""
    # correctly rounded parse: %.17g text reads back bit-exact
    values = np.array(
        [[_cell_value(cell) for cell in row] for row in frame.to_numpy()],
        dtype=np.float64,
    ).reshape(frame.shape)
    bad = ~np.isfinite(values)
    if integer:
        bad |= np.isfinite(values) & (values != np.round(values))
    if bad.any():
        row, col = (int(i) for i in np.argwhere(bad)[0])
        cell = frame.iat[row, col]
        kind = "integer" if integer else "numeric"
        raise DatasetError(
            f"non-{kind} value {cell!r} at line {row + 1}, column {col + 1}",
            path=str(path), row=row + 1, col=col + 1,
        )
    return values


def read_labels(path: Union[str, Path]) -> np.ndarray:
    """One integer label per line."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"label file not found: {path}", path=str(path))
    frame = _read_table(path, sep=",")
    if frame.empty:
        return np.empty(0, dtype=np.int64)
    if frame.shape[1] != 1:
        raise DatasetError(f"{path.name} must hold one integer per line", path=str(path))
    return _numeric(frame, path, integer=True).astype(np.int64).ravel()


def load_dataset(directory: Union[str, Path]) -> GraphDataset:
    """
    Load and validate a dataset bundle.

    Args:
        directory: Bundle directory

    Returns:
        Validated GraphDataset with a canonical edge list
    """
    root = Path(directory)
    features_path = root / FEATURES_FILE
    edges_path = root / EDGES_FILE
    labels_path = root / LABELS_FILE
    meta_path = root / META_FILE

    for required in (features_path, edges_path):
        if not required.is_file():
            raise DatasetError(f"missing required file {required.name}", path=str(required))

    feature_frame = _read_table(features_path, sep=",")
    if feature_frame.empty:
        raise DatasetError("features.csv is empty", path=str(features_path))
    features = _numeric(feature_frame, features_path)
    n = features.shape[0]

    edge_frame = _read_table(edges_path, sep=r"\s+")
    if edge_frame.empty:
        raw_edges = np.empty((0, 2), dtype=np.int64)
    else:
        if edge_frame.shape[1] != 2:
            raise DatasetError(
                f"edges.tsv must have 2 columns, found {edge_frame.shape[1]}", path=str(edges_path)
            )
        raw_edges = _numeric(edge_frame, edges_path, integer=True).astype(np.int64)
        out_of_range = (raw_edges < 0) | (raw_edges >= n)
        if out_of_range.any():
            row, col = (int(i) for i in np.argwhere(out_of_range)[0])
            raise DatasetError(
                f"edge endpoint {raw_edges[row, col]} out of range [0, {n}) at line {row + 1}",
                path=str(edges_path), row=row + 1, col=col + 1,
            )

    labels = None
    if labels_path.is_file():
        labels = read_labels(labels_path)
        if labels.shape[0] != n:
            raise DatasetError(
                f"labels.txt must have {n} lines of one integer, found {labels.shape[0]}", path=str(labels_path)
            )

    meta: Dict[str, Any] = {}
    if meta_path.is_file():
        try:
            meta = json.loads(meta_path.read_text())
        except json.JSONDecodeError as e:
            raise DatasetError(f"invalid meta.json: {e}", path=str(meta_path))

    if "num_classes" in meta:
        num_classes = int(meta["num_classes"])
    elif labels is not None and labels.size:
        num_classes = int(labels.max()) + 1
    else:
        raise DatasetError("number of classes unknown: provide labels.txt or meta.json",
                           path=str(root))

    if labels is not None and labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        bad = int(np.argmax((labels < 0) | (labels >= num_classes)))
        raise DatasetError(
            f"label {labels[bad]} outside [0, {num_classes}) at line {bad + 1}",
            path=str(labels_path), row=bad + 1, col=1,
        )

    edges, n_loops, n_dup = canonical_edges(raw_edges)
    if n_loops:
        logger.warning(f"{root.name}: dropped {n_loops} self-loop(s) from edges.tsv")
    if n_dup:
        logger.warning(f"{root.name}: deduplicated {n_dup} repeated edge(s)")

    dataset = GraphDataset(
        features=features,
        edges=edges,
        num_classes=num_classes,
        labels=labels,
        name=str(meta.get("name", root.name)),
        dropped_self_loops=n_loops,
        dropped_duplicates=n_dup,
    )
    logger.info(
        f"Loaded {dataset.name}: N={dataset.num_nodes} D={dataset.num_features} "
        f"E={dataset.num_edges} K={dataset.num_classes}"
    )
    return dataset


def dataset_from_arrays(
    features: np.ndarray,
    adjacency,
    labels: Optional[np.ndarray] = None,
    name: str = "",
    num_classes: Optional[int] = None,
) -> GraphDataset:
    """Build a dataset from in-memory arrays (dense or sparse adjacency)."""
    coo = sp.coo_matrix(adjacency)
    pairs = np.stack([coo.row, coo.col], axis=1)[coo.data != 0]
    edges, n_loops, n_dup = canonical_edges(pairs)
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64).ravel()
    if num_classes is None:
        if labels is None:
            raise DatasetError("num_classes is required when labels are absent")
        num_classes = int(labels.max()) + 1
    return GraphDataset(
        features=np.array(features, dtype=np.float64),
        edges=edges,
        num_classes=num_classes,
        labels=labels,
        name=name,
        dropped_self_loops=n_loops,
        # symmetric adjacencies list each edge twice; that is not duplication
        dropped_duplicates=max(0, n_dup - edges.shape[0]),
    )


# =============================================================================
# SAVING
# =============================================================================

def save_dataset(dataset: GraphDataset, directory: Union[str, Path]) -> Path:
    """Write a dataset bundle that load_dataset reads back exactly."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)

    np.savetxt(root / FEATURES_FILE, dataset.features, fmt="%.17g", delimiter=",")
    np.savetxt(root / EDGES_FILE, dataset.edges, fmt="%d", delimiter="\t")
    if dataset.labels is not None:
        np.savetxt(root / LABELS_FILE, dataset.labels, fmt="%d")
    meta = {"num_classes": dataset.num_classes, "name": dataset.name}
    (root / META_FILE).write_text(json.dumps(meta, indent=2) + "\n")
    return root


# =============================================================================
# STATISTICS
# =============================================================================

def dataset_stats(dataset: GraphDataset) -> DatasetStats:
    """Summary statistics of a dataset."""
    n = dataset.num_nodes
    degree = np.bincount(dataset.edges.ravel(), minlength=n) if dataset.num_edges else np.zeros(n, int)
    histogram: List[int] = []
    if dataset.labels is not None:
        histogram = np.bincount(dataset.labels, minlength=dataset.num_classes).tolist()
    return DatasetStats(
        name=dataset.name,
        type="Graph",
        samples=n,
        dimension=dataset.num_features,
        edges=dataset.num_edges,
        classes=dataset.num_classes,
        class_histogram=histogram,
        isolated_nodes=int(np.sum(degree == 0)),
        mean_degree=float(degree.mean()) if n else 0.0,
    )


# =============================================================================
# SYNTHETIC FIXTURES
# =============================================================================

def make_sbm(
    seed: int,
    sizes: Sequence[int],
    p_in: float,
    p_out: float,
    feature_dim: int,
    feature_noise: float,
    name: str = "sbm",
) -> GraphDataset:
    """
    Planted-partition graph with noisy block-indicator features.

    Args:
        seed: Random seed
        sizes: Nodes per block
        p_in: Within-block edge probability
        p_out: Between-block edge probability
        feature_dim: Feature dimension; column c indicates block c mod B
        feature_noise: Std of additive Gaussian feature noise

    Returns:
        GraphDataset with labels = block ids
    """
    for label, p in (("p_in", p_in), ("p_out", p_out)):
        if not (0.0 <= p <= 1.0):
            raise DatasetError(f"{label} must be in [0, 1], got {p}")
    if not sizes or any(s < 1 for s in sizes):
        raise DatasetError("block sizes must be positive")
    if feature_dim < 1 or feature_noise < 0:
        raise DatasetError("feature_dim must be >= 1 and feature_noise >= 0")

    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(len(sizes)), sizes).astype(np.int64)
    n = labels.shape[0]

    iu, ju = np.triu_indices(n, k=1)
    same = labels[iu] == labels[ju]
    prob = np.where(same, p_in, p_out)
    keep = rng.random(iu.shape[0]) < prob
    edges = np.stack([iu[keep], ju[keep]], axis=1).astype(np.int64)

    indicator = (np.arange(feature_dim)[None, :] % len(sizes)) == labels[:, None]
    features = indicator.astype(np.float64) + feature_noise * rng.standard_normal((n, feature_dim))

    return GraphDataset(
        features=features,
        edges=edges,
        num_classes=len(sizes),
        labels=labels,
        name=name,
    )


# =============================================================================
# EXCEPTIONS
# =============================================================================

class DatasetError(CCGCError):
    """Invalid or unreadable dataset bundle."""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        row: Optional[int] = None,
        col: Optional[int] = None,
    ):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path
        self.row = row
        self.col = col
