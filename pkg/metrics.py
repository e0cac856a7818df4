"""
CCGC Metrics
============
Clustering evaluation: Hungarian-matched accuracy, NMI, ARI and macro-F1.

Version: 1.0.0
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import adjusted_rand_score, f1_score, normalized_mutual_info_score
from sklearn.metrics.cluster import contingency_matrix

from errors import CCGCError, ShapeError

logger = logging.getLogger(__name__)

METRIC_NAMES = ("acc", "nmi", "ari", "f1")

# Label assigned to predicted clusters left without a class
UNMATCHED = -1


@dataclass(eq=False)
class MetricReport:
    """Four clustering scores plus the matching they were computed under."""
    acc: float
    nmi: float
    ari: float
    f1: float
    contingency: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int64))
    mapping: Dict[int, int] = field(default_factory=dict)

    def scores(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}

    def to_dict(self) -> Dict[str, Any]:
        return {
            **self.scores(),
            "contingency": self.contingency.tolist(),
            "mapping": {str(k): v for k, v in sorted(self.mapping.items())},
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MetricReport":
        return cls(
            acc=float(data["acc"]),
            nmi=float(data["nmi"]),
            ari=float(data["ari"]),
            f1=float(data["f1"]),
            contingency=np.asarray(data.get("contingency", []), dtype=np.int64),
            mapping={int(k): int(v) for k, v in data.get("mapping", {}).items()},
        )


def _labels(pred, truth) -> Tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ShapeError(f"prediction has {pred.shape[0]} labels, truth has {truth.shape[0]}")
    for name, arr in (("pred", pred), ("truth", truth)):
        if arr.size and (not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0):
            raise MetricError(f"{name} labels must be nonnegative integers")
    return pred.astype(np.int64), truth.astype(np.int64)


# =============================================================================
# MATCHING
# =============================================================================

def pred_by_true_contingency(pred, truth) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Count matrix with predicted clusters as rows and true classes as columns.

    Returns:
        (matrix, predicted ids, true ids) with ids sorted ascending
    """
    pred, truth = _labels(pred, truth)
    table = contingency_matrix(truth, pred).T
    return np.asarray(table, dtype=np.int64), np.unique(pred), np.unique(truth)


def clustering_accuracy(pred, truth) -> Tuple[float, Dict[int, int]]:
    """
    Accuracy under the best one-to-one cluster-to-class assignment.

    The contingency matrix is padded with zeros to square before the
    Hungarian assignment. Predicted clusters matched to padding map to -1.

    Returns:
        (acc, mapping predicted id -> true id)
    """
    pred, truth = _labels(pred, truth)
    if pred.size == 0:
        return 0.0, {}
    table, pred_ids, true_ids = pred_by_true_contingency(pred, truth)
    size = max(table.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: table.shape[0], : table.shape[1]] = table

    rows, cols = linear_sum_assignment(padded, maximize=True)
    mapping: Dict[int, int] = {}
    matched = 0
    for r, c in zip(rows, cols):
        if r >= len(pred_ids):
            continue
        if c < len(true_ids):
            mapping[int(pred_ids[r])] = int(true_ids[c])
            matched += int(padded[r, c])
        else:
            mapping[int(pred_ids[r])] = UNMATCHED
    return matched / pred.shape[0], mapping


def apply_mapping(pred, mapping: Dict[int, int]) -> np.ndarray:
    """Relabel predictions; unknown clusters become -1."""
    pred = np.asarray(pred, dtype=np.int64)
    return np.array([mapping.get(int(p), UNMATCHED) for p in pred], dtype=np.int64)


# =============================================================================
# SCORES
# =============================================================================

def nmi(pred, truth) -> float:
    """Normalized mutual information, arithmetic-mean normalization."""
    pred, truth = _labels(pred, truth)
    return float(normalized_mutual_info_score(truth, pred, average_method="arithmetic"))


def ari(pred, truth) -> float:
    """Adjusted Rand index."""
    pred, truth = _labels(pred, truth)
    return float(adjusted_rand_score(truth, pred))


def macro_f1(pred, truth, mapping: Dict[int, int] = None) -> float:
    """Unweighted mean F1 over true classes after the accuracy mapping."""
    pred, truth = _labels(pred, truth)
    if mapping is None:
        _, mapping = clustering_accuracy(pred, truth)
    mapped = apply_mapping(pred, mapping)
    classes = np.unique(truth)
    return float(f1_score(truth, mapped, labels=classes, average="macro", zero_division=0))


def evaluate(pred, truth) -> MetricReport:
    """All four metrics for one prediction."""
    pred, truth = _labels(pred, truth)
    acc, mapping = clustering_accuracy(pred, truth)
    table, _, _ = pred_by_true_contingency(pred, truth)
    return MetricReport(
        acc=acc,
        nmi=nmi(pred, truth),
        ari=ari(pred, truth),
        f1=macro_f1(pred, truth, mapping),
        contingency=table,
        mapping=mapping,
    )


# =============================================================================
# EXCEPTIONS
# =============================================================================

class MetricError(CCGCError):
    """Labels cannot be evaluated."""
    pass
