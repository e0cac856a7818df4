"""Shared fixtures for the CCGC test suite."""

import numpy as np
import pytest

from graph_io import GraphDataset, make_sbm
from grad_engine import random_instance


@pytest.fixture
def two_node_graph() -> GraphDataset:
    return GraphDataset(
        features=np.eye(2),
        edges=np.array([[0, 1]], dtype=np.int64),
        num_classes=2,
        labels=np.array([0, 1], dtype=np.int64),
        name="pair",
    )


@pytest.fixture
def triangle_graph() -> GraphDataset:
    return GraphDataset(
        features=np.arange(6, dtype=np.float64).reshape(3, 2),
        edges=np.array([[0, 1], [0, 2], [1, 2]], dtype=np.int64),
        num_classes=1,
        labels=np.zeros(3, dtype=np.int64),
        name="triangle",
    )


@pytest.fixture
def sbm_dataset() -> GraphDataset:
    """Two well separated blocks of 30 nodes."""
    return make_sbm(seed=0, sizes=(30, 30), p_in=0.9, p_out=0.05, feature_dim=16, feature_noise=0.5)


@pytest.fixture
def tiny_instance():
    return random_instance(seed=3, n=12, d_in=6, d_out=3, k=2)
