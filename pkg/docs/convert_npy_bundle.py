"""
Convert an .npy Graph Dataset
=============================
Turns the `<name>_feat.npy` / `<name>_adj.npy` / `<name>_label.npy` triple
used across deep graph clustering codebases into the text bundle read by
`graph_io.load_dataset` (features.csv, edges.tsv, labels.txt, meta.json).

    python docs/convert_npy_bundle.py data/cora --name cora --out bundles/cora

Run from the repository root.

Version: 1.0.0
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from errors import CCGCError  # noqa: E402
from graph_io import dataset_from_arrays, dataset_stats, save_dataset  # noqa: E402

logger = logging.getLogger(__name__)


def convert(source: Path, name: str, out: Path) -> Path:
    features = np.load(source / f"{name}_feat.npy", allow_pickle=False)
    adjacency = np.load(source / f"{name}_adj.npy", allow_pickle=False)
    label_path = source / f"{name}_label.npy"
    labels = np.load(label_path, allow_pickle=False) if label_path.exists() else None
    if labels is not None:
        # remap arbitrary ids to 0..K-1
        _, labels = np.unique(labels, return_inverse=True)

    dataset = dataset_from_arrays(features, adjacency, labels, name=name)
    if dataset.dropped_self_loops:
        logger.warning(f"Dropped {dataset.dropped_self_loops} self-loop(s) from {name}_adj.npy")
    written = save_dataset(dataset, out)
    stats = dataset_stats(dataset)
    logger.info(f"Wrote {written}: N={stats.samples}, D={stats.dimension}, E={stats.edges}, K={stats.classes}")
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Convert an .npy graph dataset to a CCGC bundle")
    parser.add_argument("source", help="directory holding <name>_feat.npy, <name>_adj.npy, <name>_label.npy")
    parser.add_argument("--name", required=True, help="dataset name prefix")
    parser.add_argument("--out", required=True, help="bundle directory to write")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    try:
        convert(Path(args.source), args.name, Path(args.out))
    except (OSError, ValueError, CCGCError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
