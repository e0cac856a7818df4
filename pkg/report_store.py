"""
CCGC Report Store
=================
Read-only access to the artifacts written by the command line: run reports
(JSON), sweep summaries and ablation tables (CSV). Feeds the report viewer.

Version: 1.0.0
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

from config import METRIC_LABELS
from errors import CCGCError
from metrics import METRIC_NAMES
from trainer import format_mean_std

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ("schema_version", "config", "dataset", "runs", "aggregate")

TABLE_FILES = ("summary.csv", "ablation_table.csv")


# =============================================================================
# DATA CLASSES
# =============================================================================

@dataclass
class ReportEntry:
    """One discovered run report."""
    path: Path
    name: str
    variant: str
    dataset: str
    n_runs: int
    acc_mean: Optional[float] = None

    @classmethod
    def from_report(cls, path: Path, report: Dict[str, Any]) -> "ReportEntry":
        acc = report["aggregate"].get("acc", {}).get("mean")
        return cls(
            path=path,
            name=path.stem,
            variant=report.get("variant", {}).get("label", ""),
            dataset=report["dataset"].get("name", ""),
            n_runs=len(report["runs"]),
            acc_mean=acc,
        )


# =============================================================================
# ACCESS FUNCTIONS
# =============================================================================

def load_report(path: Union[str, Path]) -> Dict[str, Any]:
    """Parse a run report, checking the keys the viewer relies on."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ReportError(f"cannot read {path}: {e}", path=str(path))
    if not isinstance(data, dict):
        raise ReportError(f"{path.name} is not a run report", path=str(path))
    missing = [key for key in REQUIRED_KEYS if key not in data]
    if missing:
        raise ReportError(f"{path.name} is not a run report (missing {', '.join(missing)})", path=str(path))
    return data


def list_reports(directory: Union[str, Path]) -> List[ReportEntry]:
    """Every run report under a directory, sorted by path."""
    root = Path(directory)
    if not root.is_dir():
        return []
    entries = []
    for path in sorted(root.rglob("*.json")):
        try:
            entries.append(ReportEntry.from_report(path, load_report(path)))
        except ReportError as e:
            logger.warning(f"Skipping {path}: {e}")
    return entries


def list_tables(directory: Union[str, Path]) -> List[Path]:
    """Sweep summaries and ablation tables under a directory."""
    root = Path(directory)
    if not root.is_dir():
        return []
    return sorted(p for p in root.rglob("*.csv") if p.name in TABLE_FILES)


def load_table(path: Union[str, Path]) -> pd.DataFrame:
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ReportError(f"cannot read table {path}: {e}", path=str(path))


def seed_table(report: Dict[str, Any]) -> pd.DataFrame:
    """One row per seed with its four scores."""
    rows = []
    for run in report["runs"]:
        row = {"seed": run["seed"]}
        scores = run.get("metrics") or {}
        for name in METRIC_NAMES:
            row[METRIC_LABELS[name]] = scores.get(name)
        row["final_inertia"] = run.get("final_inertia")
        row["epochs"] = len(run.get("curves", {}).get("total", []))
        if "seconds" in run:
            row["seconds"] = run["seconds"]
        rows.append(row)
    return pd.DataFrame(rows)


def aggregate_table(reports: Dict[str, Dict[str, Any]]) -> pd.DataFrame:
    """Mean±std cells (percent) for each named report."""
    rows = []
    for name, report in reports.items():
        row = {
            "report": name,
            "variant": report.get("variant", {}).get("label", ""),
            "dataset": report["dataset"].get("name", ""),
            "seeds": len(report["runs"]),
        }
        for metric in METRIC_NAMES:
            stats = report["aggregate"].get(metric)
            row[METRIC_LABELS[metric]] = format_mean_std(stats["mean"], stats["std"]) if stats else "n/a"
        rows.append(row)
    return pd.DataFrame(rows)


def curve_frame(report: Dict[str, Any], seed: int) -> pd.DataFrame:
    """Per-epoch losses and high-confidence set size of one seed."""
    for run in report["runs"]:
        if run["seed"] == seed:
            frame = pd.DataFrame(run.get("curves", {}))
            frame.insert(0, "epoch", range(len(frame)))
            return frame
    raise ReportError(f"seed {seed} not in report")


# =============================================================================
# STATISTICS FUNCTIONS
# =============================================================================

def get_report_stats(entries: List[ReportEntry]) -> dict:
    """Counts for the overview cards."""
    scored = [e.acc_mean for e in entries if e.acc_mean is not None]
    return {
        "total_reports": len(entries),
        "total_runs": sum(e.n_runs for e in entries),
        "datasets": len({e.dataset for e in entries}),
        "best_acc": max(scored) if scored else None,
        "by_variant": {
            variant: len([e for e in entries if e.variant == variant])
            for variant in sorted({e.variant for e in entries})
        },
    }


# =============================================================================
# EXCEPTIONS
# =============================================================================

class ReportError(CCGCError):
    """A file is not a readable run report."""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message)
        self.path = path
