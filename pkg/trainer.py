"""
CCGC Trainer
============
Two-stage training loop, multi-seed orchestration, ablation runs and the
self-describing run report.

Stage 1 (default: first quarter of the epochs) trains with every node
selected and same-node positives. Stage 2 switches on top-tau selection
and the cluster-guided positives.

Version: 1.0.0
"""

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from augment import AugmentSpec, augmented_view_input
from clustering import ClusterState, cluster_state, fuse_views
from config import (
    RECONSTRUCTION_NOTES,
    AblationVariant,
    Defaults,
    PairMode,
    TrainConfig,
    env_threads,
    parse_enum,
)
from errors import CCGCError, ConfigError
from grad_engine import backward
from graph_io import DatasetStats, GraphDataset, dataset_stats
from losses import LossSettings
from metrics import METRIC_NAMES, MetricReport, evaluate
from model import EncoderParams, forward, init_params
from optim import AdamState, adam_step
from smoothing import build_operator, smooth

logger = logging.getLogger(__name__)


# =============================================================================
# RESULT TYPES
# =============================================================================

@dataclass
class Curves:
    """Per-epoch training trace."""
    stage: List[int] = field(default_factory=list)
    l_pos: List[float] = field(default_factory=list)
    l_neg: List[float] = field(default_factory=list)
    total: List[float] = field(default_factory=list)
    h_size: List[int] = field(default_factory=list)
    forced: List[int] = field(default_factory=list)

    def append(self, stage: int, losses, state: ClusterState) -> None:
        self.stage.append(stage)
        self.l_pos.append(losses.l_pos)
        self.l_neg.append(losses.l_neg)
        self.total.append(losses.total)
        self.h_size.append(int(state.high_conf_idx.shape[0]))
        self.forced.append(int(state.forced_clusters))

    def to_dict(self) -> Dict[str, list]:
        return {
            "stage": list(self.stage),
            "l_pos": list(self.l_pos),
            "l_neg": list(self.l_neg),
            "total": list(self.total),
            "h_size": list(self.h_size),
            "forced": list(self.forced),
        }

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.to_dict())
        frame.insert(0, "epoch", range(len(frame)))
        return frame


@dataclass(eq=False)
class TrainResult:
    """Everything one seed produces."""
    seed: int
    params: EncoderParams
    state: ClusterState
    predictions: np.ndarray
    embedding: np.ndarray
    curves: Curves
    metrics: Optional[MetricReport] = None
    final_inertia: float = 0.0
    seconds: float = 0.0

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        data = {
            "seed": self.seed,
            "metrics": self.metrics.to_dict() if self.metrics else None,
            "final_inertia": self.final_inertia,
            "predictions": self.predictions.tolist(),
            "curves": self.curves.to_dict(),
        }
        if include_timing:
            data["seconds"] = self.seconds
        return data


def aggregate(runs: List[TrainResult]) -> Dict[str, Dict[str, float]]:
    """Mean and population std of every metric over runs with labels."""
    scored = [r.metrics for r in runs if r.metrics is not None]
    if not scored:
        return {}
    out = {}
    for name in METRIC_NAMES:
        values = np.array([getattr(m, name) for m in scored])
        out[name] = {"mean": float(np.mean(values)), "std": float(np.std(values))}
    return out


def format_mean_std(mean: float, std: float) -> str:
    """Percent cell such as 73.88±1.20."""
    return f"{mean * 100:.2f}±{std * 100:.2f}"


@dataclass(eq=False)
class RunReport:
    """Per-seed results of one configuration plus their aggregate."""
    config: TrainConfig
    dataset: DatasetStats
    runs: List[TrainResult] = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def aggregate(self) -> Dict[str, Dict[str, float]]:
        return aggregate(self.runs)

    @property
    def variant(self):
        return self.config.variant

    def cell(self, metric: str) -> str:
        stats = self.aggregate.get(metric)
        return format_mean_std(stats["mean"], stats["std"]) if stats else "n/a"

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        """JSON form; without timing it is identical across repeated runs."""
        data = {
            "schema_version": Defaults.REPORT_SCHEMA_VERSION,
            "variant": {"id": self.variant.id.value, "label": self.variant.label},
            "reconstruction_notes": list(RECONSTRUCTION_NOTES),
            "config": self.config.to_dict(),
            "dataset": self.dataset.to_dict(),
            "runs": [r.to_dict(include_timing) for r in self.runs],
            "aggregate": self.aggregate,
        }
        if include_timing:
            data["wall_clock_seconds"] = self.wall_clock
        return data


# =============================================================================
# SINGLE RUN
# =============================================================================

def _param_norms(params: EncoderParams) -> List[float]:
    return [float(np.linalg.norm(t)) for t in params.tensors()]


def _diverged(cfg: TrainConfig, seed: int, epoch: int, stage: int, params, losses=None, state=None):
    dump = {
        "seed": seed,
        "epoch": epoch,
        "stage": stage,
        "losses": losses.to_dict() if losses else None,
        "h_size": int(state.high_conf_idx.shape[0]) if state is not None else None,
        "param_norms": _param_norms(params),
        "config": cfg.to_dict(),
    }
    if cfg.dump_dir:
        path = Path(cfg.dump_dir) / f"diverged_seed{seed}_epoch{epoch}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(dump, indent=2, default=str))
        logger.error(f"Divergence dump written to {path}")
    return TrainingDivergedError(f"non-finite values at seed {seed}, epoch {epoch}", epoch=epoch, dump=dump)


def resolve_k(dataset: GraphDataset, cfg: TrainConfig) -> int:
    k = cfg.k if cfg.k is not None else dataset.num_classes
    if k > dataset.num_nodes:
        raise ConfigError(f"k={k} exceeds the number of nodes {dataset.num_nodes}", field="k")
    return k


def train_one(dataset: GraphDataset, cfg: TrainConfig, seed: int) -> TrainResult:
    """
    Train one seed and cluster the final fused embedding.

    Args:
        dataset: Graph with attributes (labels optional)
        cfg: Resolved configuration
        seed: Run seed

    Returns:
        TrainResult (metrics set when the dataset has labels)
    """
    cfg.validate()
    started = time.perf_counter()
    k = resolve_k(dataset, cfg)

    x = smooth(build_operator(dataset, cfg.filter_layers), dataset.features)
    augment = cfg.augment_kind
    x2 = None
    if augment is not None:
        spec = AugmentSpec(kind=augment, rate=cfg.aug_rate, seed=seed, teleport=cfg.teleport, mask_mode=cfg.mask_mode)
        x2 = augmented_view_input(dataset, spec, cfg.filter_layers)

    params = init_params(
        seed, dataset.num_features, cfg.hidden_dims,
        activation=cfg.activation, bias=cfg.bias, shared=augment is not None,
    )
    adam = AdamState.from_config(cfg)
    settings = LossSettings.from_config(cfg)
    stage1_settings = replace(settings, pair_mode=PairMode.SAME_NODE)
    stage1_epochs = cfg.resolved_stage1_epochs
    curves = Curves()
    state: Optional[ClusterState] = None

    for epoch in range(cfg.epochs):
        stage = 1 if (epoch < stage1_epochs or cfg.disable_dps) else 2
        tau = 1.0 if stage == 1 else cfg.tau

        view = forward(params, x, x2)
        fused = fuse_views(view)
        if not np.all(np.isfinite(fused)):
            raise _diverged(cfg, seed, epoch, stage, params, state=state)

        refresh = state is None or epoch % cfg.kmeans_every == 0 or state.tau != tau
        if refresh:
            state = cluster_state(fused, k, tau, seed=(seed, epoch), max_iter=cfg.kmeans_iters, tol=cfg.kmeans_tol)

        losses, grads = backward(params, x, state, stage1_settings if stage == 1 else settings, x2, view=view)
        if not np.isfinite(losses.total) or not grads.is_finite():
            raise _diverged(cfg, seed, epoch, stage, params, losses, state)

        adam_step(params, grads, adam)
        curves.append(stage, losses, state)
        logger.debug(
            f"seed={seed} epoch={epoch} stage={stage} l_pos={losses.l_pos:.6f} "
            f"l_neg={losses.l_neg:.6f} total={losses.total:.6f} |h|={state.high_conf_idx.shape[0]}"
        )

    view = forward(params, x, x2)
    embedding = fuse_views(view)
    if not np.all(np.isfinite(embedding)):
        raise _diverged(cfg, seed, cfg.epochs, 2, params, state=state)
    final = cluster_state(embedding, k, 1.0, seed=(seed, cfg.epochs), max_iter=cfg.kmeans_iters, tol=cfg.kmeans_tol)

    metrics = evaluate(final.assignments, dataset.labels) if dataset.labels is not None else None
    seconds = time.perf_counter() - started
    if metrics:
        logger.info(
            f"seed {seed}: ACC={metrics.acc:.4f} NMI={metrics.nmi:.4f} "
            f"ARI={metrics.ari:.4f} F1={metrics.f1:.4f} ({seconds:.1f}s)"
        )
    else:
        logger.info(f"seed {seed}: finished in {seconds:.1f}s (no labels)")

    return TrainResult(
        seed=seed,
        params=params,
        state=final,
        predictions=final.assignments,
        embedding=embedding,
        curves=curves,
        metrics=metrics,
        final_inertia=final.inertia,
        seconds=seconds,
    )


# =============================================================================
# MULTI-SEED & ABLATION
# =============================================================================

def worker_count(requested: Optional[int], n_seeds: int) -> int:
    """Threads to use: requested (default 1), capped by CCGC_THREADS and the seed count."""
    threads = requested or 1
    cap = env_threads()
    if cap is not None:
        threads = min(threads, cap)
    return max(1, min(threads, n_seeds))


def train_multi(dataset: GraphDataset, cfg: TrainConfig, threads: Optional[int] = None) -> RunReport:
    """
    Train every seed in cfg.seeds and aggregate the metrics.

    Seeds may run on worker threads; runs are reported in seed-list order.

    Raises:
        RunAbortedError: A run failed; carries the report of the runs that finished
    """
    cfg.validate()
    if cfg.disable_dps:
        logger.warning(f"tau={cfg.tau} is ignored by the {cfg.ablation.value} variant")
    if cfg.detach_centers:
        logger.warning("centers are detached; the negative loss contributes no gradient")

    report = RunReport(config=cfg, dataset=dataset_stats(dataset))
    workers = worker_count(threads, len(cfg.seeds))
    logger.info(f"Training {len(cfg.seeds)} seed(s) [{cfg.variant.label}] on {workers} thread(s)")
    started = time.perf_counter()

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [(seed, pool.submit(train_one, dataset, cfg, seed)) for seed in cfg.seeds]
        failure = None
        for seed, future in futures:
            if failure is not None and future.cancel():
                continue
            try:
                report.runs.append(future.result())
            except Exception as exc:
                if failure is None:
                    failure = (seed, exc)

    report.wall_clock = time.perf_counter() - started
    if failure:
        seed, exc = failure
        logger.error(f"Run for seed {seed} failed: {exc}")
        raise RunAbortedError(f"seed {seed} failed: {exc}", report=report, cause=exc)

    for name, stats in report.aggregate.items():
        logger.info(f"{name.upper()} {format_mean_std(stats['mean'], stats['std'])}")
    return report


def run_ablation(dataset: GraphDataset, cfg: TrainConfig, variant, threads: Optional[int] = None) -> RunReport:
    """Train the configuration with an ablation variant applied."""
    variant = parse_enum(AblationVariant, variant, "ablation")
    return train_multi(dataset, cfg.with_overrides(ablation=variant), threads=threads)


# =============================================================================
# EXCEPTIONS
# =============================================================================

class TrainingDivergedError(CCGCError):
    """A loss, gradient or embedding became non-finite."""

    def __init__(self, message: str, epoch: int, dump: Dict[str, Any]):
        super().__init__(message)
        self.epoch = epoch
        self.dump = dump


class RunAbortedError(CCGCError):
    """A multi-seed run stopped early."""

    def __init__(self, message: str, report: RunReport, cause: Optional[Exception] = None):
        super().__init__(message)
        self.report = report
        self.cause = cause
