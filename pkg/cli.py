"""
CCGC Command Line
=================
python cli.py <subcommand> [flags]

Subcommands: train, eval, ablate, gradcheck, stats, sweep, make-sbm.

Exit codes: 0 success, 1 runtime error, 2 usage or configuration error.
Configuration precedence: built-in defaults < --config JSON < explicit flags.

Version: 1.0.0
"""

import argparse
import json
import logging
import os
import sys
import threading
from dataclasses import fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from config import (
    ABLATION_VARIANTS,
    Activation,
    AblationVariant,
    Defaults,
    MaskMode,
    PairMode,
    TrainConfig,
    ordered_variants,
    parse_enum,
)
from errors import CCGCError, ConfigError
from grad_engine import finite_diff_check, random_instance
from graph_io import dataset_stats, load_dataset, make_sbm, read_labels, save_dataset
from metrics import METRIC_NAMES, evaluate
from trainer import RunAbortedError, RunReport, run_ablation, train_multi

logger = logging.getLogger(__name__)

# Parameters the sweep subcommand can vary
SWEEP_PARAMS = {
    "tau": float,
    "alpha": float,
    "filter_layers": int,
    "lr": float,
}

_output_lock = threading.Lock()


# =============================================================================
# ARGUMENT TYPES
# =============================================================================

def _number(kind, text: str):
    try:
        return kind(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected {kind.__name__}, got {text!r}")


def _tau(text: str) -> float:
    value = _number(float, text)
    if not (0.0 < value <= 1.0):
        raise argparse.ArgumentTypeError(f"tau must be in (0, 1], got {value}")
    return value


def _unit_interval(text: str) -> float:
    value = _number(float, text)
    if not (0.0 <= value <= 1.0):
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {value}")
    return value


def _teleport(text: str) -> float:
    value = _number(float, text)
    if not (0.0 < value <= 1.0):
        raise argparse.ArgumentTypeError(f"teleport must be in (0, 1], got {value}")
    return value


def _positive_float(text: str) -> float:
    value = _number(float, text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _nonneg_float(text: str) -> float:
    value = _number(float, text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_int(text: str) -> int:
    value = _number(int, text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    value = _number(int, text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _on_off(text: str) -> bool:
    value = text.strip().lower()
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError(f"expected on or off, got {text!r}")
    return value == "on"


def _int_list(text: str) -> tuple:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if not parts:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers")
    return tuple(_positive_int(p) for p in parts)


def parse_seeds(text: str) -> tuple:
    """'0..9' (inclusive), '1,4,7' or '3'."""
    text = text.strip()
    if ".." in text:
        start, _, end = text.partition("..")
        lo, hi = _nonneg_int(start), _nonneg_int(end)
        if hi < lo:
            raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
        return tuple(range(lo, hi + 1))
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("no seeds given")
    return tuple(_nonneg_int(p.strip()) for p in parts)


def _enum_type(enum_cls, name: str):
    def convert(text: str):
        try:
            return parse_enum(enum_cls, text, name)
        except ConfigError as e:
            raise argparse.ArgumentTypeError(str(e))
    convert.__name__ = name
    return convert


def parse_variants(text: str) -> List[AblationVariant]:
    convert = _enum_type(AblationVariant, "ablation")
    variants = [convert(p.strip()) for p in text.split(",") if p.strip()]
    if not variants:
        raise argparse.ArgumentTypeError("no variants given")
    return variants


def parse_sweep(text: str):
    """'tau=0.3,0.5,0.6' -> ('tau', [0.3, 0.5, 0.6])."""
    name, sep, values = text.partition("=")
    name = name.strip().replace("-", "_")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected PARAM=V1,V2,..., got {text!r}")
    if name not in SWEEP_PARAMS:
        raise argparse.ArgumentTypeError(f"cannot sweep {name!r} (choose from: {', '.join(SWEEP_PARAMS)})")
    grid = [_number(SWEEP_PARAMS[name], v.strip()) for v in values.split(",") if v.strip()]
    if not grid:
        raise argparse.ArgumentTypeError(f"empty grid for {name}")
    return name, grid


# =============================================================================
# PARSER
# =============================================================================

def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    """Training flags. Every default is None so --config values survive."""
    g = parser.add_argument_group("training")
    g.add_argument("--config", help="JSON file with TrainConfig fields")
    g.add_argument("--epochs", type=_nonneg_int, help="training epochs (default 400)")
    g.add_argument("--tau", type=_tau, help="high-confidence fraction in (0, 1] (default 0.6)")
    g.add_argument("--alpha", type=_nonneg_float, help="negative loss weight (default 1.0)")
    g.add_argument("--filter-layers", "--t", dest="filter_layers", type=_nonneg_int,
                   help="Laplacian filter layers (default 2)")
    g.add_argument("--k", type=_positive_int, help="number of clusters (default: dataset K)")
    g.add_argument("--hidden-dims", type=_int_list, help="encoder layer widths, e.g. 500 or 256,64 (default 500)")
    g.add_argument("--activation", type=_enum_type(Activation, "activation"), help="linear|relu|tanh (default linear)")
    g.add_argument("--bias", type=_on_off, metavar="on|off", help="use bias vectors (default off)")
    g.add_argument("--lr", type=_positive_float, help="Adam learning rate (default 1e-3)")
    g.add_argument("--beta1", type=_unit_interval, help="Adam beta1 (default 0.9)")
    g.add_argument("--beta2", type=_unit_interval, help="Adam beta2 (default 0.999)")
    g.add_argument("--adam-eps", type=_positive_float, help="Adam epsilon (default 1e-8)")
    g.add_argument("--weight-decay", type=_nonneg_float, help="L2 weight decay (default 0)")
    g.add_argument("--clip-norm", type=_positive_float, help="global gradient norm clip (default off)")
    g.add_argument("--stage1-epochs", type=_nonneg_int, help="stage-1 epochs (default 25%% of epochs)")
    g.add_argument("--kmeans-iters", type=_positive_int, help=f"K-means iteration cap (default {Defaults.KMEANS_MAX_ITER})")
    g.add_argument("--kmeans-tol", type=_nonneg_float, help=f"K-means center-shift tolerance (default {Defaults.KMEANS_TOL})")
    g.add_argument("--kmeans-every", type=_positive_int, help="re-cluster every n epochs (default 1)")
    g.add_argument("--pair-mode", type=_enum_type(PairMode, "pair_mode"),
                   help="same-node (alias eq9)|full-intra-cluster (default same-node)")
    g.add_argument("--detach-centers", action="store_const", const=True, help="no gradient through centers")
    g.add_argument("--seeds", type=parse_seeds, help="seeds: 0..9, 1,2,3 or 7 (default 0..9)")
    g.add_argument("--ablation", type=_enum_type(AblationVariant, "ablation"),
                   help="full|wo_dps|wo_rns|drop-edges|add-edges|diffusion|mask-features (default full)")
    g.add_argument("--aug-rate", type=_unit_interval, help="augmentation rate (default 0.2)")
    g.add_argument("--teleport", type=_teleport, help="diffusion teleport (default 0.2)")
    g.add_argument("--mask-mode", type=_enum_type(MaskMode, "mask_mode"), help="column|entry (default column)")
    g.add_argument("--dump-dir", help="directory for divergence dumps")
    g.add_argument("--threads", type=_positive_int, help="worker threads for seeds (capped by CCGC_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccgc", description="Cluster-guided contrastive graph clustering")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train and evaluate over seeds")
    p.add_argument("--data", required=True, help="dataset bundle directory")
    p.add_argument("--out", default="report.json", help="report path (default report.json)")
    p.add_argument("--embeddings", help="CSV path for the final fused embeddings")
    p.add_argument("--curves", help="directory for per-seed curve CSVs")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a prediction against ground truth")
    p.add_argument("--pred", required=True, help="predicted labels, one per line")
    p.add_argument("--truth", required=True, help="true labels, one per line")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run ablation variants")
    p.add_argument("--data", required=True, help="dataset bundle directory")
    p.add_argument("--variants", type=parse_variants, help="comma list (default: all)")
    p.add_argument("--out-dir", default="ablation", help="output directory (default ablation)")
    _add_train_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--instances", type=_positive_int, default=50, help="random instances (default 50)")
    p.add_argument("--seed", type=_nonneg_int, default=0, help="first instance seed (default 0)")
    p.add_argument("--n", type=_positive_int, default=12, help="nodes per instance (default 12)")
    p.add_argument("--d-in", type=_positive_int, default=6, help="input dimension (default 6)")
    p.add_argument("--d-out", type=_positive_int, default=3, help="output dimension (default 3)")
    p.add_argument("--epsilon", type=_positive_float, default=Defaults.GRADCHECK_EPSILON,
                   help=f"finite-difference step (default {Defaults.GRADCHECK_EPSILON})")
    p.add_argument("--tolerance", type=_positive_float, default=Defaults.GRADCHECK_TOLERANCE,
                   help=f"max relative error allowed (default {Defaults.GRADCHECK_TOLERANCE})")
    p.add_argument("--pair-mode", type=_enum_type(PairMode, "pair_mode"), default=PairMode.SAME_NODE)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("stats", help="dataset statistics")
    p.add_argument("--data", required=True, help="dataset bundle directory")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sweep", help="hyper-parameter sensitivity sweep")
    p.add_argument("--data", required=True, help="dataset bundle directory")
    p.add_argument("--sweep", required=True, type=parse_sweep, help="PARAM=V1,V2,... over tau|alpha|filter_layers|lr")
    p.add_argument("--out-dir", default="sweep", help="output directory (default sweep)")
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("make-sbm", help="write a planted-partition dataset bundle")
    p.add_argument("--out", required=True, help="bundle directory")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--sizes", type=_int_list, default=(30, 30), help="nodes per block (default 30,30)")
    p.add_argument("--p-in", type=_unit_interval, default=0.9)
    p.add_argument("--p-out", type=_unit_interval, default=0.05)
    p.add_argument("--feature-dim", type=_positive_int, default=16)
    p.add_argument("--feature-noise", type=_nonneg_float, default=0.5)
    p.add_argument("--name", default="sbm")
    p.set_defaults(func=cmd_make_sbm)
    return parser


# =============================================================================
# HELPERS
# =============================================================================

def resolve_config(args: argparse.Namespace) -> TrainConfig:
    """Defaults, then --config JSON, then explicit flags."""
    data: Dict[str, Any] = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            loaded = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}", field="config")
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must hold a JSON object", field="config")
        data.update(loaded)
    for f in fields(TrainConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            data[f.name] = value
    try:
        return TrainConfig.from_dict(data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid configuration: {e}")


def write_json(path: Path, data: Any) -> None:
    with _output_lock:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, indent=2) + "\n")


def write_frame(path: Path, frame: pd.DataFrame) -> None:
    with _output_lock:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)


def _write_embeddings(path: Path, report: RunReport) -> None:
    for run in report.runs:
        target = path if len(report.runs) == 1 else path.with_name(f"{path.stem}_seed{run.seed}{path.suffix}")
        columns = [f"e{j}" for j in range(run.embedding.shape[1])]
        write_frame(target, pd.DataFrame(run.embedding, columns=columns))
        logger.info(f"Embeddings written to {target}")


def _summary_row(report: RunReport) -> Dict[str, Any]:
    row: Dict[str, Any] = {}
    for name in METRIC_NAMES:
        stats = report.aggregate.get(name, {})
        row[f"{name}_mean"] = stats.get("mean")
        row[f"{name}_std"] = stats.get("std")
    return row


# =============================================================================
# SUBCOMMANDS
# =============================================================================

def cmd_train(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    dataset = load_dataset(args.data)
    out = Path(args.out)
    try:
        report = train_multi(dataset, cfg, threads=args.threads)
    except RunAbortedError as e:
        write_json(out, e.report.to_dict())
        raise

    write_json(out, report.to_dict())
    logger.info(f"Report written to {out}")
    if args.embeddings:
        _write_embeddings(Path(args.embeddings), report)
    if args.curves:
        for run in report.runs:
            write_frame(Path(args.curves) / f"curves_seed{run.seed}.csv", run.curves.to_frame())
    for name in METRIC_NAMES:
        if name in report.aggregate:
            print(f"{name.upper()}: {report.cell(name)}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    report = evaluate(read_labels(args.pred), read_labels(args.truth))
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def ablation_table(reports: Dict[AblationVariant, RunReport]) -> pd.DataFrame:
    """Metrics as rows, variants as columns in table order ("Ours" last)."""
    columns = [v for v in ordered_variants() if v.id in reports]
    table = {
        v.label: [reports[v.id].cell(name) for name in METRIC_NAMES]
        for v in columns
    }
    return pd.DataFrame(table, index=[m.upper() for m in METRIC_NAMES])


def cmd_ablate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    dataset = load_dataset(args.data)
    out_dir = Path(args.out_dir)
    variants = args.variants or [v.id for v in ordered_variants()]

    reports: Dict[AblationVariant, RunReport] = {}
    for variant in variants:
        logger.info(f"Ablation variant {ABLATION_VARIANTS[variant].label}")
        report = run_ablation(dataset, cfg, variant, threads=args.threads)
        reports[variant] = report
        write_json(out_dir / f"{variant.value}.json", report.to_dict())

    table = ablation_table(reports)
    with _output_lock:
        out_dir.mkdir(parents=True, exist_ok=True)
        table.to_csv(out_dir / "ablation_table.csv", index_label="metric")
    print(table.to_string())
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    worst = 0.0
    for i in range(args.instances):
        seed = args.seed + i
        k = 2 + (i % 2)
        instance = random_instance(seed, n=max(args.n, k), d_in=args.d_in, d_out=args.d_out, k=k,
                                   pair_mode=args.pair_mode)
        error = finite_diff_check(instance.params, instance.x_smooth, instance.state,
                                  instance.settings, epsilon=args.epsilon)
        logger.debug(f"instance {seed} (K={k}): max relative error {error:.3e}")
        worst = max(worst, error)
    passed = worst <= args.tolerance
    print(f"max relative error over {args.instances} instances: {worst:.3e} "
          f"({'PASS' if passed else 'FAIL'} at tolerance {args.tolerance:g})")
    return 0 if passed else 1


def cmd_stats(args: argparse.Namespace) -> int:
    print(json.dumps(dataset_stats(load_dataset(args.data)).to_dict(), indent=2))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    dataset = load_dataset(args.data)
    param, grid = args.sweep
    out_dir = Path(args.out_dir)

    rows = []
    for value in grid:
        logger.info(f"Sweep {param}={value}")
        point = cfg.with_overrides(**{param: value})
        report = train_multi(dataset, point, threads=args.threads)
        write_json(out_dir / f"{param}_{value}.json", report.to_dict())
        rows.append({"param": param, "value": value, **_summary_row(report)})

    summary = pd.DataFrame(rows)
    write_frame(out_dir / "summary.csv", summary)
    print(summary.to_string(index=False))
    return 0


def cmd_make_sbm(args: argparse.Namespace) -> int:
    dataset = make_sbm(args.seed, args.sizes, args.p_in, args.p_out,
                       args.feature_dim, args.feature_noise, name=args.name)
    root = save_dataset(dataset, args.out)
    logger.info(f"SBM bundle written to {root} (N={dataset.num_nodes}, E={dataset.num_edges})")
    return 0


# =============================================================================
# ENTRY POINT
# =============================================================================

def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    else:
        level = getattr(logging, os.getenv("CCGC_LOG_LEVEL", "INFO").upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging(args.verbose, args.quiet)
    try:
        return args.func(args)
    except ConfigError as e:
        where = f"{e.flag}: " if e.flag else ""
        print(f"ccgc: error: {where}{e}", file=sys.stderr)
        return 2
    except CCGCError as e:
        print(f"ccgc: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
