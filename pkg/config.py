"""
CCGC Configuration
==================
Enumerations, resolved training configuration, ablation variant registry
and system-wide limits.

Version: 1.0.0
"""

import os
from dataclasses import dataclass, asdict, fields, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

from errors import ConfigError

# =============================================================================
# SYSTEM LIMITS & DEFAULTS
# =============================================================================

class Defaults:
    """Limits and numerical constants."""
    KMEANS_MAX_ITER = 300
    KMEANS_TOL = 1e-6

    # Diffusion: dense inverse up to this many nodes, Neumann series beyond
    DENSE_DIFFUSION_MAX_NODES = 10_000
    NEUMANN_MAX_TERMS = 64

    GRADCHECK_EPSILON = 1e-5
    GRADCHECK_TOLERANCE = 1e-6
    GRADCHECK_SCALE_FLOOR = 1e-2

    # Fraction of epochs spent in stage 1 when --stage1-epochs is unset
    STAGE1_FRACTION = 0.25

    REPORT_SCHEMA_VERSION = 1


def env_threads() -> Optional[int]:
    """Worker cap from CCGC_THREADS, if set."""
    value = os.getenv("CCGC_THREADS")
    if not value:
        return None
    try:
        threads = int(value)
    except ValueError:
        raise ConfigError(f"CCGC_THREADS must be an integer, got {value!r}", field="threads")
    return max(1, threads)


def env_report_dir() -> str:
    """Default directory browsed by the report viewer."""
    return os.getenv("CCGC_REPORT_DIR", ".")


# =============================================================================
# REPORT VIEWER THEME
# =============================================================================

COLORS = {
    "primary": "#1D4E89",
    "primary_light": "#3A7BC8",
    "surface": "#F7F9FC",
    "border": "#DDE3EC",
    "text_primary": "#1B2430",
    "text_secondary": "#5B6776",
    "success": "#2E8B57",
    "warning": "#D98E04",
    "error": "#C0392B",
}

# Curve colors per training stage
STAGE_COLORS = {
    1: "#8A9BB0",
    2: "#1D4E89",
}

METRIC_LABELS = {
    "acc": "ACC",
    "nmi": "NMI",
    "ari": "ARI",
    "f1": "F1",
}


# =============================================================================
# ENUMERATIONS
# =============================================================================

class Activation(Enum):
    LINEAR = "linear"
    RELU = "relu"
    TANH = "tanh"


class PairMode(Enum):
    """How cross-view positive pairs are formed inside a cluster block."""
    SAME_NODE = "same-node"
    FULL_INTRA_CLUSTER = "full-intra-cluster"


class NegativeMode(Enum):
    """Negative construction: high-confidence centers or all instance pairs."""
    CENTERS = "centers"
    INSTANCES = "instances"


class AugmentKind(Enum):
    DROP_EDGES = "drop-edges"
    ADD_EDGES = "add-edges"
    DIFFUSION = "diffusion"
    MASK_FEATURES = "mask-features"


class MaskMode(Enum):
    COLUMN = "column"
    ENTRY = "entry"


class AblationVariant(Enum):
    FULL = "full"
    WO_DPS = "wo_dps"
    WO_RNS = "wo_rns"
    DROP_EDGES = "drop_edges"
    ADD_EDGES = "add_edges"
    DIFFUSION = "diffusion"
    MASK_FEATURES = "mask_features"


# Legacy spellings still accepted on the command line and in config files
ENUM_ALIASES = {
    "eq9": PairMode.SAME_NODE,
}


def parse_enum(enum_cls, value: Any, field_name: str):
    """Coerce a string (either '-' or '_' separated) into an enum member."""
    if isinstance(value, enum_cls):
        return value
    text = str(value).strip().lower().replace("-", "_")
    alias = ENUM_ALIASES.get(text)
    if isinstance(alias, enum_cls):
        return alias
    for member in enum_cls:
        if text in (member.value.replace("-", "_"), member.name.lower()):
            return member
    choices = ", ".join(m.value for m in enum_cls)
    raise ConfigError(f"invalid {field_name} {value!r} (choose from: {choices})", field=field_name)


# =============================================================================
# ABLATION VARIANTS
# =============================================================================

@dataclass(frozen=True)
class VariantConfig:
    """How an ablation variant changes the full method."""
    id: AblationVariant
    label: str
    description: str
    column: int
    disable_dps: bool = False
    disable_rns: bool = False
    augment: Optional[AugmentKind] = None


ABLATION_VARIANTS: Dict[AblationVariant, VariantConfig] = {
    AblationVariant.WO_DPS: VariantConfig(
        id=AblationVariant.WO_DPS,
        label="(w/o) Positive",
        description="Positives are all same-node cross-view pairs, no confidence filtering",
        column=0,
        disable_dps=True,
    ),
    AblationVariant.WO_RNS: VariantConfig(
        id=AblationVariant.WO_RNS,
        label="(w/o) Negative",
        description="Negatives are all cross-view non-matching node pairs",
        column=1,
        disable_rns=True,
    ),
    AblationVariant.DROP_EDGES: VariantConfig(
        id=AblationVariant.DROP_EDGES,
        label="Drop Edges",
        description="Shared encoders; second view drops edges",
        column=2,
        augment=AugmentKind.DROP_EDGES,
    ),
    AblationVariant.ADD_EDGES: VariantConfig(
        id=AblationVariant.ADD_EDGES,
        label="Add Edges",
        description="Shared encoders; second view adds random edges",
        column=3,
        augment=AugmentKind.ADD_EDGES,
    ),
    AblationVariant.DIFFUSION: VariantConfig(
        id=AblationVariant.DIFFUSION,
        label="Diffusion",
        description="Shared encoders; second view uses PPR diffusion",
        column=4,
        augment=AugmentKind.DIFFUSION,
    ),
    AblationVariant.MASK_FEATURES: VariantConfig(
        id=AblationVariant.MASK_FEATURES,
        label="Mask Feature",
        description="Shared encoders; second view masks feature dimensions",
        column=5,
        augment=AugmentKind.MASK_FEATURES,
    ),
    AblationVariant.FULL: VariantConfig(
        id=AblationVariant.FULL,
        label="Ours",
        description="Un-shared encoders with DPS and RNS",
        column=6,
    ),
}


def ordered_variants() -> list[VariantConfig]:
    """Variants in table column order ("Ours" last)."""
    return sorted(ABLATION_VARIANTS.values(), key=lambda v: v.column)


# =============================================================================
# TRAINING CONFIGURATION
# =============================================================================

# Defaults that are reconstructions rather than values stated for the method.
RECONSTRUCTION_NOTES = [
    "stage-1 objective and boundary are reconstructed (tau=1, same-node positives, center negatives)",
    "every cluster keeps >= 1 high-confidence member (forced survivors are counted per epoch)",
    "encoder architecture (single linear layer, width 500, no bias) is a reconstruction",
    "optimizer defaults (lr 1e-3, betas 0.9/0.999) are canonical Adam values, not per-dataset settings",
    "tau 0.6, alpha 1.0 and filter layers 2 are defaults chosen from the reported insensitive ranges",
]


@dataclass
class TrainConfig:
    """Fully resolved configuration of a training run."""
    epochs: int = 400
    tau: float = 0.6
    alpha: float = 1.0
    filter_layers: int = 2
    k: Optional[int] = None
    hidden_dims: Tuple[int, ...] = (500,)
    activation: Activation = Activation.LINEAR
    bias: bool = False
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 0.0
    clip_norm: Optional[float] = None
    stage1_epochs: Optional[int] = None
    kmeans_iters: int = Defaults.KMEANS_MAX_ITER
    kmeans_tol: float = Defaults.KMEANS_TOL
    kmeans_every: int = 1
    pair_mode: PairMode = PairMode.SAME_NODE
    detach_centers: bool = False
    seeds: Tuple[int, ...] = tuple(range(10))
    ablation: AblationVariant = AblationVariant.FULL
    aug_rate: float = 0.2
    teleport: float = 0.2
    mask_mode: MaskMode = MaskMode.COLUMN
    dump_dir: Optional[str] = None

    def __post_init__(self):
        self.hidden_dims = tuple(int(h) for h in self.hidden_dims)
        self.seeds = tuple(int(s) for s in self.seeds)
        self.activation = parse_enum(Activation, self.activation, "activation")
        self.pair_mode = parse_enum(PairMode, self.pair_mode, "pair_mode")
        self.ablation = parse_enum(AblationVariant, self.ablation, "ablation")
        self.mask_mode = parse_enum(MaskMode, self.mask_mode, "mask_mode")

    # -------------------------------------------------------------------------
    # DERIVED SETTINGS
    # -------------------------------------------------------------------------

    @property
    def resolved_stage1_epochs(self) -> int:
        if self.stage1_epochs is not None:
            return self.stage1_epochs
        return int(self.epochs * Defaults.STAGE1_FRACTION)

    @property
    def variant(self) -> VariantConfig:
        return ABLATION_VARIANTS[self.ablation]

    @property
    def disable_dps(self) -> bool:
        return self.variant.disable_dps

    @property
    def disable_rns(self) -> bool:
        return self.variant.disable_rns

    @property
    def augment_kind(self) -> Optional[AugmentKind]:
        return self.variant.augment

    def with_overrides(self, **overrides) -> "TrainConfig":
        """Copy with fields replaced (validated)."""
        updated = replace(self, **overrides)
        updated.validate()
        return updated

    # -------------------------------------------------------------------------
    # VALIDATION
    # -------------------------------------------------------------------------

    def validate(self) -> None:
        """Raise ConfigError naming the first invalid field."""
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0", field="epochs")
        if not (0.0 < self.tau <= 1.0):
            raise ConfigError(f"tau must be in (0, 1], got {self.tau}", field="tau")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}", field="alpha")
        if self.filter_layers < 0:
            raise ConfigError("filter layers must be >= 0", field="filter_layers")
        if self.k is not None and self.k < 1:
            raise ConfigError("k must be >= 1", field="k")
        if not self.hidden_dims or any(h < 1 for h in self.hidden_dims):
            raise ConfigError("hidden dims must be positive integers", field="hidden_dims")
        if self.lr <= 0:
            raise ConfigError("lr must be > 0", field="lr")
        for name in ("beta1", "beta2"):
            value = getattr(self, name)
            if not (0.0 <= value < 1.0):
                raise ConfigError(f"{name} must be in [0, 1)", field=name)
        if self.adam_eps <= 0:
            raise ConfigError("adam eps must be > 0", field="adam_eps")
        if self.weight_decay < 0:
            raise ConfigError("weight decay must be >= 0", field="weight_decay")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigError("clip norm must be > 0", field="clip_norm")
        if self.stage1_epochs is not None and not (0 <= self.stage1_epochs <= self.epochs):
            raise ConfigError("stage1 epochs must be within [0, epochs]", field="stage1_epochs")
        if self.kmeans_iters < 1:
            raise ConfigError("kmeans iters must be >= 1", field="kmeans_iters")
        if self.kmeans_tol < 0:
            raise ConfigError("kmeans tol must be >= 0", field="kmeans_tol")
        if self.kmeans_every < 1:
            raise ConfigError("kmeans every must be >= 1", field="kmeans_every")
        if not self.seeds:
            raise ConfigError("at least one seed is required", field="seeds")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds must be >= 0", field="seeds")
        if not (0.0 <= self.aug_rate <= 1.0):
            raise ConfigError("aug rate must be in [0, 1]", field="aug_rate")
        if not (0.0 < self.teleport <= 1.0):
            raise ConfigError("teleport must be in (0, 1]", field="teleport")

    # -------------------------------------------------------------------------
    # SERIALIZATION
    # -------------------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready dict with every default materialized."""
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, Enum):
                data[key] = value.value
            elif isinstance(value, tuple):
                data[key] = list(value)
        data["stage1_epochs"] = self.resolved_stage1_epochs
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        """Build from a (possibly partial) dict; unknown keys are rejected."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}", field=unknown[0])
        config = cls(**data)
        config.validate()
        return config
