"""Split-merge MCMC for Gaussian mixtures with hash-driven proposals."""

from .data import Dataset, SyntheticSpec, generate_synthetic, load_csv
from .engine import ChainConfig, TraceRecord, run_chain
from .evaluation import accuracy, convergence_summary, nmi
from .hashing import (
    HashFamily,
    HashSpec,
    kway_collision_prob,
    split_collision_prob,
    srp_collision_prob,
    srp_hash,
    transform_nonneg,
    weighted_jaccard,
    wmh_hash,
)
from .lss import Bucket, LssTable, inclusion_prob
from .mixture import (
    GaussianStats,
    Hyperparams,
    MergeMove,
    NoOpMove,
    PartitionState,
    SplitMove,
    apply_move,
    centroid,
    cluster_log_marginal,
    log_likelihood_ratio,
    state_log_likelihood,
)
from .proposals import (
    ProposalOutcome,
    dumb_merge,
    dumb_split,
    minsm_smart_merge,
    minsm_smart_split,
    naive_smart_merge,
    naive_smart_split,
)

__version__ = "0.1.0"

__all__ = [
    "Bucket",
    "ChainConfig",
    "Dataset",
    "GaussianStats",
    "HashFamily",
    "HashSpec",
    "Hyperparams",
    "LssTable",
    "MergeMove",
    "NoOpMove",
    "PartitionState",
    "ProposalOutcome",
    "SplitMove",
    "SyntheticSpec",
    "TraceRecord",
    "accuracy",
    "apply_move",
    "centroid",
    "cluster_log_marginal",
    "convergence_summary",
    "dumb_merge",
    "dumb_split",
    "generate_synthetic",
    "inclusion_prob",
    "kway_collision_prob",
    "load_csv",
    "log_likelihood_ratio",
    "minsm_smart_merge",
    "minsm_smart_split",
    "naive_smart_merge",
    "naive_smart_split",
    "nmi",
    "run_chain",
    "split_collision_prob",
    "srp_collision_prob",
    "srp_hash",
    "state_log_likelihood",
    "transform_nonneg",
    "weighted_jaccard",
    "wmh_hash",
]
