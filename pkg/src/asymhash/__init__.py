"""Asymmetric minwise hashing for retrieval by binary inner product."""

from .hashing import DEFAULT_SEED, HashKind, HashScheme, estimate_collision, hash_values
from .index import IndexConfig, LshIndex, Transform, build_index, query_index, scheme_config
from .sparse import Dataset, compute_stats, parse_dataset, partition_dataset, synthetic_corpus
from .transforms import (
    MhRole, PaddedBinarySet, Role, WeightedSparseVector, transform_l2alsh, transform_mh,
    transform_signalsh, transform_weighted,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_SEED", "Dataset", "HashKind", "HashScheme", "IndexConfig", "LshIndex", "MhRole",
    "PaddedBinarySet", "Role", "Transform", "WeightedSparseVector", "build_index",
    "compute_stats", "estimate_collision", "hash_values", "parse_dataset", "partition_dataset",
    "query_index", "scheme_config", "synthetic_corpus", "transform_l2alsh", "transform_mh",
    "transform_signalsh", "transform_weighted",
]
