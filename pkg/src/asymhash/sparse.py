"""Sparse binary datasets: parsing, partitioning, summary statistics.

A set over the universe ``[0, D)`` is represented as a sorted, duplicate-free
``int64`` numpy array. A :class:`Dataset` stores many such sets in CSR form
(``indptr`` / ``indices``) next to their integer record ids.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

SVM_SPARSE = "svm-sparse"
INDEX_LIST = "index-list"
FORMATS = (SVM_SPARSE, INDEX_LIST)


class ParseError(ValueError):
    """A dataset line could not be parsed."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ValidationError(ValueError):
    """Parsed content violates a dataset invariant."""


def as_set(indices: Iterable[int]) -> np.ndarray:
    """Return ``indices`` as a sorted, deduplicated int64 array."""
    arr = np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices,
                     dtype=np.int64)
    if arr.ndim != 1:
        raise ValidationError("a set must be one-dimensional")
    if arr.size and arr.min() < 0:
        raise ValidationError(f"negative index {int(arr.min())}")
    return np.unique(arr)


def intersection_size(x: np.ndarray, y: np.ndarray) -> int:
    """Binary inner product ``|x & y|`` of two sorted sets."""
    if len(x) == 0 or len(y) == 0:
        return 0
    return int(np.intersect1d(x, y, assume_unique=True).size)


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of sparse binary records.

    Attributes:
        dim: Universe size ``D``; every index is ``< dim``.
        ids: Record ids, unique, shape ``(n,)``.
        indptr: CSR row pointer, shape ``(n + 1,)``.
        indices: Concatenated sorted record indices.
    """

    dim: int
    ids: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    cardinalities: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        indptr = np.asarray(self.indptr, dtype=np.int64)
        indices = np.asarray(self.indices, dtype=np.int64)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        if indptr.shape != (ids.size + 1,) or indptr[0] != 0 or indptr[-1] != indices.size:
            raise ValidationError("inconsistent CSR layout")
        if np.unique(ids).size != ids.size:
            raise ValidationError("record ids must be unique")
        if self.dim < 1:
            raise ValidationError("universe dimension must be positive")
        if indices.size:
            if indices.min() < 0:
                raise ValidationError(f"negative index {int(indices.min())}")
            if indices.max() >= self.dim:
                raise ValidationError(
                    f"index {int(indices.max())} outside universe of size {self.dim}")
        object.__setattr__(self, "cardinalities", np.diff(indptr))

    @classmethod
    def from_sets(cls, sets: Sequence[Iterable[int]], ids: Sequence[int] | None = None,
                  dim: int | None = None) -> "Dataset":
        arrays = [as_set(s) for s in sets]
        if ids is None:
            ids = np.arange(len(arrays), dtype=np.int64)
        lengths = np.fromiter((a.size for a in arrays), dtype=np.int64, count=len(arrays))
        indptr = np.zeros(len(arrays) + 1, dtype=np.int64)
        np.cumsum(lengths, out=indptr[1:])
        indices = np.concatenate(arrays) if arrays else np.zeros(0, dtype=np.int64)
        if dim is None:
            dim = int(indices.max()) + 1 if indices.size else 1
        return cls(dim=dim, ids=np.asarray(ids, dtype=np.int64), indptr=indptr, indices=indices)

    def __len__(self) -> int:
        return int(self.ids.size)

    def __getitem__(self, pos: int) -> np.ndarray:
        return self.indices[self.indptr[pos]:self.indptr[pos + 1]]

    def __iter__(self):
        for pos in range(len(self)):
            yield int(self.ids[pos]), self[pos]

    @property
    def max_cardinality(self) -> int:
        """``M``: the largest record cardinality (0 for an empty dataset)."""
        return int(self.cardinalities.max()) if len(self) else 0

    def position(self, record_id: int) -> int:
        hits = np.flatnonzero(self.ids == record_id)
        if hits.size == 0:
            raise KeyError(record_id)
        return int(hits[0])

    def take(self, positions: Sequence[int]) -> "Dataset":
        """Sub-dataset of the given row positions (same universe)."""
        positions = np.asarray(positions, dtype=np.int64)
        parts = [self[p] for p in positions]
        lengths = self.cardinalities[positions] if positions.size else np.zeros(0, np.int64)
        indptr = np.zeros(positions.size + 1, dtype=np.int64)
        np.cumsum(lengths, out=indptr[1:])
        indices = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
        return Dataset(dim=self.dim, ids=self.ids[positions], indptr=indptr, indices=indices)

    def with_dim(self, dim: int) -> "Dataset":
        return Dataset(dim=dim, ids=self.ids, indptr=self.indptr, indices=self.indices)

    def to_csr(self) -> sp.csr_matrix:
        data = np.ones(self.indices.size, dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(len(self), self.dim))


@dataclass(frozen=True)
class DatasetStats:
    n_records: int
    dim: int
    nonzeros_mean: float
    nonzeros_std: float
    max_cardinality: int

    def to_csv(self) -> str:
        return ("n,D,mean,std,M\n"
                f"{self.n_records},{self.dim},{self.nonzeros_mean:.6g},"
                f"{self.nonzeros_std:.6g},{self.max_cardinality}\n")


def compute_stats(d: Dataset) -> DatasetStats:
    """Population mean/std of record cardinalities."""
    if len(d) == 0:
        return DatasetStats(0, d.dim, 0.0, 0.0, 0)
    f = d.cardinalities.astype(np.float64)
    return DatasetStats(len(d), d.dim, float(f.mean()), float(f.std()), d.max_cardinality)


def _parse_int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(lineno, f"expected an integer, got {token!r}") from None


def _parse_svm_line(line: str, lineno: int, binarize: bool) -> list[int]:
    tokens = line.split()
    # first token is the label; it is validated as numeric and otherwise ignored
    try:
        float(tokens[0])
    except ValueError:
        raise ParseError(lineno, f"bad label {tokens[0]!r}") from None
    out = []
    for tok in tokens[1:]:
        idx, sep, val = tok.partition(":")
        if not sep:
            raise ParseError(lineno, f"expected idx:val, got {tok!r}")
        i = _parse_int(idx, lineno)
        try:
            v = float(val)
        except ValueError:
            raise ParseError(lineno, f"bad value {val!r}") from None
        if i < 1:
            raise ValidationError(f"line {lineno}: index {i} is not a valid 1-based index")
        if v == 0.0:
            continue
        if not binarize and v != 1.0:
            raise ValidationError(
                f"line {lineno}: non-binary value {val} (enable binarization)")
        out.append(i - 1)
    return out


def parse_dataset(path: str | os.PathLike, format: str = INDEX_LIST, binarize: bool = True,
                  dim: int | None = None) -> Dataset:
    """Read a dataset file, one record per line; record ids are 0-based line numbers.

    ``svm-sparse`` lines are ``label idx:val ...`` with 1-based indices, shifted
    to 0-based. ``index-list`` lines are whitespace-separated 0-based indices;
    a blank line is an empty record. Lines starting with ``#`` are skipped.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    sets: list[list[int]] = []
    ids: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line.startswith("#"):
                continue
            if format == SVM_SPARSE:
                if not line:
                    continue
                items = _parse_svm_line(line, lineno, binarize)
            else:
                items = [_parse_int(tok, lineno) for tok in line.split()]
                neg = [i for i in items if i < 0]
                if neg:
                    raise ValidationError(f"line {lineno}: negative index {neg[0]}")
            sets.append(items)
            ids.append(len(ids))
    d = Dataset.from_sets(sets, ids=ids)
    if dim is not None:
        if d.indices.size and dim <= int(d.indices.max()):
            raise ValidationError(f"dimension override {dim} smaller than max index + 1")
        d = d.with_dim(dim)
    return d


def write_index_list(d: Dataset, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for _, s in d:
            fh.write(" ".join(map(str, s.tolist())) + "\n")


def partition_dataset(d: Dataset, n_query: int, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle; the first ``n_query`` records become the query partition."""
    if not 0 <= n_query <= len(d):
        raise ValueError(f"n_query={n_query} outside [0, {len(d)}]")
    order = np.random.default_rng(seed).permutation(len(d))
    return d.take(order[n_query:]), d.take(order[:n_query])


def inner_products(train: Dataset, queries: Dataset) -> np.ndarray:
    """Dense ``(n_queries, n_train)`` matrix of exact intersection sizes."""
    dim = max(train.dim, queries.dim)
    a = queries.with_dim(dim).to_csr()
    b = train.with_dim(dim).to_csr()
    return np.asarray((a @ b.T).toarray(), dtype=np.int64)


def synthetic_corpus(n_records: int = 10_000, dim: int = 50_000, seed: int = 0,
                     n_topics: int = 200, topic_vocab: int = 1_500,
                     topic_weight: float = 0.5, size_median: float = 50.0,
                     size_sigma: float = 1.4, max_size: int = 500) -> Dataset:
    """Bag-of-words style corpus with heavy-tailed record sizes.

    Each record picks a topic, draws a lognormal size, then samples that many
    words (with replacement, deduplicated) from a mixture of the topic's Zipf
    vocabulary and a global Zipf background over ``[0, dim)``.
    """
    rng = np.random.default_rng(seed)
    bg_cdf = np.cumsum(1.0 / np.arange(1, dim + 1, dtype=np.float64))
    bg_cdf /= bg_cdf[-1]
    bg_perm = rng.permutation(dim)
    topic_cdf = np.cumsum(1.0 / np.arange(1, topic_vocab + 1, dtype=np.float64))
    topic_cdf /= topic_cdf[-1]
    topics = [rng.choice(dim, size=topic_vocab, replace=False) for _ in range(n_topics)]
    sizes = np.clip(np.round(rng.lognormal(math.log(size_median), size_sigma, n_records)),
                    1, max_size).astype(np.int64)
    labels = rng.integers(0, n_topics, size=n_records)
    sets = []
    for f, z in zip(sizes, labels):
        n_topic = rng.binomial(f, topic_weight)
        t_pick = np.minimum(np.searchsorted(topic_cdf, rng.random(n_topic)), topic_vocab - 1)
        b_pick = np.minimum(np.searchsorted(bg_cdf, rng.random(f - n_topic)), dim - 1)
        sets.append(np.unique(np.concatenate([topics[z][t_pick], bg_perm[b_pick]])))
    return Dataset.from_sets(sets, dim=dim)
