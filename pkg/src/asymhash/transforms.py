"""Asymmetric preprocessing (data) and query transformations.

Binary padding for asymmetric minhash is virtual: a :class:`PaddedBinarySet`
records how many ones occupy the prefix of each padding region, and hashing
scans those ranges without materializing them. With universe ``D`` and
maximum cardinality ``M`` the regions are ``[D, D + M)`` and ``[D + M, D + 2M)``.

============  ==================  ==================
role          region 1 ones       region 2 ones
============  ==================  ==================
DATA_PRIME    ``M - f_x``         0
QUERY_PRIME   0                   0
DATA_DOUBLE   ``M - f_x``         0
QUERY_DOUBLE  0                   ``M - f_q``
============  ==================  ==================

For real-vector schemes (L2-ALSH, Sign-ALSH) inputs are scaled by ``U / V``
and ``2m`` coordinates are appended at indices ``D .. D + 2m - 1``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .hashing import HashKind, HashScheme, EmptyInputError, minhash_signatures
from .sparse import Dataset


class CardinalityError(ValueError):
    """A stored record is larger than the maximum cardinality ``M``."""


class CardinalityWarning(UserWarning):
    """A query is larger than ``M``; its padding was clamped to zero."""


class MhRole(str, enum.Enum):
    DATA_PRIME = "data-prime"
    QUERY_PRIME = "query-prime"
    DATA_DOUBLE = "data-double"
    QUERY_DOUBLE = "query-double"

    @property
    def is_data(self) -> bool:
        return self in (MhRole.DATA_PRIME, MhRole.DATA_DOUBLE)


class Role(str, enum.Enum):
    DATA = "data"
    QUERY = "query"


@dataclass(frozen=True)
class PaddedBinarySet:
    base: np.ndarray
    pad1_count: int
    pad2_count: int
    M: int
    dim: int
    clamped: bool = False

    def __post_init__(self):
        if not (0 <= self.pad1_count <= self.M and 0 <= self.pad2_count <= self.M):
            raise ValueError("padding counts must lie in [0, M]")

    @property
    def cardinality(self) -> int:
        return len(self.base) + self.pad1_count + self.pad2_count

    def padding(self) -> list[tuple[int, int]]:
        """``(offset, count)`` for each padding region."""
        return [(self.dim, self.pad1_count), (self.dim + self.M, self.pad2_count)]

    def materialize(self) -> np.ndarray:
        ranges = [np.asarray(self.base, dtype=np.int64)]
        ranges += [np.arange(off, off + cnt, dtype=np.int64) for off, cnt in self.padding()]
        return np.concatenate(ranges)


@dataclass(frozen=True)
class WeightedSparseVector:
    """Sorted ``(index, weight)`` entries; zero weights are dropped."""

    indices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.float64)
        if idx.shape != w.shape:
            raise ValueError("indices and weights differ in length")
        if w.size and w.min() < 0:
            raise ValueError("weights must be non-negative")
        order = np.argsort(idx, kind="stable")
        idx, w = idx[order], w[order]
        if idx.size > 1 and (np.diff(idx) == 0).any():
            raise ValueError("duplicate index in weighted vector")
        keep = w > 0
        object.__setattr__(self, "indices", idx[keep])
        object.__setattr__(self, "weights", w[keep])

    @classmethod
    def from_pairs(cls, pairs) -> "WeightedSparseVector":
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs], dtype=np.int64),
                   np.array([p[1] for p in pairs], dtype=np.float64))

    def total(self) -> float:
        return float(self.weights.sum())

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.weights.tolist()))


@dataclass(frozen=True)
class AugmentedRealVector:
    values: np.ndarray
    m: int
    U: float
    V: float
    dim: int = field(default=0)

    @property
    def tail(self) -> np.ndarray:
        return self.values[self.dim:]


def weighted_jaccard(u: WeightedSparseVector, v: WeightedSparseVector) -> float:
    """``sum(min) / sum(max)`` over the union of supports."""
    keys = np.union1d(u.indices, v.indices)
    a = np.zeros(keys.size)
    b = np.zeros(keys.size)
    a[np.searchsorted(keys, u.indices)] = u.weights
    b[np.searchsorted(keys, v.indices)] = v.weights
    hi = np.maximum(a, b).sum()
    return float(np.minimum(a, b).sum() / hi) if hi > 0 else 0.0


def _pad_amount(f: int, M: int, is_data: bool, what: str = "cardinality") -> tuple[int, bool]:
    if f <= M:
        return M - f, False
    if is_data:
        raise CardinalityError(f"{what} {f} exceeds M = {M}")
    warnings.warn(f"query {what} {f} exceeds M = {M}; padding clamped to 0",
                  CardinalityWarning, stacklevel=3)
    return 0, True


def transform_mh(x, M: int, role: MhRole | str, dim: int) -> PaddedBinarySet:
    """Pad ``x`` for asymmetric minhash (see the module table)."""
    role = MhRole(role)
    if M < 1:
        raise ValueError("M must be >= 1")
    x = np.asarray(x, dtype=np.int64)
    if x.size and x.max() >= dim:
        raise ValueError(f"index {int(x.max())} outside universe of size {dim}")
    if role is MhRole.QUERY_PRIME:
        return PaddedBinarySet(x, 0, 0, M, dim)
    pad, clamped = _pad_amount(x.size, M, role.is_data)
    if role.is_data:
        return PaddedBinarySet(x, pad, 0, M, dim)
    return PaddedBinarySet(x, 0, pad, M, dim, clamped)


def padded_minhash(s: HashScheme, t: int, p: PaddedBinarySet) -> int:
    """Minhash of the padded set without materializing its padding."""
    if s.kind is not HashKind.MINHASH:
        raise ValueError("padded_minhash needs a minhash scheme")
    if p.cardinality == 0:
        raise EmptyInputError("padded set is empty")
    base = np.asarray(p.base, dtype=np.int64)
    pads = [(off, np.array([cnt])) for off, cnt in p.padding()]
    return int(minhash_signatures(s.master_seed, np.array([0, base.size]), base, [t], pads)[0, 0])


def transform_weighted(x, M: int, role: Role | str, dim: int) -> WeightedSparseVector:
    """Weighted counterpart of the double padding: one entry of weight ``M - f``.

    Data vectors put it at index ``dim``; queries at ``dim + 1``.
    """
    role = Role(role)
    x = np.asarray(x, dtype=np.int64)
    pad, _ = _pad_amount(x.size, M, role is Role.DATA)
    extra = dim if role is Role.DATA else dim + 1
    return WeightedSparseVector(np.append(x, extra), np.append(np.ones(x.size), float(pad)))


def transform_weighted_intersection(v: WeightedSparseVector, M_w: float, role: Role | str,
                                    dim: int) -> WeightedSparseVector:
    """Pad a real-valued vector to total mass ``M_w`` in a role-specific coordinate.

    The weighted Jaccard of a data/query pair is then ``s / (2 M_w - s)`` with
    ``s = sum_i min(x_i, q_i)``.
    """
    role = Role(role)
    total = v.total()
    if total > M_w:
        if role is Role.DATA:
            raise CardinalityError(f"weight sum {total} exceeds M = {M_w}")
        warnings.warn(f"query weight sum {total} exceeds M = {M_w}; padding clamped to 0",
                      CardinalityWarning, stacklevel=2)
        pad = 0.0
    else:
        pad = M_w - total
    if v.indices.size and v.indices.max() >= dim:
        raise ValueError("vector index outside universe")
    extra = dim if role is Role.DATA else dim + 1
    return WeightedSparseVector(np.append(v.indices, extra), np.append(v.weights, pad))


def _norm_powers(norm: float, m: int) -> np.ndarray:
    return norm ** (2.0 ** np.arange(1, m + 1))


def _check_alsh(m: int, U: float, V: float):
    if V <= 0:
        raise ValueError("V must be positive")
    if not 0 < U < 1:
        raise ValueError("U must lie in (0, 1)")
    if m < 1:
        raise ValueError("m must be >= 1")


def _alsh_tail(norm: float, role: Role, m: int, sign: bool) -> np.ndarray:
    powers = _norm_powers(norm, m)
    if sign:
        fill, appended = np.zeros(m), 0.5 - powers
    else:
        fill, appended = np.full(m, 0.5), powers
    return np.concatenate([appended, fill] if role is Role.DATA else [fill, appended])


def _augment(v, role, m, U, V, sign) -> AugmentedRealVector:
    role = Role(role)
    _check_alsh(m, U, V)
    v = np.asarray(v, dtype=np.float64) * (U / V)
    tail = _alsh_tail(float(np.linalg.norm(v)), role, m, sign)
    return AugmentedRealVector(np.concatenate([v, tail]), m, U, V, dim=v.size)


def transform_l2alsh(v, role: Role | str, m: int = 3, U: float = 0.83,
                     V: float = 1.0) -> AugmentedRealVector:
    """Data: ``[x; |x|^2, .., |x|^(2^m); 1/2 x m]``; query swaps the two tail blocks."""
    return _augment(v, role, m, U, V, sign=False)


def transform_signalsh(v, role: Role | str, m: int = 2, U: float = 0.75,
                       V: float = 1.0) -> AugmentedRealVector:
    """Data: ``[x; 1/2 - |x|^2, .., 1/2 - |x|^(2^m); 0 x m]``; query swaps the tail blocks."""
    return _augment(v, role, m, U, V, sign=True)


# ---------------------------------------------------------------------------
# batch forms over a Dataset


def mh_pads(d: Dataset, M: int, role: MhRole | str) -> list[tuple[int, np.ndarray]]:
    """Virtual padding ``(offset, counts)`` for every record of ``d``."""
    role = MhRole(role)
    f = d.cardinalities
    if role is MhRole.QUERY_PRIME:
        return []
    over = f > M
    if over.any():
        if role.is_data:
            pos = int(np.argmax(over))
            raise CardinalityError(
                f"record {int(d.ids[pos])} has cardinality {int(f[pos])} > M = {M}")
        warnings.warn(f"{int(over.sum())} queries exceed M = {M}; padding clamped to 0",
                      CardinalityWarning, stacklevel=2)
    counts = np.maximum(M - f, 0)
    return [(d.dim, counts)] if role.is_data else [(d.dim + M, counts)]


def weighted_csr(d: Dataset, M: int, role: Role | str):
    """CSR ``(indptr, indices, weights)`` of the weighted transform of every record."""
    role = Role(role)
    f = d.cardinalities
    if role is Role.DATA and (f > M).any():
        pos = int(np.argmax(f > M))
        raise CardinalityError(
            f"record {int(d.ids[pos])} has cardinality {int(f[pos])} > M = {M}")
    pad = np.maximum(M - f, 0).astype(np.float64)
    extra = d.dim if role is Role.DATA else d.dim + 1
    return _append_entries(d, [extra], pad[:, None], drop_zero=True)


def _append_entries(d: Dataset, extra_idx, extra_val: np.ndarray, base_value: float = 1.0,
                    drop_zero: bool = False):
    n = len(d)
    extra_idx = np.asarray(extra_idx, dtype=np.int64)
    keep = (extra_val != 0) if drop_zero else np.ones_like(extra_val, dtype=bool)
    n_extra = keep.sum(axis=1)
    lengths = d.cardinalities + n_extra
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(lengths, out=indptr[1:])
    row_of_base = np.repeat(np.arange(n), d.cardinalities)
    base_pos = indptr[:-1][row_of_base] + (np.arange(d.indices.size) - d.indptr[:-1][row_of_base])
    indices = np.empty(indptr[-1], dtype=np.int64)
    values = np.empty(indptr[-1], dtype=np.float64)
    indices[base_pos] = d.indices
    values[base_pos] = base_value
    rows, cols = np.nonzero(keep)
    slot = np.cumsum(keep, axis=1)[rows, cols] - 1
    extra_pos = indptr[:-1][rows] + d.cardinalities[rows] + slot
    indices[extra_pos] = extra_idx[cols]
    values[extra_pos] = extra_val[rows, cols]
    return indptr, indices, values


def augmented_csr(d: Dataset, role: Role | str, m: int, U: float, V: float, sign: bool):
    """CSR form of the L2-ALSH (``sign=False``) or Sign-ALSH transform of binary records."""
    role = Role(role)
    _check_alsh(m, U, V)
    scale = U / V
    norms = np.sqrt(d.cardinalities.astype(np.float64)) * scale
    powers = norms[:, None] ** (2.0 ** np.arange(1, m + 1))[None, :]
    if sign:
        appended, fill = 0.5 - powers, np.zeros_like(powers)
    else:
        appended, fill = powers, np.full_like(powers, 0.5)
    tail = np.hstack([appended, fill] if role is Role.DATA else [fill, appended])
    return _append_entries(d, d.dim + np.arange(2 * m), tail, base_value=scale)
