"""(K, L)-bucketed LSH index over transformed records.

Table ``j`` keys a record by folding hash values ``t = j*K .. j*K + K - 1`` into
one 64-bit bucket key, so the first ``L`` tables of an index are identical no
matter how many more tables it has. Each table is stored as ``(key, id)``
pairs sorted lexicographically; lookups are binary searches.
"""

from __future__ import annotations

import enum
import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .hashing import (
    HashKind, HashScheme, combine, cws_signatures, hs_signatures, l2lsh_signatures,
    minhash_signatures, srp_signatures,
)
from .sparse import Dataset
from .transforms import MhRole, Role, augmented_csr, mh_pads, weighted_csr

FORMAT_VERSION = 1
_KEY_SEED = np.uint64(0x243F6A8885A308D3)
_PAIR = np.dtype([("key", "<u8"), ("id", "<i8")])


class Transform(str, enum.Enum):
    NONE = "none"
    MH_ALSH = "mh-alsh"
    MH_ALSH_PRIME = "mh-alsh-prime"
    L2_ALSH = "l2-alsh"
    SIGN_ALSH = "sign-alsh"


_COMPATIBLE = {
    Transform.NONE: {HashKind.MINHASH, HashKind.SAMPLE_HS},
    Transform.MH_ALSH: {HashKind.MINHASH, HashKind.CWS},
    Transform.MH_ALSH_PRIME: {HashKind.MINHASH},
    Transform.L2_ALSH: {HashKind.L2LSH},
    Transform.SIGN_ALSH: {HashKind.SRP},
}

_KIND_CODES = {k: i for i, k in enumerate(HashKind)}
_TRANSFORM_CODES = {t: i for i, t in enumerate(Transform)}


class BuildError(ValueError):
    """A record cannot be indexed under the configured transform."""


@dataclass(frozen=True)
class IndexConfig:
    """Hash scheme plus transform; ``dim`` is the shared universe size ``D``.

    ``M`` feeds the minhash paddings; ``m``, ``U``, ``V`` the real-vector
    transforms (``V`` is the largest data norm, ``sqrt(M)`` for binary data).
    """

    K: int
    L: int
    scheme: HashScheme
    transform: Transform = Transform.NONE
    dim: int = 1
    M: int = 0
    m: int = 3
    U: float = 0.83
    V: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "transform", Transform(self.transform))
        if self.K < 1 or self.L < 1:
            raise ValueError("K and L must be >= 1")
        if self.scheme.kind not in _COMPATIBLE[self.transform]:
            raise ValueError(f"{self.scheme.kind.value} hashing is not compatible with "
                             f"transform {self.transform.value}")
        if self.transform in (Transform.MH_ALSH, Transform.MH_ALSH_PRIME) and self.M < 1:
            raise ValueError("asymmetric minhash needs M >= 1")

    @property
    def n_hashes(self) -> int:
        return self.K * self.L

    def signatures(self, d: Dataset, role: Role | str, ts=None) -> np.ndarray:
        """Hash values of the role-transformed records, shape ``(len(d), len(ts))``."""
        role = Role(role)
        if ts is None:
            ts = np.arange(self.n_hashes)
        if d.indices.size and d.indices.max() >= self.dim:
            raise ValueError(f"record index outside universe of size {self.dim}")
        d = d.with_dim(self.dim)
        seed = self.scheme.master_seed
        kind = self.scheme.kind
        tr = self.transform
        if tr is Transform.NONE:
            if kind is HashKind.SAMPLE_HS:
                entities = (d.ids.astype(np.uint64) << np.uint64(1)) | np.uint64(role is Role.QUERY)
                return hs_signatures(seed, d.indptr, d.indices, self.dim, ts, entities,
                                     self.scheme.N)
            return minhash_signatures(seed, d.indptr, d.indices, ts)
        if tr in (Transform.MH_ALSH, Transform.MH_ALSH_PRIME):
            if kind is HashKind.CWS:
                indptr, indices, weights = weighted_csr(d, self.M, role)
                return cws_signatures(seed, indptr, indices, weights, ts)
            if tr is Transform.MH_ALSH:
                mh_role = MhRole.DATA_DOUBLE if role is Role.DATA else MhRole.QUERY_DOUBLE
            else:
                mh_role = MhRole.DATA_PRIME if role is Role.DATA else MhRole.QUERY_PRIME
            return minhash_signatures(seed, d.indptr, d.indices, ts, mh_pads(d, self.M, mh_role))
        sign = tr is Transform.SIGN_ALSH
        indptr, indices, values = augmented_csr(d, role, self.m, self.U, self.V, sign)
        if sign:
            return srp_signatures(seed, indptr, indices, values, ts)
        return l2lsh_signatures(seed, indptr, indices, values, ts, self.scheme.r)


def scheme_config(name: str, K: int, L: int, dim: int, M: int, seed: int, *,
                  m: int | None = None, U: float | None = None, r: float = 2.5,
                  N: int = 2 ** 31) -> IndexConfig:
    """Named presets used by the experiments and the CLI.

    ``mh-alsh`` (minhash on the double padding), ``mh-alsh-cws`` (consistent
    weighted sampling on the weighted padding), ``mh-alsh-prime`` (single
    padding), ``minhash``, ``hs``, ``l2-alsh`` and ``sign-alsh``.
    """
    V = math.sqrt(max(M, 1))
    if name == "mh-alsh":
        return IndexConfig(K, L, HashScheme("minhash", seed, effective_dim=dim + 2 * M),
                           Transform.MH_ALSH, dim, M)
    if name == "mh-alsh-cws":
        return IndexConfig(K, L, HashScheme("cws", seed, effective_dim=dim + 2),
                           Transform.MH_ALSH, dim, M)
    if name == "mh-alsh-prime":
        return IndexConfig(K, L, HashScheme("minhash", seed, effective_dim=dim + M),
                           Transform.MH_ALSH_PRIME, dim, M)
    if name == "minhash":
        return IndexConfig(K, L, HashScheme("minhash", seed, effective_dim=dim), dim=dim, M=M)
    if name == "hs":
        return IndexConfig(K, L, HashScheme("hs", seed, N=N, effective_dim=dim), dim=dim, M=M)
    if name == "l2-alsh":
        return IndexConfig(K, L, HashScheme("l2lsh", seed, r=r, effective_dim=dim + 2 * (m or 3)),
                           Transform.L2_ALSH, dim, M, m or 3, U or 0.83, V)
    if name == "sign-alsh":
        return IndexConfig(K, L, HashScheme("srp", seed, effective_dim=dim + 2 * (m or 2)),
                           Transform.SIGN_ALSH, dim, M, m or 2, U or 0.75, V)
    raise ValueError(f"unknown scheme {name!r}; expected one of {SCHEME_NAMES}")


SCHEME_NAMES = ("mh-alsh", "mh-alsh-cws", "mh-alsh-prime", "minhash", "hs", "l2-alsh",
                "sign-alsh")


def bucket_keys(sig: np.ndarray, j: int, K: int) -> np.ndarray:
    """Fold the K hash values of table ``j`` (columns ``j*K ..``) into 64-bit keys."""
    sig = np.atleast_2d(sig)
    acc = np.full(sig.shape[0], _KEY_SEED, dtype=np.uint64)
    for k in range(K):
        acc = combine(acc, sig[:, j * K + k])
    return acc


def bucket_key(config: IndexConfig, j: int, v, role: Role | str = Role.DATA) -> int:
    """Bucket key of one binary record ``v`` in table ``j``."""
    if not 0 <= j < config.L:
        raise IndexError(f"table {j} outside [0, {config.L})")
    d = Dataset.from_sets([v], dim=config.dim)
    ts = np.arange(j * config.K, (j + 1) * config.K)
    sig = config.signatures(d, role, ts)
    return int(bucket_keys(sig, 0, config.K)[0])


@dataclass
class LshIndex:
    config: IndexConfig
    tables: list[np.ndarray]
    record_ids: set = field(default_factory=set)

    def __len__(self) -> int:
        return len(self.record_ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LshIndex):
            return NotImplemented
        return (self.config == other.config and self.record_ids == other.record_ids
                and len(self.tables) == len(other.tables)
                and all(np.array_equal(a, b) for a, b in zip(self.tables, other.tables)))

    def bucket_sizes(self, j: int) -> np.ndarray:
        _, counts = np.unique(self.tables[j]["key"], return_counts=True)
        return counts

    def save(self, path: str | os.PathLike) -> None:
        c = self.config
        s = c.scheme
        header = struct.pack(
            "<BBBIIQQdQQIddQ", FORMAT_VERSION, _KIND_CODES[s.kind],
            _TRANSFORM_CODES[c.transform], c.K, c.L, s.master_seed & 0xFFFFFFFFFFFFFFFF,
            s.N, s.r, c.dim, c.M, c.m, c.U, c.V, len(self))
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(struct.pack("<Q", s.effective_dim))
            for table in self.tables:
                fh.write(struct.pack("<Q", table.size))
                fh.write(table.astype(_PAIR).tobytes())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "LshIndex":
        fmt = "<BBBIIQQdQQIddQ"
        with open(path, "rb") as fh:
            raw = fh.read()
        version = raw[0]
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported index format version {version}")
        (_, kind, tr, K, L, seed, N, r, dim, M, m, U, V, _n) = struct.unpack_from(fmt, raw)
        pos = struct.calcsize(fmt)
        (eff,) = struct.unpack_from("<Q", raw, pos)
        pos += 8
        scheme = HashScheme(list(HashKind)[kind], seed, N, r, eff)
        config = IndexConfig(K, L, scheme, list(Transform)[tr], dim, M, m, U, V)
        tables = []
        for _ in range(L):
            (count,) = struct.unpack_from("<Q", raw, pos)
            pos += 8
            tables.append(np.frombuffer(raw, dtype=_PAIR, count=count, offset=pos).copy())
            pos += count * _PAIR.itemsize
        ids = set(tables[0]["id"].tolist()) if tables else set()
        return cls(config, tables, ids)


def _sorted_table(keys: np.ndarray, ids: np.ndarray) -> np.ndarray:
    order = np.lexsort((ids, keys))
    table = np.empty(keys.size, dtype=_PAIR)
    table["key"] = keys[order]
    table["id"] = ids[order]
    return table


def build_index(config: IndexConfig, train: Dataset,
                signatures: np.ndarray | None = None) -> LshIndex:
    """Insert every record of ``train`` into ``config.L`` tables.

    ``signatures`` may carry precomputed data-side hash values with at least
    ``K * L`` columns (hash index ``t`` in column ``t``).
    """
    if signatures is None:
        try:
            signatures = config.signatures(train, Role.DATA)
        except ValueError as exc:
            raise BuildError(str(exc)) from exc
    elif signatures.shape[0] != len(train) or signatures.shape[1] < config.n_hashes:
        raise ValueError("precomputed signatures do not cover K * L hash indices")
    tables = [_sorted_table(bucket_keys(signatures, j, config.K), train.ids)
              for j in range(config.L)]
    return LshIndex(config, tables, set(train.ids.tolist()))


@dataclass(frozen=True)
class QueryResult:
    ids: np.ndarray
    raw_count: int


def _lookup(table: np.ndarray, keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = np.searchsorted(table["key"], keys, side="left")
    hi = np.searchsorted(table["key"], keys, side="right")
    return lo, hi


def table_hits(idx: LshIndex, query_sig: np.ndarray, n_tables: int | None = None):
    """Yield ``(j, query_rows, record_ids)`` for each table: every (query, record) bucket match."""
    n_tables = idx.config.L if n_tables is None else n_tables
    K = idx.config.K
    for j in range(n_tables):
        table = idx.tables[j]
        lo, hi = _lookup(table, bucket_keys(query_sig, j, K))
        sizes = hi - lo
        total = int(sizes.sum())
        rows = np.repeat(np.arange(sizes.size), sizes)
        starts = np.repeat(lo - np.concatenate([[0], np.cumsum(sizes)[:-1]]), sizes)
        yield j, rows, table["id"][starts + np.arange(total)]


def query_index(idx: LshIndex, q, n_tables: int | None = None) -> QueryResult:
    """Union of the query's buckets over the first ``n_tables`` tables (default all)."""
    d = Dataset.from_sets([q], dim=idx.config.dim)
    sig = idx.config.signatures(d, Role.QUERY)
    found = []
    raw = 0
    for _, _, ids in table_hits(idx, sig, n_tables):
        raw += ids.size
        found.append(ids)
    ids = np.unique(np.concatenate(found)) if found else np.zeros(0, dtype=np.int64)
    return QueryResult(ids, raw)


def insert_record(idx: LshIndex, record_id: int, x) -> LshIndex:
    """Add one record in place; equivalent to rebuilding with it included."""
    record_id = int(record_id)
    if record_id in idx.record_ids:
        raise ValueError(f"record id {record_id} already indexed")
    d = Dataset.from_sets([x], ids=[record_id], dim=idx.config.dim)
    try:
        sig = idx.config.signatures(d, Role.DATA)
    except ValueError as exc:
        raise BuildError(str(exc)) from exc
    for j in range(idx.config.L):
        key = bucket_keys(sig, j, idx.config.K)[0]
        table = idx.tables[j]
        # lexicographic (key, id) position
        lo, hi = _lookup(table, np.array([key]))
        pos = int(lo[0] + np.searchsorted(table["id"][lo[0]:hi[0]], record_id))
        entry = np.array([(key, record_id)], dtype=_PAIR)
        idx.tables[j] = np.insert(table, pos, entry)
    idx.record_ids.add(record_id)
    return idx
