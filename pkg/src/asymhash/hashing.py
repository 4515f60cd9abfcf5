"""Randomized hash families as deterministic functions of (seed, hash index, input).

Every family has a batch form that maps a CSR collection and an array of
hash indices ``t`` to an ``(n_records, n_hashes)`` ``uint64`` signature matrix,
plus a single-value convenience wrapper. Randomness is counter based: all
draws come from a keyed 64-bit mixer, so no random state is carried around.

Families:

* ``minhash``: min over ``x`` of ``mix(seed, t, i)``. ``i -> mix(seed, t, i)`` is a
  bijection on 64-bit integers and stands in for a random permutation.
* ``hs``: sample one coordinate; 0 on a hit, otherwise a uniform draw from
  ``[1, N]`` keyed by a caller-supplied entity id.
* ``srp``: sign of a Gaussian projection, stored as 1 (``>= 0``) or 0.
* ``l2lsh``: ``floor((w.v + b) / r)`` stored as a two's complement ``uint64``.
* ``cws``: Ioffe's consistent weighted sampling, ``(index, t)`` packed into one value.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np


U64 = np.uint64
MAX_U64 = np.iinfo(np.uint64).max
DEFAULT_SEED = 0x5EED_A5A5_2014
SEED_ENV = "ASYMHASH_SEED"

_C1 = U64(0xFF51AFD7ED558CCD)
_C2 = U64(0xC4CEB9FE1A85EC53)
_GOLD = U64(0x9E3779B97F4A7C15)
_ODD = U64(0xD6E8FEB86659FD93)
_2M32 = 2.0 ** -32
_2M53 = 2.0 ** -53

# independent random streams per hash index
_S_PERM, _S_COORD, _S_FALLBACK, _S_GAUSS, _S_OFFSET, _S_R, _S_C, _S_BETA = range(1, 9)

# elements per (hash-index x entry) block materialized at once
_BLOCK = 1 << 22


class EmptyInputError(ValueError):
    """Hashing an empty set or empty weighted vector is undefined."""


def default_seed() -> int:
    """Master seed: ``$ASYMHASH_SEED`` when set, else the fixed package default."""
    raw = os.environ.get(SEED_ENV)
    return int(raw, 0) if raw else DEFAULT_SEED


class HashKind(str, enum.Enum):
    MINHASH = "minhash"
    SAMPLE_HS = "hs"
    SRP = "srp"
    L2LSH = "l2lsh"
    CWS = "cws"


@dataclass(frozen=True)
class HashScheme:
    """Hash family descriptor.

    ``N`` is the fallback range of ``hs``; ``r`` is the ``l2lsh`` bucket width;
    ``effective_dim`` records the index domain the hashes act on (including any
    padding regions) and is informational for the coordinate-free families.
    """

    kind: HashKind
    master_seed: int = DEFAULT_SEED
    N: int = 2 ** 31
    r: float = 2.5
    effective_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", HashKind(self.kind))
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if not self.r > 0:
            raise ValueError("r must be positive")
        if self.effective_dim < 1:
            raise ValueError("effective_dim must be >= 1")


def fmix64(z: np.ndarray) -> np.ndarray:
    """Murmur3 finalizer; a bijection on uint64 (operates in place when possible)."""
    z = np.array(z, dtype=np.uint64, copy=True) if not isinstance(z, np.ndarray) else z
    z ^= z >> U64(33)
    z *= _C1
    z ^= z >> U64(33)
    z *= _C2
    z ^= z >> U64(33)
    return z


def _u64(x: int) -> np.ndarray:
    return np.array([int(x) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)


def stream_keys(seed: int, ts: np.ndarray, stream: int) -> np.ndarray:
    """One 64-bit key per hash index for the given stream."""
    base = fmix64(_u64(seed) ^ fmix64(_u64(stream) * _GOLD + _ODD))
    return fmix64(np.asarray(ts, dtype=np.uint64) * _ODD + base)


def mix(keys: np.ndarray, items: np.ndarray) -> np.ndarray:
    """``mix(key, i)`` for every (key, item) pair, shape ``(len(keys), len(items))``.

    For a fixed key the map is injective in the item.
    """
    items = np.asarray(items, dtype=np.uint64) * _GOLD
    return fmix64(items[None, :] ^ np.asarray(keys, dtype=np.uint64)[:, None])


def _upper_uniform(z: np.ndarray) -> np.ndarray:
    # 32-bit uniform on (0, 1]
    return ((z >> U64(32)).astype(np.float64) + 1.0) * _2M32


def _lower_uniform(z: np.ndarray) -> np.ndarray:
    # 32-bit uniform on [0, 1)
    return (z & U64(0xFFFFFFFF)).astype(np.float64) * _2M32


def _uniform53(z: np.ndarray) -> np.ndarray:
    return (z >> U64(11)).astype(np.float64) * _2M53


def gaussian(keys: np.ndarray, items: np.ndarray) -> np.ndarray:
    """Standard normal deviates keyed by (key, item) via Box-Muller."""
    z = mix(keys, items)
    return np.sqrt(-2.0 * np.log(_upper_uniform(z))) * np.cos(2.0 * np.pi * _lower_uniform(z))


def _gamma2(z: np.ndarray) -> np.ndarray:
    # Gamma(2, 1) as a sum of two unit exponentials
    return -np.log(_upper_uniform(z)) - np.log(1.0 - _lower_uniform(z))


def combine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pack two uint64 arrays into one well-mixed value per position."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    return fmix64(fmix64(a * _GOLD + _ODD) ^ (b * _ODD))


def _hash_indices(ts) -> np.ndarray:
    ts = np.atleast_1d(np.asarray(ts, dtype=np.int64))
    if ts.size and ts.min() < 0:
        raise ValueError("hash indices must be non-negative")
    return ts.astype(np.uint64)


def _chunks(n_t: int, width: int):
    step = max(1, _BLOCK // max(width, 1))
    for lo in range(0, n_t, step):
        yield lo, min(n_t, lo + step)


def _segments(indptr: np.ndarray):
    indptr = np.asarray(indptr, dtype=np.int64)
    lengths = np.diff(indptr)
    nonempty = lengths > 0
    return lengths, nonempty, indptr[:-1][nonempty]


def minhash_signatures(seed: int, indptr: np.ndarray, indices: np.ndarray, ts,
                       pads: Sequence[tuple[int, np.ndarray]] = ()) -> np.ndarray:
    """Minhash signature matrix, optionally over virtually padded sets.

    Each entry of ``pads`` is ``(offset, counts)``: record ``k`` additionally
    contains the contiguous indices ``offset .. offset + counts[k] - 1``. The
    minimum over such a prefix comes from a per-hash prefix-minimum table, so
    padding costs ``O(max count)`` per hash index, independent of ``n``.
    """
    ts = _hash_indices(ts)
    indices = np.asarray(indices, dtype=np.int64)
    n = len(indptr) - 1
    lengths, nonempty, starts = _segments(indptr)
    pads = [(int(off), np.asarray(cnt, dtype=np.int64)) for off, cnt in pads]
    covered = nonempty.copy()
    for _, cnt in pads:
        covered |= cnt > 0
    if n and not covered.all():
        raise EmptyInputError(f"record at position {int(np.argmin(covered))} is empty")
    width = indices.size + sum(int(c.max(initial=0)) for _, c in pads)
    out = np.empty((n, ts.size), dtype=np.uint64)
    for lo, hi in _chunks(ts.size, width):
        keys = stream_keys(seed, ts[lo:hi], _S_PERM)
        block = np.full((n, hi - lo), MAX_U64, dtype=np.uint64)
        if starts.size:
            block[nonempty] = np.minimum.reduceat(mix(keys, indices), starts, axis=1).T
        for off, cnt in pads:
            top = int(cnt.max(initial=0))
            if top == 0:
                continue
            pref = np.minimum.accumulate(mix(keys, off + np.arange(top)), axis=1)
            has = cnt > 0
            block[has] = np.minimum(block[has], pref[:, cnt[has] - 1].T)
        out[:, lo:hi] = block
    return out


def hs_signatures(seed: int, indptr: np.ndarray, indices: np.ndarray, dim: int, ts,
                  entities: np.ndarray, N: int = 2 ** 31) -> np.ndarray:
    """Sampling hash: 0 if the sampled coordinate is present, else ``rand(1, N)``.

    The fallback draw is keyed by ``entities[k]`` so distinct entities draw
    independently.
    """
    if dim <= 0:
        raise ValueError("dimension must be positive")
    ts = _hash_indices(ts)
    indices = np.asarray(indices, dtype=np.int64)
    entities = np.asarray(entities, dtype=np.uint64)
    n = len(indptr) - 1
    _, nonempty, starts = _segments(indptr)
    out = np.empty((n, ts.size), dtype=np.uint64)
    for lo, hi in _chunks(ts.size, indices.size + n):
        tk = ts[lo:hi]
        coord = np.floor(_uniform53(stream_keys(seed, tk, _S_COORD)) * dim).astype(np.int64)
        hit = np.zeros((n, hi - lo), dtype=bool)
        if starts.size:
            eq = indices[None, :] == coord[:, None]
            hit[nonempty] = np.logical_or.reduceat(eq, starts, axis=1).T
        draws = _uniform53(mix(stream_keys(seed, tk, _S_FALLBACK), entities)).T
        fallback = (1 + np.floor(draws * N)).astype(np.uint64)
        out[:, lo:hi] = np.where(hit, U64(0), fallback)
    return out


def _projections(seed: int, indptr, indices, values, ts_chunk, nonempty, starts, n):
    w = gaussian(stream_keys(seed, ts_chunk, _S_GAUSS), indices)
    proj = np.zeros((n, ts_chunk.size), dtype=np.float64)
    if starts.size:
        proj[nonempty] = np.add.reduceat(w * values[None, :], starts, axis=1).T
    return proj


def srp_signatures(seed: int, indptr: np.ndarray, indices: np.ndarray, values: np.ndarray,
                   ts) -> np.ndarray:
    """Signed random projections; 1 encodes a non-negative projection."""
    ts = _hash_indices(ts)
    indices = np.asarray(indices, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    n = len(indptr) - 1
    _, nonempty, starts = _segments(indptr)
    out = np.empty((n, ts.size), dtype=np.uint64)
    for lo, hi in _chunks(ts.size, indices.size):
        proj = _projections(seed, indptr, indices, values, ts[lo:hi], nonempty, starts, n)
        out[:, lo:hi] = (proj >= 0.0).astype(np.uint64)
    return out


def l2lsh_signatures(seed: int, indptr: np.ndarray, indices: np.ndarray, values: np.ndarray,
                     ts, r: float) -> np.ndarray:
    """p-stable L2 buckets ``floor((w.v + b) / r)``."""
    if not r > 0:
        raise ValueError("r must be positive")
    ts = _hash_indices(ts)
    indices = np.asarray(indices, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    n = len(indptr) - 1
    _, nonempty, starts = _segments(indptr)
    out = np.empty((n, ts.size), dtype=np.uint64)
    for lo, hi in _chunks(ts.size, indices.size):
        tk = ts[lo:hi]
        proj = _projections(seed, indptr, indices, values, tk, nonempty, starts, n)
        b = r * _uniform53(stream_keys(seed, tk, _S_OFFSET))
        out[:, lo:hi] = np.floor((proj + b[None, :]) / r).astype(np.int64).view(np.uint64)
    return out


def cws_signatures(seed: int, indptr: np.ndarray, indices: np.ndarray, weights: np.ndarray,
                   ts) -> np.ndarray:
    """Consistent weighted sampling over positive weights.

    For each active index ``i`` with weight ``w_i``: ``r, c ~ Gamma(2, 1)`` and
    ``beta ~ U[0, 1)`` keyed by ``(seed, t, i)``; ``t_i = floor(ln w_i / r + beta)``,
    ``ln a_i = ln c - r (t_i - beta) - r``. The hash is ``(argmin a_i, t_argmin)``.
    """
    ts = _hash_indices(ts)
    indices = np.asarray(indices, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.size and not (weights > 0).all():
        raise ValueError("consistent weighted sampling needs positive weights")
    n = len(indptr) - 1
    lengths, nonempty, starts = _segments(indptr)
    if n and not nonempty.all():
        raise EmptyInputError(f"record at position {int(np.argmin(nonempty))} is empty")
    lnw = np.log(weights)[None, :]
    entry = np.arange(indices.size)[None, :]
    out = np.empty((n, ts.size), dtype=np.uint64)
    for lo, hi in _chunks(ts.size, 4 * indices.size):
        tk = ts[lo:hi]
        r = _gamma2(mix(stream_keys(seed, tk, _S_R), indices))
        ln_c = np.log(_gamma2(mix(stream_keys(seed, tk, _S_C), indices)))
        beta = _uniform53(mix(stream_keys(seed, tk, _S_BETA), indices))
        tt = np.floor(lnw / r + beta)
        ln_a = ln_c - r * (tt - beta) - r
        seg_min = np.minimum.reduceat(ln_a, starts, axis=1)
        at_min = ln_a == np.repeat(seg_min, lengths, axis=1)
        first = np.minimum.reduceat(np.where(at_min, entry, indices.size), starts, axis=1)
        chosen_t = np.take_along_axis(tt, first, axis=1).astype(np.int64)
        out[:, lo:hi] = combine(indices[first], chosen_t.view(np.uint64)).T
    return out


# ---------------------------------------------------------------------------
# single-value wrappers


def _single_set(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    return x


def _require(s: HashScheme, kind: HashKind):
    if s.kind is not kind:
        raise ValueError(f"scheme kind is {s.kind.value}, expected {kind.value}")


def _sparse_real(v) -> tuple[np.ndarray, np.ndarray]:
    """Accept a dense 1-D vector, an ``(indices, values)`` pair, or a weighted vector."""
    if hasattr(v, "indices") and hasattr(v, "weights"):
        return np.asarray(v.indices, dtype=np.int64), np.asarray(v.weights, dtype=np.float64)
    if isinstance(v, tuple) and len(v) == 2:
        return np.asarray(v[0], dtype=np.int64), np.asarray(v[1], dtype=np.float64)
    dense = np.asarray(v, dtype=np.float64)
    nz = np.flatnonzero(dense)
    return nz.astype(np.int64), dense[nz]


def _one_row(n: int) -> np.ndarray:
    return np.array([0, n], dtype=np.int64)


def minhash(s: HashScheme, t: int, x) -> int:
    _require(s, HashKind.MINHASH)
    x = _single_set(x)
    if x.size == 0:
        raise EmptyInputError("minhash of an empty set is undefined")
    return int(minhash_signatures(s.master_seed, _one_row(x.size), x, [t])[0, 0])


def sample_hash_hs(s: HashScheme, t: int, x, D: int, entity: int = 0) -> int:
    _require(s, HashKind.SAMPLE_HS)
    x = _single_set(x)
    return int(hs_signatures(s.master_seed, _one_row(x.size), x, D, [t], [entity], s.N)[0, 0])


def srp_hash(s: HashScheme, t: int, v) -> int:
    _require(s, HashKind.SRP)
    idx, val = _sparse_real(v)
    return int(srp_signatures(s.master_seed, _one_row(idx.size), idx, val, [t])[0, 0])


def l2lsh_hash(s: HashScheme, t: int, v) -> int:
    _require(s, HashKind.L2LSH)
    idx, val = _sparse_real(v)
    raw = l2lsh_signatures(s.master_seed, _one_row(idx.size), idx, val, [t], s.r)
    return int(raw.view(np.int64)[0, 0])


def cws_hash(s: HashScheme, t: int, v) -> int:
    _require(s, HashKind.CWS)
    idx, w = _sparse_real(v)
    if idx.size == 0:
        raise EmptyInputError("consistent weighted sampling of an empty vector is undefined")
    return int(cws_signatures(s.master_seed, _one_row(idx.size), idx, w, [t])[0, 0])


def hash_values(s: HashScheme, x, ts, entity: int = 0, D: int | None = None) -> np.ndarray:
    """Hash values of one input for every hash index in ``ts``.

    ``x`` is a set for ``minhash``/``hs`` (or any object exposing
    ``base``/``padding()`` for virtually padded sets), a weighted vector for
    ``cws``, and a real vector for ``srp``/``l2lsh``.
    """
    seed = s.master_seed
    if s.kind is HashKind.MINHASH:
        if hasattr(x, "padding"):
            base = np.asarray(x.base, dtype=np.int64)
            pads = [(off, np.array([cnt])) for off, cnt in x.padding()]
            return minhash_signatures(seed, _one_row(base.size), base, ts, pads)[0]
        x = _single_set(x)
        if x.size == 0:
            raise EmptyInputError("minhash of an empty set is undefined")
        return minhash_signatures(seed, _one_row(x.size), x, ts)[0]
    if s.kind is HashKind.SAMPLE_HS:
        if D is None:
            raise ValueError("hs hashing needs the universe size D")
        x = _single_set(x)
        return hs_signatures(seed, _one_row(x.size), x, D, ts, [entity], s.N)[0]
    idx, val = _sparse_real(x)
    if s.kind is HashKind.SRP:
        return srp_signatures(seed, _one_row(idx.size), idx, val, ts)[0]
    if s.kind is HashKind.L2LSH:
        return l2lsh_signatures(seed, _one_row(idx.size), idx, val, ts, s.r)[0]
    if idx.size == 0:
        raise EmptyInputError("consistent weighted sampling of an empty vector is undefined")
    return cws_signatures(seed, _one_row(idx.size), idx, val, ts)[0]


def estimate_collision(s: HashScheme, u, v, K: int, D: int | None = None) -> float:
    """Fraction of hash indices ``t in [0, K)`` on which ``u`` and ``v`` collide.

    For ``hs`` the two inputs are hashed as distinct entities (ids 0 and 1), so
    their fallback draws are independent.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    ts = np.arange(K)
    hu = hash_values(s, u, ts, entity=0, D=D)
    hv = hash_values(s, v, ts, entity=1, D=D)
    return float(np.count_nonzero(hu == hv)) / K
