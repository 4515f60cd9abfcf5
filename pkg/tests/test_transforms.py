import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from asymhash.hashing import HashScheme, estimate_collision, minhash
from asymhash.sparse import Dataset
from asymhash.transforms import (
    CardinalityError, CardinalityWarning, MhRole, PaddedBinarySet, Role, WeightedSparseVector,
    augmented_csr, mh_pads, padded_minhash, transform_l2alsh, transform_mh, transform_signalsh,
    transform_weighted, transform_weighted_intersection, weighted_jaccard,
)

D = 50
SEED = 42
MH = HashScheme("minhash", SEED)


def _frac_jaccard(u: WeightedSparseVector, v: WeightedSparseVector) -> Fraction:
    a = {i: Fraction(w) for i, w in u.pairs()}
    b = {i: Fraction(w) for i, w in v.pairs()}
    keys = set(a) | set(b)
    lo = sum(min(a.get(k, 0), b.get(k, 0)) for k in keys)
    hi = sum(max(a.get(k, 0), b.get(k, 0)) for k in keys)
    return lo / hi


@st.composite
def pair_and_M(draw, dim=D):
    x = draw(st.sets(st.integers(0, dim - 1), max_size=20))
    q = draw(st.sets(st.integers(0, dim - 1), max_size=20))
    M = draw(st.integers(max(len(x), len(q), 1), 40))
    return sorted(x), sorted(q), M


def test_double_padding_examples():
    p = transform_mh([0, 1], 5, MhRole.DATA_DOUBLE, D)
    assert (p.pad1_count, p.pad2_count, p.cardinality) == (3, 0, 5)
    q = transform_mh([0, 1, 2], 5, MhRole.QUERY_DOUBLE, D)
    assert (q.pad1_count, q.pad2_count) == (0, 2)
    px, pq = set(p.materialize()), set(q.materialize())
    assert Fraction(len(px & pq), len(px | pq)) == Fraction(2, 8)


def test_full_record_has_no_padding():
    p = transform_mh([0, 1, 2], 3, MhRole.DATA_DOUBLE, D)
    assert p.pad1_count == 0 and p.materialize().tolist() == [0, 1, 2]


def test_prime_roles():
    p = transform_mh([0, 1], 5, MhRole.DATA_PRIME, D)
    q = transform_mh([0, 1, 2], 5, MhRole.QUERY_PRIME, D)
    assert (p.pad1_count, p.pad2_count, q.pad1_count, q.pad2_count) == (3, 0, 0, 0)


def test_padding_regions_are_prefixes():
    p = PaddedBinarySet(np.array([1]), 2, 3, 4, 10)
    assert p.materialize().tolist() == [1, 10, 11, 14, 15, 16]
    with pytest.raises(ValueError):
        PaddedBinarySet(np.array([1]), 5, 0, 4, 10)


def test_data_over_M_rejected_query_clamped():
    with pytest.raises(CardinalityError):
        transform_mh([0, 1, 2], 2, MhRole.DATA_DOUBLE, D)
    with pytest.warns(CardinalityWarning):
        q = transform_mh([0, 1, 2], 2, MhRole.QUERY_DOUBLE, D)
    assert q.clamped and q.pad2_count == 0


def test_transform_rejects_out_of_universe():
    with pytest.raises(ValueError):
        transform_mh([D], 5, MhRole.DATA_DOUBLE, D)


@given(pair_and_M())
def test_double_padding_law_exact(case):
    x, q, M = case
    a = len(set(x) & set(q))
    px = set(transform_mh(x, M, MhRole.DATA_DOUBLE, D).materialize().tolist())
    pq = set(transform_mh(q, M, MhRole.QUERY_DOUBLE, D).materialize().tolist())
    assert len(px & pq) == a
    assert len(px | pq) == 2 * M - a


@given(pair_and_M())
def test_single_padding_law_exact(case):
    x, q, M = case
    a = len(set(x) & set(q))
    px = set(transform_mh(x, M, MhRole.DATA_PRIME, D).materialize().tolist())
    pq = set(transform_mh(q, M, MhRole.QUERY_PRIME, D).materialize().tolist())
    assert (len(px & pq), len(px | pq)) == (a, M + len(q) - a)


def test_padded_minhash_without_padding_is_plain():
    p = PaddedBinarySet(np.array([3, 8, 9]), 0, 0, 5, D)
    assert all(padded_minhash(MH, t, p) == minhash(MH, t, [3, 8, 9]) for t in range(50))


def test_padded_minhash_matches_materialized(rng):
    for case in range(1000):
        f = int(rng.integers(0, 15))
        M = int(rng.integers(max(f, 1), 30))
        x = np.sort(rng.choice(D, f, replace=False))
        role = [MhRole.DATA_DOUBLE, MhRole.QUERY_DOUBLE, MhRole.DATA_PRIME][case % 3]
        p = transform_mh(x, M, role, D)
        if p.cardinality == 0:
            continue
        t = int(rng.integers(0, 10 ** 6))
        assert padded_minhash(MH, t, p) == minhash(MH, t, p.materialize())


def test_padded_minhash_collision_law():
    x, q, M = list(range(10)), list(range(4, 16)), 20
    p = transform_mh(x, M, MhRole.DATA_DOUBLE, D)
    r = transform_mh(q, M, MhRole.QUERY_DOUBLE, D)
    assert estimate_collision(MH, p, r, 100_000) == pytest.approx(6 / 34, abs=0.01)


def test_batch_pads_match_single(rng):
    recs = [rng.choice(D, rng.integers(0, 8), replace=False) for _ in range(5)]
    d = Dataset.from_sets(recs, dim=D)
    (off, counts), = mh_pads(d, 10, MhRole.QUERY_DOUBLE)
    assert off == D + 10
    assert counts.tolist() == [10 - len(set(r)) for r in recs]
    assert mh_pads(d, 10, MhRole.QUERY_PRIME) == []


def test_weighted_examples():
    u = transform_weighted([0, 1], 5, Role.DATA, D)
    assert u.pairs() == [(0, 1.0), (1, 1.0), (D, 3.0)]
    assert transform_weighted([0, 1], 2, Role.DATA, D).pairs() == [(0, 1.0), (1, 1.0)]
    v = transform_weighted([0, 1, 2], 5, Role.QUERY, D)
    assert v.pairs()[-1] == (D + 1, 2.0)
    assert _frac_jaccard(u, v) == Fraction(2, 8)
    assert weighted_jaccard(u, v) == pytest.approx(0.25)


@given(pair_and_M())
def test_weighted_law_is_exact_in_rationals(case):
    x, q, M = case
    a = len(set(x) & set(q))
    u = transform_weighted(x, M, Role.DATA, D)
    v = transform_weighted(q, M, Role.QUERY, D)
    if 2 * M - a == 0:
        return
    assert _frac_jaccard(u, v) == Fraction(a, 2 * M - a)


def test_weighted_cardinality_errors():
    with pytest.raises(CardinalityError):
        transform_weighted([0, 1, 2], 2, Role.DATA, D)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        v = transform_weighted([0, 1, 2], 2, Role.QUERY, D)
    assert any(issubclass(i.category, CardinalityWarning) for i in w)
    assert v.pairs() == [(0, 1.0), (1, 1.0), (2, 1.0)]


def test_weighted_intersection_examples():
    v = WeightedSparseVector.from_pairs([(0, 2.0)])
    assert transform_weighted_intersection(v, 5, Role.DATA, D).pairs() == [(0, 2.0), (D, 3.0)]
    full = WeightedSparseVector.from_pairs([(0, 2.0), (3, 3.0)])
    assert transform_weighted_intersection(full, 5, Role.DATA, D).pairs() == full.pairs()
    with pytest.raises(CardinalityError):
        transform_weighted_intersection(full, 4, Role.DATA, D)


def test_weighted_intersection_is_monotone_in_overlap():
    q = WeightedSparseVector.from_pairs([(0, 1.0), (1, 2.0), (2, 1.5)])
    xs = [[(0, 0.5), (7, 1.0)], [(0, 1.0), (1, 0.5)], [(0, 1.0), (1, 2.0), (2, 0.5)]]
    Q = transform_weighted_intersection(q, 6.0, Role.QUERY, D)
    vals = []
    for pairs in xs:
        x = WeightedSparseVector.from_pairs(pairs)
        vals.append(_frac_jaccard(transform_weighted_intersection(x, 6.0, Role.DATA, D), Q))
    assert vals[0] < vals[1] < vals[2]
    # s / (2M - s) with s = 1 + 2 + 0.5
    assert vals[2] == Fraction(7, 17)


def test_l2alsh_tails():
    z = transform_l2alsh(np.zeros(3), Role.DATA, m=2, U=0.5)
    assert z.tail.tolist() == [0.0, 0.0, 0.5, 0.5]
    v = np.array([0.8, 0.0])
    t = transform_l2alsh(v, Role.DATA, m=2, U=0.5, V=0.5).tail
    assert np.allclose(t, [0.64, 0.4096, 0.5, 0.5])
    assert np.allclose(transform_l2alsh(v, Role.QUERY, m=2, U=0.5, V=0.5).tail,
                       [0.5, 0.5, 0.64, 0.4096])


def test_signalsh_tails():
    assert transform_signalsh(np.zeros(2), Role.DATA, m=2).tail.tolist() == [0.5, 0.5, 0, 0]
    v = np.array([0.5, 0.0])
    assert np.allclose(transform_signalsh(v, Role.DATA, m=1, U=0.5, V=0.5).tail, [0.25, 0.0])


def test_alsh_parameter_checks():
    with pytest.raises(ValueError):
        transform_l2alsh(np.ones(2), Role.DATA, V=0)
    with pytest.raises(ValueError):
        transform_signalsh(np.ones(2), Role.DATA, U=1.5)


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4),
       st.lists(st.floats(-1, 1), min_size=4, max_size=4), st.integers(1, 4))
def test_alsh_inner_products(x, q, m):
    x, q = np.array(x), np.array(q)
    U, V = 0.8, 2.0
    s = U / V
    px, pq = transform_l2alsh(x, Role.DATA, m, U, V), transform_l2alsh(q, Role.QUERY, m, U, V)
    nx, nq = np.linalg.norm(x * s), np.linalg.norm(q * s)
    powers = 2.0 ** np.arange(1, m + 1)
    expected = s * s * x @ q + 0.5 * (nx ** powers).sum() + 0.5 * (nq ** powers).sum()
    assert px.values @ pq.values == pytest.approx(expected, abs=1e-9)
    sx, sq = transform_signalsh(x, Role.DATA, m, U, V), transform_signalsh(q, Role.QUERY, m, U, V)
    assert sx.values @ sq.values == pytest.approx(s * s * x @ q, abs=1e-12)


def test_augmented_csr_matches_dense(rng):
    recs = [rng.choice(20, rng.integers(1, 8), replace=False) for _ in range(4)]
    d = Dataset.from_sets(recs, dim=20)
    for sign, fn in ((False, transform_l2alsh), (True, transform_signalsh)):
        for role in Role:
            indptr, idx, val = augmented_csr(d, role, 2, 0.7, 3.0, sign)
            for i, r in enumerate(recs):
                dense = np.zeros(24)
                dense[idx[indptr[i]:indptr[i + 1]]] = val[indptr[i]:indptr[i + 1]]
                v = np.zeros(20)
                v[r] = 1
                assert np.allclose(dense, fn(v, role, 2, 0.7, 3.0).values)


def test_weighted_vector_validation():
    w = WeightedSparseVector.from_pairs([(4, 1.0), (1, 0.0), (2, 2.0)])
    assert w.pairs() == [(2, 2.0), (4, 1.0)]
    with pytest.raises(ValueError):
        WeightedSparseVector.from_pairs([(1, 1.0), (1, 2.0)])
