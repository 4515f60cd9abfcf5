import numpy as np
import pytest
from hypothesis import given, strategies as st

from asymhash.harness import gold_standard
from asymhash.hashing import HashScheme, combine
from asymhash.index import (
    BuildError, IndexConfig, LshIndex, Transform, build_index, bucket_key, bucket_keys,
    insert_record, query_index, scheme_config,
)
from asymhash.sparse import Dataset, synthetic_corpus
from asymhash.transforms import Role

SEED = 77


def _random_train(rng, n=60, dim=200, fmax=25):
    return Dataset.from_sets([rng.choice(dim, rng.integers(1, fmax), replace=False)
                              for _ in range(n)], dim=dim)


def test_bucket_key_determinism_and_k1():
    cfg = scheme_config("minhash", 1, 3, 100, 10, SEED)
    v = [1, 5, 9]
    assert bucket_key(cfg, 2, v) == bucket_key(cfg, 2, v)
    h = cfg.signatures(Dataset.from_sets([v], dim=100), Role.DATA, [2])
    seed = np.full(1, np.uint64(0x243F6A8885A308D3))
    assert bucket_key(cfg, 2, v) == int(combine(seed, h[:, 0])[0])
    with pytest.raises(IndexError):
        bucket_key(cfg, 3, v)


def test_full_key_collision_rate_is_r_to_the_k():
    x, y = list(range(10)), list(range(1, 11))  # R = 9/11
    K, trials = 4, 10_000
    cfg = scheme_config("minhash", K, trials, 20, 10, SEED)
    d = Dataset.from_sets([x, y], dim=20)
    sig = cfg.signatures(d, Role.DATA)
    hits = np.mean([bucket_keys(sig, j, K)[0] == bucket_keys(sig, j, K)[1]
                    for j in range(trials)])
    assert hits == pytest.approx((9 / 11) ** K, abs=0.02)


def test_empty_and_single_builds():
    cfg = scheme_config("minhash", 2, 5, 50, 10, SEED)
    empty = build_index(cfg, Dataset.from_sets([], dim=50))
    assert len(empty.tables) == 5 and all(t.size == 0 for t in empty.tables)
    one = build_index(cfg, Dataset.from_sets([[3, 4]], ids=[9], dim=50))
    assert all(t["id"].tolist() == [9] for t in one.tables)


def test_rebuild_is_identical(rng):
    train = _random_train(rng)
    cfg = scheme_config("mh-alsh", 3, 6, 200, train.max_cardinality, SEED)
    a, b = build_index(cfg, train), build_index(cfg, train)
    assert a == b
    for t in a.tables:
        assert np.unique(t["id"]).size == t.size
        assert np.all(np.diff(t["key"].astype(np.float64)) >= 0)


@pytest.mark.parametrize("K, L", [(1, 1), (3, 4), (8, 2)])
def test_identical_query_is_always_candidate(rng, K, L):
    train = _random_train(rng)
    idx = build_index(scheme_config("minhash", K, L, 200, 30, SEED), train)
    for rid, x in train:
        assert rid in query_index(idx, x).ids


def test_raw_count_is_sum_of_matched_buckets(rng):
    train = _random_train(rng, n=80, fmax=6)
    idx = build_index(scheme_config("minhash", 1, 4, 200, 10, SEED), train)
    q = train[0]
    res = query_index(idx, q)
    sig = idx.config.signatures(Dataset.from_sets([q], dim=200), Role.QUERY)
    total = sum(int(np.count_nonzero(idx.tables[j]["key"] == bucket_keys(sig, j, 1)[0]))
                for j in range(4))
    assert res.raw_count == total
    assert res.ids.size <= res.raw_count


@given(st.integers(0, 2 ** 32), st.integers(1, 3), st.integers(1, 6))
def test_candidates_grow_with_tables(seed, K, L):
    rng = np.random.default_rng(seed)
    train = _random_train(rng, n=40, fmax=8)
    q = rng.choice(200, 6, replace=False)
    small = build_index(scheme_config("mh-alsh", K, L, 200, 8, seed), train)
    big = build_index(scheme_config("mh-alsh", K, L + 1, 200, 8, seed), train)
    assert set(query_index(small, q).ids) <= set(query_index(big, q).ids)
    assert set(query_index(big, q, n_tables=L).ids) == set(query_index(small, q).ids)


def test_single_hash_candidate_probability_over_seeds():
    x, q = list(range(6)), list(range(3, 9))  # R = 3/9
    train = Dataset.from_sets([x], ids=[0], dim=12)
    hits = 0
    n = 10_000
    for seed in range(n):
        idx = build_index(scheme_config("minhash", 1, 1, 12, 6, seed), train)
        hits += query_index(idx, q).ids.size
    assert hits / n == pytest.approx(1 / 3, abs=0.02)


def test_more_tables_raise_recall_on_desk_corpus():
    d = synthetic_corpus(seed=11)
    rng = np.random.default_rng(5)
    big = [p for p in range(len(d)) if d.cardinalities[p] >= 30][:50]
    # each query keeps 90% of a train record, so its top list has a close neighbor
    queries = Dataset.from_sets(
        [rng.choice(d[p], int(0.9 * d[p].size), replace=False) for p in big],
        ids=np.arange(len(big)) + 10 ** 6, dim=d.dim)
    gold = gold_standard(d, queries, 10)
    idx = build_index(scheme_config("minhash", 8, 32, d.dim, d.max_cardinality, SEED), d)

    def recall(L):
        return np.mean([np.isin(gold.ids[i], query_index(idx, queries[i], L).ids).mean()
                        for i in range(len(queries))])
    r1, r32 = recall(1), recall(32)
    assert r32 > r1 > 0


def test_insert_matches_rebuild(rng):
    recs = [rng.choice(200, rng.integers(1, 20), replace=False) for _ in range(30)]
    cfg = scheme_config("mh-alsh", 2, 5, 200, 25, SEED)
    full = build_index(cfg, Dataset.from_sets(recs, dim=200))
    part = build_index(cfg, Dataset.from_sets(recs[:-1], dim=200))
    insert_record(part, 29, recs[-1])
    assert part == full
    q = build_index(scheme_config("minhash", 2, 5, 200, 25, SEED),
                    Dataset.from_sets(recs[:-1], dim=200))
    insert_record(q, 29, recs[-1])
    assert 29 in query_index(q, recs[-1]).ids


def test_insert_rejections():
    cfg = scheme_config("mh-alsh", 1, 2, 50, 3, SEED)
    idx = build_index(cfg, Dataset.from_sets([[1, 2]], dim=50))
    with pytest.raises(ValueError):
        insert_record(idx, 0, [3])
    with pytest.raises(BuildError):
        insert_record(idx, 5, [1, 2, 3, 4])


def test_build_error_names_record():
    cfg = scheme_config("mh-alsh", 1, 1, 50, 2, SEED)
    with pytest.raises(BuildError, match="record 7"):
        build_index(cfg, Dataset.from_sets([[1], [1, 2, 3]], ids=[3, 7], dim=50))


def test_incompatible_config():
    with pytest.raises(ValueError):
        IndexConfig(1, 1, HashScheme("srp", 1), Transform.MH_ALSH, 10, 5)
    with pytest.raises(ValueError):
        IndexConfig(0, 1, HashScheme("minhash", 1))
    with pytest.raises(ValueError):
        scheme_config("nope", 1, 1, 10, 5, 1)


@pytest.mark.parametrize("name", ["mh-alsh", "mh-alsh-cws", "minhash", "hs", "l2-alsh",
                                  "sign-alsh", "mh-alsh-prime"])
def test_save_load_roundtrip(tmp_path, rng, name):
    train = _random_train(rng, n=25)
    idx = build_index(scheme_config(name, 2, 3, 200, train.max_cardinality, SEED), train)
    path = tmp_path / "idx.bin"
    idx.save(path)
    back = LshIndex.load(path)
    assert back == idx
    q = train[3]
    assert np.array_equal(query_index(back, q).ids, query_index(idx, q).ids)


def test_load_rejects_unknown_version(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"\x09" + b"\x00" * 100)
    with pytest.raises(ValueError, match="version"):
        LshIndex.load(p)
