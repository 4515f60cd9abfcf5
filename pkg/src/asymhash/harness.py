"""Ranking and (K, L) bucketing experiments against an exact gold standard."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .index import IndexConfig, build_index, scheme_config, table_hits
from .sparse import Dataset, inner_products
from .transforms import Role

RANKING_LEVELS = tuple(round(0.01 * k, 2) for k in range(1, 101))
BUCKET_LEVELS = tuple(round(0.05 * k, 2) for k in range(1, 21))
DESK_K = tuple(range(1, 13))
DESK_L = (1, 2, 4, 8, 16, 32, 64, 128)
FULL_K = tuple(range(1, 41))
FULL_L = tuple(range(1, 401))
RANKING_K = (32, 64, 128)


@dataclass(frozen=True)
class GoldStandard:
    """Per query: the top-T train ids by inner product and their inner products."""

    ids: list[np.ndarray]
    scores: list[np.ndarray]
    T: int

    def __len__(self) -> int:
        return len(self.ids)


def _top_by_score(scores: np.ndarray, ids: np.ndarray, T: int) -> np.ndarray:
    # descending score, ascending id
    return np.lexsort((ids, -scores))[:T]


def gold_standard(train: Dataset, queries: Dataset, T: int) -> GoldStandard:
    """Exact top-T neighbors of every query by binary inner product."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if len(train) == 0:
        return GoldStandard([np.zeros(0, np.int64)] * len(queries),
                            [np.zeros(0, np.int64)] * len(queries), T)
    a = inner_products(train, queries)
    top_ids, top_a = [], []
    for row in a:
        order = _top_by_score(row, train.ids, T)
        top_ids.append(train.ids[order])
        top_a.append(row[order])
    return GoldStandard(top_ids, top_a, T)


def count_matches(config: IndexConfig, q, x, K: int) -> int:
    """Hash indices ``t < K`` on which ``h_t(Q(q)) == h_t(P(x))``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    ts = np.arange(K)
    hq = config.signatures(Dataset.from_sets([q], dim=config.dim), Role.QUERY, ts)
    hx = config.signatures(Dataset.from_sets([x], dim=config.dim), Role.DATA, ts)
    return int(np.count_nonzero(hq == hx))


def match_counts(train_sig: np.ndarray, query_sig: np.ndarray, K: int) -> np.ndarray:
    """``(n_queries, n_train)`` collision counts over the first ``K`` hash indices."""
    out = np.empty((query_sig.shape[0], train_sig.shape[0]), dtype=np.int32)
    t = train_sig[:, :K]
    for i, row in enumerate(query_sig[:, :K]):
        out[i] = np.count_nonzero(t == row[None, :], axis=1)
    return out


def precision_at_levels(ranked_relevant: np.ndarray, n_relevant: int,
                        levels: Sequence[float]) -> np.ndarray:
    """Precision at the first rank where recall reaches each level (NaN if never)."""
    cum = np.cumsum(ranked_relevant)
    need = np.ceil(np.asarray(levels) * n_relevant - 1e-9).astype(np.int64)
    need = np.maximum(need, 1)
    pos = np.searchsorted(cum, need, side="left")
    out = np.full(need.size, np.nan)
    ok = pos < cum.size
    out[ok] = need[ok] / (pos[ok] + 1)
    return out


@dataclass
class RankingReport:
    levels: tuple[float, ...]
    # (scheme, K) -> mean precision per recall level
    curves: dict[tuple[str, int], np.ndarray] = field(default_factory=dict)

    def precision_at(self, scheme: str, K: int, recall: float) -> float:
        i = int(np.argmin(np.abs(np.asarray(self.levels) - recall)))
        return float(self.curves[(scheme, K)][i])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scheme", "K", "recall", "precision"])
        for (scheme, K) in sorted(self.curves):
            for lvl, p in zip(self.levels, self.curves[(scheme, K)]):
                w.writerow([scheme, K, f"{lvl:.6g}", f"{p:.6g}"])
        return buf.getvalue()


ConfigFactory = Callable[[str, int, int], IndexConfig]


def default_factory(train: Dataset, queries: Dataset, seed: int, **params) -> ConfigFactory:
    """Configs for named schemes with ``M`` from the train partition and a shared universe."""
    dim = max(train.dim, queries.dim)
    M = max(train.max_cardinality, 1)

    def make(name: str, K: int, L: int) -> IndexConfig:
        return scheme_config(name, K, L, dim, M, seed, **params)
    return make


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def ranking_experiment(train: Dataset, queries: Dataset, schemes: Sequence[str],
                       K_list: Sequence[int] = RANKING_K, T: int = 100, seed: int = 0,
                       levels: Sequence[float] = RANKING_LEVELS,
                       factory: ConfigFactory | None = None, threads: int = 1,
                       gold: GoldStandard | None = None) -> RankingReport:
    """Rank train records by hash matches with each query; score against the top-T gold list.

    Ties in match counts are broken by ascending record id.
    """
    if T > len(train):
        raise ValueError(f"T={T} exceeds the {len(train)} train records")
    if any(K < 1 for K in K_list):
        raise ValueError("K must be >= 1")
    factory = factory or default_factory(train, queries, seed)
    gold = gold if gold is not None and gold.T >= T else gold_standard(train, queries, T)
    relevant = [np.isin(train.ids, g[:T]) for g in gold.ids]
    Kmax = max(K_list)

    def run(scheme: str):
        cfg = factory(scheme, Kmax, 1)
        ts = np.arange(Kmax)
        tsig = cfg.signatures(train, Role.DATA, ts)
        qsig = cfg.signatures(queries, Role.QUERY, ts)
        res = {}
        for K in K_list:
            matches = match_counts(tsig, qsig, K)
            prec = np.zeros(len(levels))
            for i in range(len(queries)):
                order = np.lexsort((train.ids, -matches[i]))
                prec += precision_at_levels(relevant[i][order], T, levels)
            res[(scheme, K)] = prec / max(len(queries), 1)
        return res

    report = RankingReport(tuple(levels))
    for part in _map(run, list(schemes), threads):
        report.curves.update(part)
    return report


@dataclass(frozen=True)
class SweepPoint:
    scheme: str
    T: int
    K: int
    L: int
    recall: float
    fraction: float
    raw_fraction: float


@dataclass
class BucketingReport:
    sweep: list[SweepPoint]
    # (scheme, T, level) -> (fraction, K, L)
    best: dict[tuple[str, int, float], tuple[float, int, int]]

    def best_fraction(self, scheme: str, T: int, level: float) -> float | None:
        hit = self.best.get((scheme, T, level))
        return None if hit is None else hit[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scheme", "T", "recall_level", "fraction", "bestK", "bestL"])
        for key in sorted(self.best):
            scheme, T, level = key
            frac, K, L = self.best[key]
            w.writerow([scheme, T, f"{level:.6g}", f"{frac:.6g}", K, L])
        return buf.getvalue()

    def sweep_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scheme", "T", "K", "L", "recall", "fraction", "raw_fraction"])
        for p in sorted(self.sweep, key=lambda p: (p.scheme, p.T, p.K, p.L)):
            w.writerow([p.scheme, p.T, p.K, p.L, f"{p.recall:.6g}", f"{p.fraction:.6g}",
                        f"{p.raw_fraction:.6g}"])
        return buf.getvalue()


def select_best(sweep: Iterable[SweepPoint], levels: Sequence[float]):
    """Per (scheme, T, level): the cheapest (K, L) whose mean recall reaches the level."""
    best: dict[tuple[str, int, float], tuple[float, int, int]] = {}
    for p in sweep:
        for level in levels:
            if p.recall + 1e-12 < level:
                continue
            key = (p.scheme, p.T, level)
            cand = (p.fraction, p.K, p.L)
            if key not in best or cand < best[key]:
                best[key] = cand
    return best


def bucketing_experiment(train: Dataset, queries: Dataset, schemes: Sequence[str],
                         K_range: Sequence[int] = DESK_K, L_range: Sequence[int] = DESK_L,
                         T_list: Sequence[int] = (5, 10, 20, 50), seed: int = 0,
                         levels: Sequence[float] = BUCKET_LEVELS,
                         factory: ConfigFactory | None = None, threads: int = 1,
                         gold: GoldStandard | None = None) -> BucketingReport:
    """Sweep (K, L); record mean top-T recall and mean fraction of the train set retrieved.

    For each K one index with ``max(L_range)`` tables is built; because table
    ``j`` only depends on hash indices ``j*K .. j*K + K - 1``, its first ``L``
    tables are exactly the index with ``L`` tables.
    """
    if not K_range or not L_range or not T_list:
        raise ValueError("K_range, L_range and T_list must be non-empty")
    factory = factory or default_factory(train, queries, seed)
    n = len(train)
    Tmax = min(max(T_list), n)
    gold = gold if gold is not None and gold.T >= Tmax else gold_standard(train, queries, Tmax)
    id_order = np.argsort(train.ids)
    sorted_ids = train.ids[id_order]
    gold_pos = [id_order[np.searchsorted(sorted_ids, g)] for g in gold.ids]
    Ls = set(L_range)
    Lmax = max(L_range)
    Kmax = max(K_range)
    nq = len(queries)

    def run(scheme: str):
        cfg = factory(scheme, Kmax, Lmax)
        ts = np.arange(Kmax * Lmax)
        tsig = cfg.signatures(train, Role.DATA, ts)
        qsig = cfg.signatures(queries, Role.QUERY, ts)
        points = []
        for K in sorted(set(K_range)):
            idx = build_index(factory(scheme, K, Lmax), train, tsig[:, :K * Lmax])
            member = np.zeros((nq, n), dtype=bool)
            raw = np.zeros(nq, dtype=np.int64)
            for j, rows, ids in table_hits(idx, qsig):
                member[rows, id_order[np.searchsorted(sorted_ids, ids)]] = True
                raw += np.bincount(rows, minlength=nq)
                L = j + 1
                if L not in Ls:
                    continue
                frac = float(member.sum(axis=1).mean()) / n
                raw_frac = float(raw.mean()) / n
                for T in T_list:
                    Tq = min(T, n)
                    rec = np.mean([member[i, gold_pos[i][:Tq]].sum() / Tq for i in range(nq)])
                    points.append(SweepPoint(scheme, T, K, L, float(rec), frac, raw_frac))
        return points

    sweep = [p for part in _map(run, list(schemes), threads) for p in part]
    return BucketingReport(sweep, select_best(sweep, levels))
