"""Command-line entry point: ``asymhash <subcommand> [flags]``.

Every subcommand writes CSV (comma separated, header row, LF, UTF-8) to
``--output`` or standard output. Module errors are reported as one line on
standard error with exit code 1; usage errors exit with code 2.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from typing import Sequence

import numpy as np

from . import harness, theory
from .hashing import HashScheme, default_seed, estimate_collision
from .index import SCHEME_NAMES, scheme_config
from .sparse import (
    FORMATS, INDEX_LIST, Dataset, compute_stats, intersection_size, parse_dataset,
    partition_dataset, synthetic_corpus, write_index_list,
)
from .transforms import MhRole, Role, transform_mh, transform_weighted

ESTIMATE_SCHEMES = ("minhash", "mh-alsh", "mh-alsh-prime", "mh-alsh-cws", "hs", "srp")


class CliError(Exception):
    """User-facing failure with an actionable message."""


# ---------------------------------------------------------------------------
# argument helpers


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    """``1,2,4`` or a range ``1-12`` (inclusive), or a mix of both."""
    out: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            lo, sep, hi = part.partition("-")
            if sep:
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers or ranges like 1-12, got {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _seed(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")


def _schemes(text: str) -> list[str]:
    names = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in names if s not in SCHEME_NAMES]
    if bad:
        raise argparse.ArgumentTypeError(
            f"unknown scheme {bad[0]!r}; choose from {','.join(SCHEME_NAMES)}")
    return names


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load(path: str, fmt: str, dim: int | None = None) -> Dataset:
    try:
        return parse_dataset(path, format=fmt, dim=dim)
    except FileNotFoundError:
        raise CliError(f"cannot open {path}: no such file") from None


def _shared_dim(train: Dataset, queries: Dataset, dim: int | None) -> int:
    D = max(train.dim, queries.dim)
    if dim is not None:
        if dim < D:
            raise CliError(f"--dim {dim} is smaller than the largest index + 1 ({D})")
        D = dim
    return D


def _factory(args, train: Dataset, queries: Dataset):
    dim = _shared_dim(train, queries, args.dim)
    M = args.M if args.M is not None else max(train.max_cardinality, 1)
    if M < train.max_cardinality:
        raise CliError(f"--M {M} is below the largest train cardinality "
                       f"{train.max_cardinality}; raise --M or drop the flag")

    def make(name: str, K: int, L: int):
        return scheme_config(name, K, L, dim, M, args.seed, m=args.m, U=args.U, r=args.r,
                             N=args.N)
    return make


# ---------------------------------------------------------------------------
# subcommands


def cmd_stats(args) -> str:
    return compute_stats(_load(args.input, args.format, args.dim)).to_csv()


def cmd_synth(args) -> str:
    d = synthetic_corpus(n_records=args.n, dim=args.dim, seed=args.seed)
    write_index_list(d, args.out)
    return compute_stats(d).to_csv()


def cmd_partition(args) -> str:
    d = _load(args.input, args.format, args.dim)
    train, queries = partition_dataset(d, args.n_query, args.seed)
    write_index_list(train, args.train_out)
    write_index_list(queries, args.query_out)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["partition", "n", "M", "path"])
    w.writerow(["train", len(train), train.max_cardinality, args.train_out])
    w.writerow(["query", len(queries), queries.max_cardinality, args.query_out])
    return buf.getvalue()


def _parse_pairs(path: str) -> list[tuple[np.ndarray, np.ndarray]]:
    pairs = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except FileNotFoundError:
        raise CliError(f"cannot open {path}: no such file") from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            left, sep, right = line.partition("|")
            if not sep:
                raise CliError(f"{path}:{lineno}: expected 'i j k | l m'")
            try:
                x = np.unique(np.array([int(t) for t in left.split()], dtype=np.int64))
                y = np.unique(np.array([int(t) for t in right.split()], dtype=np.int64))
            except ValueError:
                raise CliError(f"{path}:{lineno}: indices must be integers") from None
            if (x.size and x[0] < 0) or (y.size and y[0] < 0):
                raise CliError(f"{path}:{lineno}: negative index")
            pairs.append((x, y))
    if not pairs:
        raise CliError(f"{path}: no pairs found")
    return pairs


def cmd_estimate(args) -> str:
    """Empirical vs closed-form collision rate per pair; the first set is data, the second query."""
    pairs = _parse_pairs(args.pair_file)
    top = max(int(max(x.max(initial=-1), y.max(initial=-1))) for x, y in pairs) + 1
    D = args.dim if args.dim is not None else max(top, 1)
    if D < top:
        raise CliError(f"--dim {D} is smaller than the largest index + 1 ({top})")
    M = args.M if args.M is not None else max(max(x.size, y.size) for x, y in pairs)
    name = args.scheme
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pair", "a", "f_x", "f_y", "empirical", "theoretical"])
    for k, (x, y) in enumerate(pairs):
        a = intersection_size(x, y)
        if name in ("mh-alsh", "mh-alsh-prime", "mh-alsh-cws") and x.size > M:
            raise CliError(f"pair {k}: data set size {x.size} exceeds M = {M}; raise --M")
        if name == "minhash":
            s = HashScheme("minhash", args.seed, effective_dim=D)
            emp = estimate_collision(s, x, y, args.K)
            th = theory.resemblance(a, x.size, y.size)
        elif name == "mh-alsh":
            s = HashScheme("minhash", args.seed, effective_dim=D + 2 * M)
            emp = estimate_collision(s, transform_mh(x, M, MhRole.DATA_DOUBLE, D),
                                     transform_mh(y, M, MhRole.QUERY_DOUBLE, D), args.K)
            th = theory.mh_alsh_collision(a, M)
        elif name == "mh-alsh-prime":
            s = HashScheme("minhash", args.seed, effective_dim=D + M)
            emp = estimate_collision(s, transform_mh(x, M, MhRole.DATA_PRIME, D),
                                     transform_mh(y, M, MhRole.QUERY_PRIME, D), args.K)
            th = theory.mh_alsh_prime_collision(a, M, y.size)
        elif name == "mh-alsh-cws":
            s = HashScheme("cws", args.seed, effective_dim=D + 2)
            emp = estimate_collision(s, transform_weighted(x, M, Role.DATA, D),
                                     transform_weighted(y, M, Role.QUERY, D), args.K)
            th = theory.mh_alsh_collision(a, M)
        elif name == "hs":
            s = HashScheme("hs", args.seed, N=args.N, effective_dim=D)
            emp = estimate_collision(s, x, y, args.K, D=D)
            th = theory.hs_collision(a, D, args.N)
        else:
            s = HashScheme("srp", args.seed, effective_dim=D)
            emp = estimate_collision(s, (x, np.ones(x.size)), (y, np.ones(y.size)), args.K)
            th = theory.srp_collision(theory.binary_cosine(a, x.size, y.size))
        w.writerow([k, a, x.size, y.size, f"{emp:.6g}", f"{th:.6g}"])
    return buf.getvalue()


def cmd_rho_curves(args) -> str:
    curves = theory.emit_rho_curves(args.ratios, args.c_grid, args.schemes)
    return theory.curves_to_csv(curves)


def _experiment_data(args):
    train = _load(args.train, args.format)
    queries = _load(args.query, args.format)
    if len(train) == 0 or len(queries) == 0:
        raise CliError("train and query files must each hold at least one record")
    return train, queries


def cmd_rank(args) -> str:
    train, queries = _experiment_data(args)
    if args.T > len(train):
        raise CliError(f"--T {args.T} exceeds the {len(train)} train records")
    rep = harness.ranking_experiment(train, queries, args.schemes, K_list=args.K, T=args.T,
                                     seed=args.seed, factory=_factory(args, train, queries),
                                     threads=args.threads)
    return rep.to_csv()


def cmd_bucket(args) -> str:
    train, queries = _experiment_data(args)
    K_range = harness.FULL_K if args.full_grid else args.K_range
    L_range = harness.FULL_L if args.full_grid else args.L_range
    if min(K_range) < 1 or min(L_range) < 1:
        raise CliError("K and L values must be >= 1")
    rep = harness.bucketing_experiment(train, queries, args.schemes, K_range=K_range,
                                       L_range=L_range, T_list=args.T_list, seed=args.seed,
                                       factory=_factory(args, train, queries),
                                       threads=args.threads)
    if args.sweep_out:
        _emit(rep.sweep_csv(), args.sweep_out)
    return rep.to_csv()


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=_seed, default=default_seed(),
                   help="master seed (default: $ASYMHASH_SEED or the built-in constant)")
    p.add_argument("-o", "--output", default=None, help="CSV output path (default: stdout)")


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--train", required=True, help="train partition file")
    p.add_argument("--query", required=True, help="query partition file")
    p.add_argument("--format", choices=FORMATS, default=INDEX_LIST)
    p.add_argument("--schemes", type=_schemes, default=["mh-alsh", "minhash", "l2-alsh",
                                                         "sign-alsh"],
                   help=f"comma-separated subset of {','.join(SCHEME_NAMES)}")
    p.add_argument("--dim", type=int, default=None, help="universe size override")
    p.add_argument("--M", type=int, default=None, help="padding budget (default: max train size)")
    p.add_argument("--U", type=float, default=None, help="ALSH norm scale in (0, 1)")
    p.add_argument("--m", type=int, default=None, metavar="POWERS",
                   help="ALSH number of norm powers")
    p.add_argument("--r", type=float, default=2.5, help="L2LSH bucket width")
    p.add_argument("--N", type=int, default=2 ** 31, help="range of the sampling hash")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads (default: available cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asymhash", description="Asymmetric minwise hashing toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    p = sub.add_parser("stats", help="record count, universe size and size statistics")
    p.add_argument("input")
    p.add_argument("--format", choices=FORMATS, default=INDEX_LIST)
    p.add_argument("--dim", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="write a synthetic heavy-tailed corpus (index-list)")
    p.add_argument("out")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--dim", type=int, default=50_000)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("partition", help="seeded train/query split")
    p.add_argument("input")
    p.add_argument("--n-query", type=int, required=True)
    p.add_argument("--train-out", required=True)
    p.add_argument("--query-out", required=True)
    p.add_argument("--format", choices=FORMATS, default=INDEX_LIST)
    p.add_argument("--dim", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("estimate", help="empirical vs theoretical collision rates for set pairs")
    p.add_argument("--scheme", choices=ESTIMATE_SCHEMES, required=True)
    p.add_argument("--pair-file", required=True, help="lines of the form 'i j k | l m'")
    p.add_argument("--K", type=int, default=10_000, help="number of hash evaluations")
    p.add_argument("--M", type=int, default=None, help="padding budget (default: largest set)")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--N", type=int, default=2 ** 31)
    _add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("rho-curves", help="rho versus c for each scheme and ratio")
    p.add_argument("--ratios", type=_float_list, default=list(theory.DEFAULT_RATIOS))
    p.add_argument("--c-grid", type=_float_list, default=list(theory.DEFAULT_C_GRID))
    p.add_argument("--schemes", type=lambda s: [x for x in s.split(",") if x],
                   default=[theory.MH_ALSH, theory.SIGN],
                   help=f"comma-separated subset of {','.join(theory.CURVE_SCHEMES)}")
    _add_common(p)
    p.set_defaults(func=cmd_rho_curves)

    p = sub.add_parser("rank", help="precision at fixed recall levels of hash-match rankings")
    _add_params(p)
    p.add_argument("--K", type=_int_list, default=list(harness.RANKING_K),
                   help="comma-separated hash counts")
    p.add_argument("--T", type=int, default=100, help="gold list length")
    _add_common(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("bucket", help="(K, L) sweep: fraction scanned vs recall")
    _add_params(p)
    p.add_argument("--K-range", type=_int_list, default=list(harness.DESK_K))
    p.add_argument("--L-range", type=_int_list, default=list(harness.DESK_L))
    p.add_argument("--T-list", type=_int_list, default=[5, 10, 20, 50])
    p.add_argument("--full-grid", action="store_true",
                   help="K in 1..40 and L in 1..400 (hours of compute)")
    p.add_argument("--sweep-out", default=None, help="also write every (K, L) point here")
    _add_common(p)
    p.set_defaults(func=cmd_bucket)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = args.func(args)
        _emit(text, args.output)
    except (CliError, ValueError, OSError) as exc:
        print(f"asymhash {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
