"""Command-line entry point.

One binary, eight subcommands, wiring corpus -> index -> aspects -> prune
-> query -> eval.  Every file-producing run writes a manifest JSON next to
its main output with the full parameter set, so any artifact can be
re-created from its manifest alone.  All randomness sits behind --seed;
manifests carry no timestamps, so reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .aspects import (
    build_aspect_sets,
    dynamic_windows,
    fd_window_size,
    index_time_hull,
    simple_windows,
    sliding_windows,
    smooth,
    term_time_series,
)
from .corpus import parse_corpus, tokenize
from .errors import TempopruneError
from .evaluation import (
    METHODS,
    all_relevant_qrels,
    evaluate_queries,
    evaluate_results,
    generate_temporal_queries,
    read_qrels,
    read_queries,
    read_run,
    read_topics,
    sweep,
    tune_epsilon,
    write_qrels,
    write_queries,
)
from .index import (
    build_index,
    pruning_ratio,
    read_index,
    recompute_lengths,
    verify_index,
    write_index,
)
from .prune import (
    PruneConfig,
    diversified_topk_prune,
    threshold_prune,
)
from .search import Query, parse_time_spec, run_query, trec_run_lines
from .timewindows import day_to_date

log = logging.getLogger(__name__)

_THRESHOLD_CLI = {"tcp": "tcp", "ipu": "ipu", "2n2p": "n2p2"}


def _default_threads() -> int:
    return int(os.environ.get("TEMPOPRUNE_THREADS", "1"))


def _write_manifest(out_path: str, subcommand: str, args: argparse.Namespace, **extra) -> None:
    payload = {
        "subcommand": subcommand,
        "version": __version__,
        "parameters": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
    }
    payload.update(extra)
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_build(args) -> int:
    corpus = parse_corpus(args.corpus, fmt=args.format, stop_words=not args.keep_stopwords)
    index = build_index(corpus)
    verify_index(index)
    write_index(index, args.out)
    _write_manifest(args.out, "build", args)
    print(
        f"built {args.out}: {index.stats.n_docs} docs, {len(index.lists)} terms, "
        f"{index.posting_count()} postings"
    )
    return 0


def _cmd_verify(args) -> int:
    index = read_index(args.index)
    verify_index(index)
    print(
        f"{args.index}: ok ({index.stats.n_docs} docs, {len(index.lists)} terms, "
        f"{index.posting_count()} postings, pruned={index.pruned})"
    )
    return 0


def _cmd_windows(args) -> int:
    index = read_index(args.index)
    series = term_time_series(index, args.term, args.presence_only)
    record: dict = {
        "term": args.term,
        "model": args.model,
        "n_points": series.n_points,
        "series": [[day, series.counts[day]] for day in sorted(series.counts)],
    }
    if series.counts:
        if args.model == "dynamic":
            aset = dynamic_windows(series, args.k_max, args.seed)
        else:
            gamma = fd_window_size(series)
            record["gamma"] = gamma
            if args.model == "simple":
                aset = simple_windows(series, gamma)
            else:
                aset = sliding_windows(series, gamma)
        aset = smooth(aset, args.lambda_w)
        record["aspects"] = [
            {
                "window": [a.window.b_lo, a.window.b_hi, a.window.e_lo, a.window.e_hi],
                "window_iso": a.window.to_iso(),
                "weight": a.weight,
                "global": a.is_global,
                "center": a.center,
            }
            for a in aset.aspects
        ]
    else:
        record["aspects"] = []
    text = json.dumps(record, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        _write_manifest(args.out, "windows", args)
    else:
        print(text)
    if args.hist_csv:
        with open(args.hist_csv, "w", encoding="utf-8") as fh:
            fh.write("day,date,count\n")
            for day in sorted(series.counts):
                fh.write(f"{day},{day_to_date(day).isoformat()},{series.counts[day]}\n")
    return 0


def _cmd_prune(args) -> int:
    index = read_index(args.infile)
    extra: dict = {"method": args.method}
    if args.method in _THRESHOLD_CLI:
        internal = _THRESHOLD_CLI[args.method]
        if args.epsilon is None and args.ratio is None:
            raise TempopruneError(f"{args.method} needs --epsilon or --ratio")
        if args.epsilon is not None:
            epsilon = args.epsilon
        else:
            tuned = tune_epsilon(index, internal, args.ratio, args.zk, args.jm_lambda)
            epsilon = tuned.epsilon
            extra["tuned"] = {
                "target_ratio": args.ratio,
                "epsilon": tuned.epsilon,
                "flagged": tuned.flagged,
            }
        pruned = threshold_prune(index, internal, epsilon, args.zk, args.jm_lambda)
        extra["epsilon"] = epsilon
    else:
        model = args.method.removeprefix("div-")
        if (args.k is None) == (args.ratio is None):
            raise TempopruneError(f"{args.method} needs exactly one of --k / --ratio")
        aspect_sets = build_aspect_sets(
            index, model, args.lambda_w, args.seed, args.k_max, args.presence_only, args.threads
        )
        if args.k is not None:
            config = PruneConfig(mode="fixed_k", k=args.k, lambda_w=args.lambda_w,
                                 aspect_model=model, lam=args.jm_lambda)
        else:
            config = PruneConfig(mode="ratio", target_ratio=args.ratio, lambda_w=args.lambda_w,
                                 aspect_model=model, lam=args.jm_lambda)
        pruned = diversified_topk_prune(index, aspect_sets, config)
    if args.recompute_stats:
        pruned = recompute_lengths(pruned)
        extra["recomputed_stats"] = True
    achieved = pruning_ratio(index, pruned)
    write_index(pruned, args.out)
    _write_manifest(args.out, "prune", args, achieved_ratio=achieved, **extra)
    print(f"pruned {args.infile} -> {args.out}: achieved ratio {achieved:.6f}")
    return 0


def _cmd_query(args) -> int:
    index = read_index(args.index)
    terms = tokenize(args.q, stop_words=not args.keep_stopwords)
    constraint = frozenset({parse_time_spec(args.time)}) if args.time else None
    kind = args.kind
    if kind is None:
        kind = "exclusive" if constraint else "inclusive"
    query = Query(qid=args.qid, terms=terms, time_constraint=constraint, kind=kind)
    result = run_query(index, query, args.depth)
    lines = trec_run_lines(result, args.tag)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
        _write_manifest(args.out, "query", args, n_hits=len(result.hits))
    else:
        for line in lines:
            print(line)
    return 0


def _cmd_genqueries(args) -> int:
    index = read_index(args.index)
    topics = read_topics(args.topics)
    if args.span:
        lo, hi = (int(p) for p in args.span.split(","))
        span = (lo, hi)
    else:
        span = index_time_hull(index)
    queries = generate_temporal_queries(
        topics, span, args.interval, args.n, args.seed, index,
        stop_words=not args.keep_stopwords,
    )
    write_queries(queries, args.out)
    _write_manifest(args.out, "genqueries", args, n_queries=len(queries))
    print(f"wrote {len(queries)} queries to {args.out}")
    if args.qrels_out:
        qrels = all_relevant_qrels(queries, index)
        write_qrels(qrels, args.qrels_out)
        print(f"wrote {len(qrels.grades)} judgments to {args.qrels_out}")
    return 0


def _cmd_eval(args) -> int:
    qrels = read_qrels(args.qrels)
    if args.run:
        results = read_run(args.run)
        map_, ndcg_, n = evaluate_results(results, qrels, args.depth, args.discount)
    else:
        index = read_index(args.index)
        queries = read_queries(args.queries)
        map_, ndcg_, n = evaluate_queries(index, queries, qrels, args.depth, args.discount)
    print(f"map={map_:.6f} ndcg={ndcg_:.6f} n_queries={n}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({"map": map_, "ndcg": ndcg_, "n_queries": n}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _write_manifest(args.out, "eval", args)
    return 0


def _cmd_sweep(args) -> int:
    index = read_index(args.index)
    queries = read_queries(args.queries)
    qrels = read_qrels(args.qrels)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    ratios = [float(r) for r in args.ratios.split(",")]
    report = sweep(
        index, queries, qrels, methods, ratios,
        lambda_w=args.lambda_w, lam=args.jm_lambda, zk=args.zk, seed=args.seed,
        depth=args.depth, discount=args.discount, k_max=args.k_max,
        presence_only=args.presence_only, threads=args.threads,
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(report.to_csv_lines()) + "\n")
    with open(args.out + ".details.json", "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    _write_manifest(args.out, "sweep", args)
    print(f"wrote {len(report.rows)} rows to {args.out}")
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    p.add_argument("--threads", type=int, default=_default_threads(),
                   help="worker threads (env TEMPOPRUNE_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tempoprune",
        description="Build, prune, and evaluate temporal inverted indexes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("build", help="build an index from a corpus file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("jsonl", "trec"), default="jsonl")
    p.add_argument("--keep-stopwords", action="store_true")
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("verify", help="check index invariants")
    p.add_argument("index")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("windows", help="dump a term's time series and aspects")
    p.add_argument("--index", required=True)
    p.add_argument("--term", required=True)
    p.add_argument("--model", choices=("simple", "sliding", "dynamic"), default="simple")
    p.add_argument("--lambda-w", type=float, default=0.3, dest="lambda_w")
    p.add_argument("--k-max", type=int, default=10, dest="k_max")
    p.add_argument("--presence-only", action="store_true")
    p.add_argument("--out", help="JSON output path (default: stdout)")
    p.add_argument("--hist-csv", help="optional plot-ready day histogram CSV")
    _add_common(p)
    p.set_defaults(func=_cmd_windows)

    p = sub.add_parser("prune", help="statically prune an index")
    p.add_argument("--in", required=True, dest="infile")
    p.add_argument("--out", required=True)
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--k", type=int, help="fixed per-term depth (div-*)")
    p.add_argument("--ratio", type=float, help="target pruning ratio")
    p.add_argument("--epsilon", type=float, help="direct threshold (tcp/ipu/2n2p)")
    p.add_argument("--zk", type=int, default=10, help="tcp cutoff depth")
    p.add_argument("--lambda-w", type=float, default=0.3, dest="lambda_w")
    p.add_argument("--jm-lambda", type=float, default=0.6, dest="jm_lambda")
    p.add_argument("--k-max", type=int, default=10, dest="k_max")
    p.add_argument("--presence-only", action="store_true")
    p.add_argument("--recompute-stats", action="store_true",
                   help="recompute doc lengths from the pruned lists (experiment)")
    _add_common(p)
    p.set_defaults(func=_cmd_prune)

    p = sub.add_parser("query", help="run one query, TREC run output")
    p.add_argument("--index", required=True)
    p.add_argument("--q", required=True, help="query text")
    p.add_argument("--time", help="window: 'b_lo,b_hi,e_lo,e_hi' or YYYY[-MM[-DD]]")
    p.add_argument("--kind", choices=("inclusive", "exclusive"))
    p.add_argument("--depth", type=int, default=1000)
    p.add_argument("--qid", default="q1")
    p.add_argument("--tag", default="tempoprune")
    p.add_argument("--keep-stopwords", action="store_true")
    p.add_argument("--out", help="run file path (default: stdout)")
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("genqueries", help="generate exclusive temporal queries")
    p.add_argument("--index", required=True)
    p.add_argument("--topics", required=True, help="JSONL: qid, title, description")
    p.add_argument("--interval", choices=("daily", "weekly", "monthly"), default="weekly")
    p.add_argument("--n", type=int, default=100, help="kept draws target")
    p.add_argument("--span", help="day range lo,hi (default: index hull)")
    p.add_argument("--out", required=True)
    p.add_argument("--qrels-out", dest="qrels_out",
                   help="also write all-relevant judgments")
    p.add_argument("--keep-stopwords", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_genqueries)

    p = sub.add_parser("eval", help="MAP/NDCG for queries or a run file")
    p.add_argument("--index")
    p.add_argument("--queries")
    p.add_argument("--run", help="evaluate an existing TREC run file instead")
    p.add_argument("--qrels", required=True)
    p.add_argument("--depth", type=int, default=1000)
    p.add_argument("--discount", choices=("ln", "log2"), default="ln")
    p.add_argument("--out", help="optional JSON output")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="MAP/NDCG vs pruning ratio, CSV output")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--methods", required=True, help=f"comma list from {','.join(METHODS)}")
    p.add_argument("--ratios", required=True, help="comma list of target ratios")
    p.add_argument("--out", required=True)
    p.add_argument("--depth", type=int, default=1000)
    p.add_argument("--discount", choices=("ln", "log2"), default="ln")
    p.add_argument("--zk", type=int, default=10)
    p.add_argument("--lambda-w", type=float, default=0.3, dest="lambda_w")
    p.add_argument("--jm-lambda", type=float, default=0.6, dest="jm_lambda")
    p.add_argument("--k-max", type=int, default=10, dest="k_max")
    p.add_argument("--presence-only", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except TempopruneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
