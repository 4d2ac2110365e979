"""Command-line pipeline frontend.

A JSON config file supplies defaults; flags win. All randomness flows from
an explicit --seed (there is no wall-clock seeding anywhere), so identical
config plus seed reproduces a byte-identical output tree. Every artifact
gets a sibling ``<name>.manifest.json`` embedding the tool version and a
hash of the resolved configuration (output paths excluded from the hash).

Subcommands: ingest, prefilter, pool, tune, run, eval, benchgen, breakdown,
report. Errors exit nonzero with a machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .benchgen import (Benchmark, BenchmarkParams, build_benchmark,
                       read_benchmark_jsonl, write_benchmark_jsonl)
from .corpus import (PrefilterRules, build_citation_graph, load_corpus,
                     prefilter, write_corpus_jsonl, FIELD_ABBREVS)
from .dense import load_embeddings
from .harness import (Bm25Model, DenseModel, RetrievalModel, candidate_type_breakdown,
                      emit_report, run_retrieval, score_benchmark_rankings)
from .lexical import Bm25Params, build_index, default_tuning_grid, tune_params
from .metrics import evaluate_run, read_run_tsv, write_run_tsv
from .pools import (SamplingPlan, build_dataset_pool, build_field_pool,
                    read_pool_json, repeat_pools, sample_queries, write_pool_json)
from .util import canonical_json, stable_digest

_METRIC_DISPLAY = {"map": "MAP", "ndcg": "nDCG"}


def _display_metric(key: str) -> str:
    if key in _METRIC_DISPLAY:
        return _METRIC_DISPLAY[key]
    if key.startswith("recall@"):
        return "R@" + key.split("@", 1)[1]
    return key


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ValueError("config file must hold a JSON object")
    return config


def _merge_config(args: argparse.Namespace, config: dict) -> None:
    # flags win over config values; config fills everything left at None
    for key, value in config.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)


def _config_hash(args: argparse.Namespace) -> str:
    skip = {"config", "out", "func", "command"}
    resolved = {k: v for k, v in sorted(vars(args).items()) if k not in skip and not callable(v)}
    return stable_digest(canonical_json(resolved))


def _write_manifest(out_dir: Path, artifact: str, args: argparse.Namespace) -> None:
    manifest = {
        "tool": "citebench",
        "version": __version__,
        "command": args.command,
        "config_hash": _config_hash(args),
        "seed": getattr(args, "seed", None),
    }
    path = out_dir / f"{artifact}.manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name) is None:
            raise ValueError(f"--{name.replace('_', '-')} is required for {args.command}")


def _parse_embeddings(specs: list[str] | None) -> dict[str, str]:
    out: dict[str, str] = {}
    for spec in specs or []:
        if "=" not in spec:
            raise ValueError(f"--embeddings takes NAME=PATH, got {spec!r}")
        name, path = spec.split("=", 1)
        out[name] = path
    return out


def _build_model(args: argparse.Namespace, corpus) -> RetrievalModel:
    embeddings = _parse_embeddings(getattr(args, "embeddings", None))
    name = args.model or "bm25"
    if name in embeddings:
        vec_path = embeddings[name]
        store = load_embeddings(vec_path, vec_path + ".json")
        return DenseModel(store, metric=args.metric or "cosine", name=name,
                          chunks=args.threads or 1)
    if name == "bm25":
        params = _bm25_params(args)
        return Bm25Model(build_index(corpus), params)
    raise ValueError(f"unknown model {name!r}: not 'bm25' and no --embeddings entry")


def _bm25_params(args: argparse.Namespace) -> Bm25Params:
    k1, b = args.k1, args.b
    if getattr(args, "params", None):
        with open(args.params, "r", encoding="utf-8") as fh:
            stored = json.load(fh)
        k1 = stored["k1"] if k1 is None else k1
        b = stored["b"] if b is None else b
    return Bm25Params(k1=0.9 if k1 is None else k1, b=0.4 if b is None else b)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    _require(args, "corpus", "out")
    out = _out_dir(args)
    corpus = load_corpus(args.corpus, reject_budget=args.reject_budget or 0)
    graph = build_citation_graph(corpus)
    summary = {
        "articles": len(corpus),
        "rejected_lines": corpus.rejected,
        "dangling_citations": graph.dangling,
        "corpus_hash": corpus.content_hash(),
    }
    _write_json(out / "corpus_summary.json", summary)
    _write_manifest(out, "corpus_summary", args)
    print(f"ingest: {len(corpus)} articles, {corpus.rejected} rejected lines, "
          f"{graph.dangling} dangling citations")
    return 0


def cmd_prefilter(args: argparse.Namespace) -> int:
    _require(args, "corpus", "out")
    out = _out_dir(args)
    corpus = load_corpus(args.corpus, reject_budget=args.reject_budget or 0)
    graph = build_citation_graph(corpus)
    rules = PrefilterRules(
        min_abstract_chars=30 if args.min_abstract_chars is None else args.min_abstract_chars,
        min_citations=3 if args.min_citations is None else args.min_citations,
    )
    result = prefilter(corpus, graph, rules)
    write_corpus_jsonl(result.corpus, out / "prefiltered.jsonl")
    summary = {
        "input_articles": len(corpus),
        "surviving_articles": len(result.corpus),
        "removed": result.removed,
    }
    _write_json(out / "prefilter_summary.json", summary)
    _write_manifest(out, "prefiltered", args)
    print(f"prefilter: kept {len(result.corpus)}/{len(corpus)} articles "
          f"(removed {result.removed})")
    return 0


def cmd_pool(args: argparse.Namespace) -> int:
    _require(args, "corpus", "out", "setup", "size", "seed")
    if args.setup == "field":
        _require(args, "field")
    out = _out_dir(args)
    corpus = load_corpus(args.corpus)
    graph = build_citation_graph(corpus)
    exclusion = frozenset()
    if args.exclude:
        exclusion = frozenset(Path(args.exclude).read_text(encoding="utf-8").split())
    plan = SamplingPlan(
        queries_per_unit=200 if args.queries is None else args.queries,
        rng_seed=args.seed,
        query_year=2019 if args.query_year is None else args.query_year,
        repetitions=3 if args.repetitions is None else args.repetitions,
        exclusion_ids=exclusion,
    )
    field = args.field if args.setup == "field" else None
    queries = sample_queries(corpus, graph, plan, field=field)
    if args.setup == "field":
        builder = lambda s: build_field_pool(corpus, graph, field, queries, args.size, s)
        stem = f"pool_field_{field}_{args.size}"
    else:
        builder = lambda s: build_dataset_pool(corpus, graph, queries, args.size, s)
        stem = f"pool_dataset_{args.size}"
    pool_sets = repeat_pools(builder, plan.repetitions, args.seed)
    paths = []
    for i, pool_set in enumerate(pool_sets):
        path = out / f"{stem}_rep{i}.json"
        write_pool_json(pool_set, path)
        _write_manifest(out, path.stem, args)
        paths.append(path.name)
    print(f"pool: wrote {len(paths)} pool file(s) "
          f"({stem}, {len(queries)} queries each): {', '.join(paths)}")
    return 0


def cmd_tune(args: argparse.Namespace) -> int:
    _require(args, "corpus", "pool", "out")
    out = _out_dir(args)
    corpus = load_corpus(args.corpus)
    index = build_index(corpus)
    pool_set = read_pool_json(args.pool[0] if isinstance(args.pool, list) else args.pool)
    validation = [(corpus.article(q).text, set(pool_set.positives[q]))
                  for q in sorted(pool_set.positives)]
    best = tune_params(index, validation, default_tuning_grid(),
                       pool=pool_set.members(), objective=args.objective or "map",
                       cutoff=500 if args.cutoff is None else args.cutoff)
    _write_json(out / "bm25_params.json", {"k1": best.k1, "b": best.b})
    _write_manifest(out, "bm25_params", args)
    print(f"tune: best k1={best.k1} b={best.b} ({args.objective or 'map'})")
    return 0


def _benchmark_with_manifest(path: str) -> Benchmark:
    sibling = Path(path).parent / (Path(path).stem + ".manifest.json")
    return read_benchmark_jsonl(path, sibling if sibling.exists() else None)


def cmd_run(args: argparse.Namespace) -> int:
    _require(args, "corpus", "out")
    if (args.pool is None) == (args.benchmark is None):
        raise ValueError("run needs exactly one of --pool or --benchmark")
    out = _out_dir(args)
    corpus = load_corpus(args.corpus)
    cutoff = 500 if args.cutoff is None else args.cutoff
    if args.tune and (args.model or "bm25") == "bm25" and args.pool:
        pool_set = read_pool_json(args.pool[0] if isinstance(args.pool, list) else args.pool)
        index = build_index(corpus)
        validation = [(corpus.article(q).text, set(pool_set.positives[q]))
                      for q in sorted(pool_set.positives)]
        tuned = tune_params(index, validation, default_tuning_grid(),
                            pool=pool_set.members(), cutoff=cutoff)
        args.k1, args.b = tuned.k1, tuned.b
    model = _build_model(args, corpus)
    if args.pool:
        pool_path = args.pool[0] if isinstance(args.pool, list) else args.pool
        pool_set = read_pool_json(pool_path)
        run = run_retrieval(model, pool_set, corpus, cutoff)
        rankings = run.rankings
    else:
        benchmark = _benchmark_with_manifest(args.benchmark)
        rankings = {}
        for entry in benchmark.entries:
            candidates = frozenset(entry.candidate_ids())
            rankings[entry.query_id] = model.rank(
                corpus.article(entry.query_id), candidates, min(cutoff, len(candidates)))
    run_path = out / f"run_{model.name}.tsv"
    write_run_tsv(rankings, run_path)
    _write_manifest(out, run_path.stem, args)
    print(f"run: {model.name} ranked {len(rankings)} queries -> {run_path.name}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    _require(args, "run", "out")
    out = _out_dir(args)
    runs = args.run if isinstance(args.run, list) else [args.run]
    if args.benchmark:
        if len(runs) != 1:
            raise ValueError("benchmark evaluation takes exactly one --run")
        benchmark = _benchmark_with_manifest(args.benchmark)
        rankings = read_run_tsv(runs[0])
        report = score_benchmark_rankings(rankings, benchmark, recall_cutoff=5)
        rows = {abbr: report.per_field[abbr] for abbr in FIELD_ABBREVS if abbr in report.per_field}
        rows["AVG"] = report.macro
        stem = f"eval_{Path(runs[0]).stem}"
        _write_json(out / f"{stem}.json",
                    {"per_field": report.per_field, "avg": report.macro})
        table = {r: {_display_metric(m): v for m, v in vals.items()} for r, vals in rows.items()}
        emit_report(table, out / f"{stem}.tsv", fmt="tsv", row_header="Field")
        _write_manifest(out, stem, args)
        macro = {_display_metric(m): round(v, 4) for m, v in report.macro.items()}
        print(f"eval: {stem} AVG {macro}")
        return 0
    pools = args.pool if isinstance(args.pool, list) else ([args.pool] if args.pool else [])
    if len(pools) != len(runs):
        raise ValueError("eval needs one --pool per --run")
    cutoff = 30 if args.recall_cutoff is None else args.recall_cutoff
    repetitions = []
    for run_path, pool_path in zip(runs, pools):
        rankings = read_run_tsv(run_path)
        pool_set = read_pool_json(pool_path)
        qrels = {q: set(pos) for q, pos in pool_set.positives.items()}
        repetitions.append(evaluate_run(rankings, qrels, cutoff).aggregates)
    names = list(repetitions[0])
    n = len(repetitions)
    mean = {m: sum(rep[m] for rep in repetitions) / n for m in names}
    std = {m: (sum((rep[m] - mean[m]) ** 2 for rep in repetitions) / n) ** 0.5 for m in names}
    stem = f"eval_{Path(runs[0]).stem}"
    _write_json(out / f"{stem}.json",
                {"repetitions": repetitions, "mean": mean, "std": std})
    _write_manifest(out, stem, args)
    shown = ", ".join(f"{_display_metric(m)}={mean[m] * 100:.1f}" for m in names)
    print(f"eval: {stem} over {n} repetition(s): {shown}")
    return 0


def cmd_benchgen(args: argparse.Namespace) -> int:
    _require(args, "corpus", "pool", "run", "seed", "out")
    out = _out_dir(args)
    corpus = load_corpus(args.corpus)
    graph = build_citation_graph(corpus)
    queries_by_field: dict[str, list[str]] = {}
    for pool_path in args.pool:
        pool_set = read_pool_json(pool_path)
        if pool_set.field is None:
            raise ValueError(f"{pool_path}: benchgen needs field-level pools")
        if pool_set.field in queries_by_field:
            raise ValueError(f"duplicate field {pool_set.field!r} across pool files")
        queries_by_field[pool_set.field] = pool_set.queries()
    model_runs: dict[str, dict] = {}
    for spec in args.run:
        if "=" not in spec:
            raise ValueError(f"benchgen --run takes NAME=PATH, got {spec!r}")
        name, path = spec.split("=", 1)
        rankings = read_run_tsv(path)
        merged = model_runs.setdefault(name, {})
        overlap = merged.keys() & rankings.keys()
        if overlap:
            raise ValueError(f"run {name!r}: duplicate queries across files: {sorted(overlap)[:3]}")
        merged.update(rankings)
    params = BenchmarkParams(
        positives_per_query=5 if args.positives is None else args.positives,
        negatives_per_type=10 if args.negatives is None else args.negatives,
        model_pool_depth=200 if args.depth is None else args.depth,
        most_cited_top=200 if args.top is None else args.top,
    )
    benchmark = build_benchmark(corpus, graph, queries_by_field, model_runs, params, args.seed)
    benchmark.manifest["config_hash"] = _config_hash(args)
    benchmark.manifest["version"] = __version__
    write_benchmark_jsonl(benchmark, out / "benchmark.jsonl", out / "benchmark.manifest.json")
    dropped = sum(benchmark.manifest["dropped"].values())
    print(f"benchgen: {len(benchmark.entries)} entries "
          f"({benchmark.manifest['pairs']} query-candidate pairs, {dropped} queries dropped), "
          f"models {benchmark.manifest['models']}")
    return 0


def cmd_breakdown(args: argparse.Namespace) -> int:
    _require(args, "corpus", "benchmark", "out")
    out = _out_dir(args)
    corpus = load_corpus(args.corpus)
    benchmark = _benchmark_with_manifest(args.benchmark)
    model = _build_model(args, corpus)
    table = candidate_type_breakdown(model, benchmark, corpus, recall_cutoff=5)
    stem = f"breakdown_{model.name}"
    _write_json(out / f"{stem}.json", table)
    display = {t: {_display_metric(m): v for m, v in vals.items()} for t, vals in table.items()}
    emit_report(display, out / f"{stem}.tsv", fmt="tsv", row_header="Type")
    _write_manifest(out, stem, args)
    print(f"breakdown: {model.name} over {len(table)} candidate types -> {stem}.tsv")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    _require(args, "eval", "out")
    out = _out_dir(args)
    fmt = args.format or "tsv"
    models: dict[str, dict] = {}
    for spec in args.eval:
        if "=" not in spec:
            raise ValueError(f"report --eval takes NAME=PATH, got {spec!r}")
        name, path = spec.split("=", 1)
        with open(path, "r", encoding="utf-8") as fh:
            models[name] = json.load(fh)
    table: dict[str, dict[str, float]] = {}
    row_keys = [*FIELD_ABBREVS, "AVG"]
    for row in row_keys:
        cells: dict[str, float] = {}
        for name, data in models.items():
            source = data["avg"] if row == "AVG" else data["per_field"].get(row)
            if source is None:
                continue
            for metric_key, value in source.items():
                cells[f"{name} {_display_metric(metric_key)}"] = value
        if cells:
            table[row] = cells
    suffix = "md" if fmt == "markdown" else "tsv"
    path = out / f"report.{suffix}"
    emit_report(table, path, fmt=fmt, row_header="Field")
    _write_manifest(out, "report", args)
    print(f"report: {len(table)} rows x {len(next(iter(table.values())) if table else [])} columns -> {path.name}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--corpus", help="corpus JSON Lines file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="master RNG seed (never wall-clock)")
    parser.add_argument("--threads", type=int, help="parallelism degree (results independent)")


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", help="'bm25' or an --embeddings name")
    parser.add_argument("--embeddings", action="append",
                        help="NAME=VECTOR_PATH (manifest at VECTOR_PATH + '.json'); repeatable")
    parser.add_argument("--metric", choices=["cosine", "dot", "euclidean"])
    parser.add_argument("--k1", type=float)
    parser.add_argument("--b", type=float)
    parser.add_argument("--params", help="JSON file with tuned k1/b")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="citebench")
    parser.add_argument("--version", action="version", version=f"citebench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load and validate a corpus")
    _add_common(p)
    p.add_argument("--reject-budget", type=int, dest="reject_budget")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("prefilter", help="apply the corpus prefiltering rules")
    _add_common(p)
    p.add_argument("--reject-budget", type=int, dest="reject_budget")
    p.add_argument("--min-abstract-chars", type=int, dest="min_abstract_chars")
    p.add_argument("--min-citations", type=int, dest="min_citations")
    p.set_defaults(func=cmd_prefilter)

    p = sub.add_parser("pool", help="sample queries and build candidate pools")
    _add_common(p)
    p.add_argument("--setup", choices=["dataset", "field"])
    p.add_argument("--field", help="field abbreviation (field setup)")
    p.add_argument("--size", type=int)
    p.add_argument("--queries", type=int)
    p.add_argument("--query-year", type=int, dest="query_year")
    p.add_argument("--repetitions", type=int)
    p.add_argument("--exclude", help="file of article ids to exclude from query sampling")
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("tune", help="grid-search BM25 parameters on a pool")
    _add_common(p)
    p.add_argument("--pool", action="append")
    p.add_argument("--objective")
    p.add_argument("--cutoff", type=int)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("run", help="rank a pool or benchmark with one model")
    _add_common(p)
    _add_model_flags(p)
    p.add_argument("--pool", action="append")
    p.add_argument("--benchmark")
    p.add_argument("--cutoff", type=int)
    p.add_argument("--tune", action="store_true", default=None,
                   help="tune BM25 on the pool before running")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score run files against pools or a benchmark")
    _add_common(p)
    p.add_argument("--run", action="append")
    p.add_argument("--pool", action="append")
    p.add_argument("--benchmark")
    p.add_argument("--recall-cutoff", type=int, dest="recall_cutoff")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("benchgen", help="construct a typed hard-negative benchmark")
    _add_common(p)
    p.add_argument("--pool", action="append", help="field-level pool file; repeatable")
    p.add_argument("--run", action="append", help="NAME=RUN_TSV; repeatable, at least 3")
    p.add_argument("--depth", type=int, help="model negative pool depth")
    p.add_argument("--top", type=int, help="most-cited list length")
    p.add_argument("--positives", type=int)
    p.add_argument("--negatives", type=int)
    p.set_defaults(func=cmd_benchgen)

    p = sub.add_parser("breakdown", help="per-candidate-type metrics on a benchmark")
    _add_common(p)
    _add_model_flags(p)
    p.add_argument("--benchmark")
    p.set_defaults(func=cmd_breakdown)

    p = sub.add_parser("report", help="merge eval artifacts into one table")
    _add_common(p)
    p.add_argument("--eval", action="append", help="NAME=EVAL_JSON; repeatable")
    p.add_argument("--format", choices=["tsv", "markdown"])
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _merge_config(args, _load_config(args.config))
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        error = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(error, ensure_ascii=False), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
