"""Hard-negative benchmark construction and per-candidate-type evaluation.

Builds field pools, runs three models over them, distills a benchmark with
5 positives + 60 typed negatives per query, evaluates the models on the
closed 65-candidate pools, and breaks performance down by candidate type.
The random type should come out easiest and each model's own hard-negative
type hardest for that model.
"""

from citebench import synthetic
from citebench.benchgen import build_benchmark
from citebench.corpus import build_citation_graph, prefilter
from citebench.harness import (Bm25Model, DenseModel, candidate_type_breakdown,
                               evaluate_benchmark, render_report, run_retrieval)
from citebench.lexical import Bm25Params, build_index
from citebench.pools import SamplingPlan, build_field_pool, sample_queries

corpus = synthetic.generate_corpus(4000, seed=23)
graph = build_citation_graph(corpus)
corpus = prefilter(corpus, graph).corpus
graph = build_citation_graph(corpus)

models = {
    "bm25": Bm25Model(build_index(corpus), Bm25Params(k1=0.9, b=0.4)),
    "dense_a": DenseModel(synthetic.embed_corpus(corpus, dim=32, label="a"), name="dense_a"),
    "dense_b": DenseModel(synthetic.embed_corpus(corpus, dim=32, label="b"), name="dense_b"),
}

# --- field pools and model runs (the model-based negative sources) -----------
fields = ("Med", "CS", "Phy", "Bio")
queries_by_field = {}
model_runs = {name: {} for name in models}
for abbrev in fields:
    queries = sample_queries(corpus, graph, SamplingPlan(queries_per_unit=6, rng_seed=3),
                             field=abbrev)
    queries_by_field[abbrev] = queries
    pool = build_field_pool(corpus, graph, abbrev, queries, size=400, seed=31)
    for name, model in models.items():
        model_runs[name].update(run_retrieval(model, pool, corpus, cutoff=250).rankings)

# --- benchmark generation ------------------------------------------------------
benchmark = build_benchmark(corpus, graph, queries_by_field, model_runs, seed=41)
manifest = benchmark.manifest
print(f"benchmark: {manifest['entries']} entries, {manifest['pairs']} query-candidate pairs")
print(f"  diverse model selection chose: {manifest['models']}")
print(f"  negative types per entry: {manifest['types']}")
print(f"  dropped queries: {manifest['dropped'] or 'none'}")

entry = benchmark.entries[0]
print(f"\nexample entry {entry.query_id} ({entry.field}): "
      f"{len(entry.positives)} positives + "
      f"{sum(len(v) for v in entry.negatives.values())} negatives")

# --- evaluation on the closed 65-candidate pools -------------------------------
print("\nper-field MAP/R@5 (values x100):")
table = {}
for name, model in models.items():
    report = evaluate_benchmark(model, benchmark, corpus)
    table[name] = {"MAP": report.macro["map"], "R@5": report.macro["recall@5"]}
    per_field = "  ".join(f"{f}:{v['map'] * 100:.0f}" for f, v in report.per_field.items())
    print(f"  {name:>8}: AVG MAP {report.macro['map'] * 100:.1f}  ({per_field})")

# --- per-candidate-type breakdown ----------------------------------------------
print("\nMAP by candidate type (rows: models; values x100):")
types = benchmark.negative_types()
header = "  ".join(f"{t[:9]:>9}" for t in types)
print(f"{'':>9}  {header}")
for name, model in models.items():
    breakdown = candidate_type_breakdown(model, benchmark, corpus)
    row = "  ".join(f"{breakdown[t]['map'] * 100:9.1f}" for t in types)
    print(f"{name:>9}  {row}")

print("\nmacro summary as a rendered report:")
print(render_report(table, columns=["MAP", "R@5"], row_header="Model", fmt="markdown"))
