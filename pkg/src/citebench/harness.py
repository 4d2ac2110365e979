"""Retrieval model drivers, benchmark evaluation, and report rendering."""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from . import dense, lexical, metrics
from .benchgen import Benchmark
from .corpus import Article, Corpus, FIELD_ABBREVS
from .pools import PoolSet


class RetrievalModel(ABC):
    """Ranks candidate article ids for a query article.

    Implementations must be deterministic (identical inputs give identical
    output) and safe to call concurrently once constructed.
    """

    name: str

    @abstractmethod
    def rank(self, query: Article, candidates, k: int) -> list[tuple[str, float]]:
        """Ranked (id, score) list, ids drawn from `candidates`, best first."""


class Bm25Model(RetrievalModel):
    def __init__(self, index: lexical.Bm25Index, params: lexical.Bm25Params | None = None,
                 name: str = "bm25"):
        self.index = index
        self.params = params or lexical.Bm25Params()
        self.name = name

    def rank(self, query: Article, candidates, k: int) -> list[tuple[str, float]]:
        return lexical.search(self.index, query.text, self.params, k=k, pool=candidates)


class DenseModel(RetrievalModel):
    def __init__(self, store: dense.EmbeddingStore, metric: str = "cosine",
                 name: str = "dense", chunks: int = 1):
        self.store = store
        self.metric = metric
        self.name = name
        self.chunks = chunks

    def rank(self, query: Article, candidates, k: int) -> list[tuple[str, float]]:
        if query.id not in self.store:
            raise KeyError(f"no embedding row for query {query.id!r}")
        return dense.knn(self.store, self.store.vector(query.id), k,
                         metric=self.metric, pool=candidates, chunks=self.chunks)


@dataclass
class RetrievalRun:
    """Per-query ranked candidate lists produced by one model."""

    model: str
    rankings: dict[str, list[tuple[str, float]]]
    cutoff: int

    def __post_init__(self) -> None:
        for q, ranked in self.rankings.items():
            if len(ranked) > self.cutoff:
                raise ValueError(f"query {q!r} has {len(ranked)} results, cutoff is {self.cutoff}")
            docs = [doc for doc, _ in ranked]
            if len(set(docs)) != len(docs):
                raise ValueError(f"duplicate doc ids in results for query {q!r}")


def run_retrieval(model: RetrievalModel, pool_set: PoolSet, corpus: Corpus,
                  cutoff: int = 500) -> RetrievalRun:
    """Rank the shared pool for every pool query; a query is never its own
    candidate. The cutoff truncates each ranking."""
    members = pool_set.members()
    rankings: dict[str, list[tuple[str, float]]] = {}
    for q in sorted(pool_set.positives):
        candidates = members - {q}
        rankings[q] = model.rank(corpus.article(q), candidates, cutoff)
    return RetrievalRun(model.name, rankings, cutoff)


@dataclass
class BenchmarkReport:
    """Per-field aggregates plus their macro average and per-query values."""

    per_field: dict[str, dict[str, float]]
    macro: dict[str, float]
    per_query: dict[str, dict[str, float]]


def _aggregate_by_field(per_query: dict[str, dict[str, float]],
                        field_of: dict[str, str], metric_names: Sequence[str]) -> BenchmarkReport:
    per_field: dict[str, dict[str, float]] = {}
    for abbrev in FIELD_ABBREVS:
        queries = [q for q, f in field_of.items() if f == abbrev]
        if not queries:
            continue
        per_field[abbrev] = {
            m: sum(per_query[q][m] for q in queries) / len(queries) for m in metric_names
        }
    macro = {
        m: (sum(vals[m] for vals in per_field.values()) / len(per_field) if per_field else 0.0)
        for m in metric_names
    }
    return BenchmarkReport(per_field, macro, per_query)


def score_benchmark_rankings(rankings: Mapping[str, Sequence], benchmark: Benchmark,
                             recall_cutoff: int = 5) -> BenchmarkReport:
    """Score precomputed per-entry rankings (e.g. a run file) against a
    benchmark's positives."""
    recall_key = f"recall@{recall_cutoff}"
    per_query: dict[str, dict[str, float]] = {}
    field_of: dict[str, str] = {}
    for entry in benchmark.entries:
        if entry.query_id not in rankings:
            raise ValueError(f"benchmark query {entry.query_id!r} is missing from the run")
        ranked = rankings[entry.query_id]
        positives = frozenset(entry.positives)
        per_query[entry.query_id] = {
            "map": metrics.average_precision(ranked, positives),
            recall_key: metrics.recall_at_k(ranked, positives, recall_cutoff),
        }
        field_of[entry.query_id] = entry.field
    return _aggregate_by_field(per_query, field_of, ("map", recall_key))


def evaluate_benchmark(model: RetrievalModel, benchmark: Benchmark, corpus: Corpus,
                       recall_cutoff: int = 5) -> BenchmarkReport:
    """Rank each entry's closed candidate pool (positives plus all negative
    groups) and aggregate AP and recall per field, macro-averaged overall."""
    rankings = {}
    for entry in benchmark.entries:
        candidates = frozenset(entry.candidate_ids())
        rankings[entry.query_id] = model.rank(corpus.article(entry.query_id),
                                              candidates, len(candidates))
    return score_benchmark_rankings(rankings, benchmark, recall_cutoff)


def candidate_type_breakdown(model: RetrievalModel, benchmark: Benchmark, corpus: Corpus,
                             recall_cutoff: int = 5) -> dict[str, dict[str, float]]:
    """For each candidate type, rank the subset pool (positives plus that
    type's negatives) per entry and average AP and recall over all entries."""
    recall_key = f"recall@{recall_cutoff}"
    types = benchmark.negative_types()
    sums = {t: {"map": 0.0, recall_key: 0.0} for t in types}
    count = 0
    for entry in benchmark.entries:
        positives = frozenset(entry.positives)
        article = corpus.article(entry.query_id)
        count += 1
        for t in types:
            candidates = positives | frozenset(entry.negatives[t])
            ranked = model.rank(article, candidates, len(candidates))
            sums[t]["map"] += metrics.average_precision(ranked, positives)
            sums[t][recall_key] += metrics.recall_at_k(ranked, positives, recall_cutoff)
    if count == 0:
        return {t: {"map": 0.0, recall_key: 0.0} for t in types}
    return {t: {m: v / count for m, v in vals.items()} for t, vals in sums.items()}


# ---------------------------------------------------------------------------
# report rendering
# ---------------------------------------------------------------------------


def render_report(table: Mapping[str, Mapping[str, float]], columns: Sequence[str] | None = None,
                  fmt: str = "tsv", row_header: str = "") -> str:
    """Render metric values times 100 with one decimal, rows and columns in
    the given (or insertion) order."""
    rows = list(table)
    if columns is None:
        columns = list(next(iter(table.values()))) if table else []

    def cell(value: float) -> str:
        return f"{value * 100:.1f}"

    if fmt == "tsv":
        lines = ["\t".join([row_header, *columns])]
        for r in rows:
            lines.append("\t".join([r, *(cell(table[r][c]) for c in columns)]))
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        lines = ["| " + " | ".join([row_header or " ", *columns]) + " |"]
        lines.append("|" + "|".join([" --- "] * (len(columns) + 1)) + "|")
        for r in rows:
            lines.append("| " + " | ".join([r, *(cell(table[r][c]) for c in columns)]) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(table: Mapping[str, Mapping[str, float]], path,
                fmt: str = "tsv", columns: Sequence[str] | None = None,
                row_header: str = "") -> str:
    """Write a rendered report to `path` and return the path."""
    Path(path).write_text(render_report(table, columns, fmt, row_header), encoding="utf-8")
    return str(path)
