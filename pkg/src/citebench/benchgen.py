"""Benchmark construction: 5 cited positives plus 60 typed hard negatives per query.

Four selection strategies feed six negative groups of ten:

  * model-based: three groups sampled from the top-ranked non-cited
    candidates of the three most mutually diverse retrieval runs (lowest
    mean pairwise Jaccard between their top negatives);
  * graph: neighbors of the query's cited articles, walked from the cited
    article with the highest citation-overlap similarity downward;
  * most_cited: sampled from the field's most-cited articles;
  * random: sampled from the whole prefiltered corpus.

Groups are generated in a fixed order and each group excludes the query, its
cited articles, and every previously chosen negative, so the 60 negatives
are pairwise disjoint and none is cited by the query. Queries that cannot
fill a quota are dropped, never padded.
"""

from __future__ import annotations

import json
import random
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple

from .corpus import CitationGraph, Corpus, FIELD_ABBREVS, resolve_field
from .metrics import jaccard
from .util import derive_seed

GRAPH_TYPE = "graph"
MOST_CITED_TYPE = "most_cited"
RANDOM_TYPE = "random"
RESERVED_TYPES = (GRAPH_TYPE, MOST_CITED_TYPE, RANDOM_TYPE)


class Selection(NamedTuple):
    ids: list[str]
    shortfall: bool


class QueryRejected(ValueError):
    """The query cannot supply its candidate quota and is dropped."""


@dataclass(frozen=True)
class BenchmarkParams:
    positives_per_query: int = 5
    negatives_per_type: int = 10
    model_pool_depth: int = 200
    most_cited_top: int = 200
    model_count: int = 3


@dataclass
class BenchmarkEntry:
    query_id: str
    field: str
    positives: list[str]
    negatives: dict[str, list[str]]

    def candidate_ids(self) -> list[str]:
        out = list(self.positives)
        for ids in self.negatives.values():
            out.extend(ids)
        return out


@dataclass
class Benchmark:
    entries: list[BenchmarkEntry]
    manifest: dict

    def negative_types(self) -> list[str]:
        if "types" in self.manifest:
            return list(self.manifest["types"])
        return list(self.entries[0].negatives) if self.entries else []

    def by_field(self) -> dict[str, list[BenchmarkEntry]]:
        grouped: dict[str, list[BenchmarkEntry]] = {}
        for entry in self.entries:
            grouped.setdefault(entry.field, []).append(entry)
        return grouped

    def pair_count(self) -> int:
        return sum(
            len(e.positives) + sum(len(ids) for ids in e.negatives.values())
            for e in self.entries
        )


def top_negatives_per_model(run, qrels: Mapping[str, frozenset], depth: int = 200) -> dict[str, list[str]]:
    """Per query: the ranked candidates with the true positives removed,
    truncated to `depth`. Positives are filtered before truncation so the
    full depth stays available."""
    rankings = getattr(run, "rankings", run)
    out: dict[str, list[str]] = {}
    for q, ranked in rankings.items():
        relevant = qrels.get(q, frozenset())
        negatives: list[str] = []
        for item in ranked:
            doc = item[0] if isinstance(item, tuple) else item
            if doc in relevant:
                continue
            negatives.append(doc)
            if len(negatives) == depth:
                break
        out[q] = negatives
    return out


def select_diverse_models(per_model_negatives: Mapping[str, Mapping[str, Sequence[str]]],
                          m: int) -> list[str]:
    """The m models whose top negatives overlap least with the others'.

    A model's diversity score is the mean over the other models of the mean
    per-query Jaccard between top-negative sets; the m lowest win, ties by
    model name.
    """
    names = sorted(per_model_negatives)
    if len(names) < m:
        raise ValueError(f"need at least {m} models, have {len(names)}")
    pair_mean: dict[tuple[str, str], float] = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            values = []
            for q in sorted(set(per_model_negatives[a]) | set(per_model_negatives[b])):
                sa = set(per_model_negatives[a].get(q, ()))
                sb = set(per_model_negatives[b].get(q, ()))
                if not sa and not sb:
                    continue
                values.append(jaccard(sa, sb))
            pair_mean[(a, b)] = sum(values) / len(values) if values else 0.0
    scores = {}
    for name in names:
        others = [pair_mean[tuple(sorted((name, other)))] for other in names if other != name]
        scores[name] = sum(others) / len(others) if others else 0.0
    return sorted(names, key=lambda name: (scores[name], name))[:m]


def model_based_negatives(query_id: str, model_negatives: Sequence[str], n: int,
                          exclude, seed: int) -> Selection:
    """Uniform sample of n ids from a model's top negatives minus `exclude`."""
    eligible = [d for d in model_negatives if d not in exclude and d != query_id]
    if len(eligible) < n:
        return Selection(list(eligible), True)
    return Selection(random.Random(seed).sample(eligible, n), False)


def overlap_similarity(graph: CitationGraph, query_id: str, cited_id: str) -> float:
    """Fraction of the query's outgoing citations found among the cited
    article's combined incoming and outgoing citations."""
    oc_q = graph.outgoing.get(query_id, frozenset())
    if not oc_q:
        raise ValueError(f"query {query_id!r} has no outgoing citations")
    neighborhood = graph.outgoing.get(cited_id, frozenset()) | graph.incoming.get(cited_id, frozenset())
    return len(oc_q & neighborhood) / len(oc_q)


def graph_negatives(graph: CitationGraph, query_id: str, n: int, exclude) -> Selection:
    """Walk the query's cited articles in descending overlap-similarity order
    (ties by ascending id), collecting their citation neighbors that are not
    cited by the query, not the query, and not excluded. Within one cited
    article, neighbors are added in ascending id order."""
    oc_q = graph.outgoing.get(query_id, frozenset())
    if not oc_q:
        raise ValueError(f"query {query_id!r} has no outgoing citations")
    ordered = sorted(oc_q, key=lambda c: (-overlap_similarity(graph, query_id, c), c))
    picked: list[str] = []
    seen: set[str] = set()
    for cited in ordered:
        neighborhood = graph.outgoing.get(cited, frozenset()) | graph.incoming.get(cited, frozenset())
        for neighbor in sorted(neighborhood):
            if neighbor in oc_q or neighbor == query_id or neighbor in exclude or neighbor in seen:
                continue
            picked.append(neighbor)
            seen.add(neighbor)
            if len(picked) == n:
                return Selection(picked, False)
    return Selection(picked, True)


def most_cited_negatives(corpus: Corpus, graph: CitationGraph, field, query_id: str, n: int,
                         *, top: int = 200, exclude=frozenset(), seed: int = 0) -> Selection:
    """Sample n ids from the field's `top` most-cited articles (incoming
    citation count within the corpus, ties by ascending id)."""
    label = resolve_field(field)
    labeled = [art.id for art in corpus if label.name in art.fields]
    if not labeled:
        raise ValueError(f"no articles labeled {label.name!r}")
    ranked = sorted(labeled, key=lambda i: (-graph.in_degree(i), i))[:top]
    eligible = [d for d in ranked if d not in exclude and d != query_id]
    if len(eligible) < n:
        return Selection(eligible, True)
    return Selection(random.Random(seed).sample(eligible, n), False)


def random_negatives(corpus: Corpus, query_id: str, n: int, exclude, seed: int) -> Selection:
    """Uniform sample of n ids from the whole corpus minus `exclude`."""
    eligible = sorted(i for i in corpus.ids() if i not in exclude and i != query_id)
    if len(eligible) < n:
        return Selection(eligible, True)
    return Selection(random.Random(seed).sample(eligible, n), False)


def sample_positives(graph: CitationGraph, query_id: str, n: int, seed: int) -> list[str]:
    """Uniform sample of n articles cited by the query; rejects the query
    (raises) when it cites fewer than n corpus articles."""
    cited = sorted(graph.outgoing.get(query_id, frozenset()))
    if len(cited) < n:
        raise QueryRejected(f"query {query_id!r} cites {len(cited)} articles, needs {n}")
    return random.Random(seed).sample(cited, n)


def build_benchmark(corpus: Corpus, graph: CitationGraph,
                    queries_by_field: Mapping[str, Sequence[str]],
                    model_runs: Mapping[str, object],
                    params: BenchmarkParams = BenchmarkParams(),
                    seed: int = 0) -> Benchmark:
    """Assemble benchmark entries for every query, dropping queries with any
    unfixable shortfall.

    `model_runs` maps run names (must not collide with the reserved type
    labels) to rankings; the most diverse `params.model_count` runs supply
    the model-based groups. Per-query RNG streams derive from the master
    seed, so generation order cannot change the output.
    """
    for name in model_runs:
        if name in RESERVED_TYPES:
            raise ValueError(f"model run name {name!r} collides with a reserved type label")
    qrels: dict[str, frozenset] = {}
    for queries in queries_by_field.values():
        for q in queries:
            qrels[q] = graph.outgoing.get(q, frozenset())
    per_model = {
        name: top_negatives_per_model(run, qrels, params.model_pool_depth)
        for name, run in model_runs.items()
    }
    chosen = select_diverse_models(per_model, params.model_count)
    type_order = list(chosen) + [GRAPH_TYPE, MOST_CITED_TYPE, RANDOM_TYPE]

    by_abbrev = {resolve_field(key).abbrev: key for key in queries_by_field}
    entries: list[BenchmarkEntry] = []
    dropped: dict[str, int] = {}
    for abbrev in FIELD_ABBREVS:
        if abbrev not in by_abbrev:
            continue
        field_key = by_abbrev[abbrev]
        for q in sorted(queries_by_field[field_key]):
            entry = _build_entry(corpus, graph, q, abbrev, chosen, per_model, params, seed)
            if entry is None:
                dropped[abbrev] = dropped.get(abbrev, 0) + 1
            else:
                entries.append(entry)
    manifest = {
        "seed": seed,
        "models": list(chosen),
        "types": type_order,
        "params": asdict(params),
        "corpus_hash": corpus.content_hash(),
        "entries": len(entries),
        "dropped": {k: dropped[k] for k in sorted(dropped)},
        "pairs": sum(
            len(e.positives) + sum(len(ids) for ids in e.negatives.values()) for e in entries
        ),
    }
    return Benchmark(entries, manifest)


def _build_entry(corpus, graph, query_id, abbrev, chosen, per_model, params, seed):
    try:
        positives = sorted(
            sample_positives(graph, query_id, params.positives_per_query,
                             derive_seed(seed, query_id, "positives"))
        )
    except QueryRejected:
        return None
    exclude = {query_id} | set(positives) | set(graph.outgoing.get(query_id, frozenset()))
    groups: dict[str, list[str]] = {}
    for label in chosen:
        sel = model_based_negatives(query_id, per_model[label].get(query_id, []),
                                    params.negatives_per_type, exclude,
                                    derive_seed(seed, query_id, "model", label))
        if sel.shortfall:
            return None
        groups[label] = sorted(sel.ids)
        exclude |= set(sel.ids)
    sel = graph_negatives(graph, query_id, params.negatives_per_type, exclude)
    if sel.shortfall:
        return None
    groups[GRAPH_TYPE] = sorted(sel.ids)
    exclude |= set(sel.ids)
    sel = most_cited_negatives(corpus, graph, abbrev, query_id, params.negatives_per_type,
                               top=params.most_cited_top, exclude=exclude,
                               seed=derive_seed(seed, query_id, "most_cited"))
    if sel.shortfall:
        return None
    groups[MOST_CITED_TYPE] = sorted(sel.ids)
    exclude |= set(sel.ids)
    sel = random_negatives(corpus, query_id, params.negatives_per_type, exclude,
                           derive_seed(seed, query_id, "random"))
    if sel.shortfall:
        return None
    groups[RANDOM_TYPE] = sorted(sel.ids)
    return BenchmarkEntry(query_id, abbrev, positives, groups)


# ---------------------------------------------------------------------------
# benchmark file format (JSON Lines + manifest)
# ---------------------------------------------------------------------------


def write_benchmark_jsonl(benchmark: Benchmark, path, manifest_path=None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for entry in benchmark.entries:
            obj = {
                "query_id": entry.query_id,
                "field": entry.field,
                "positives": entry.positives,
                "negatives": entry.negatives,
            }
            fh.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")
    if manifest_path is not None:
        Path(manifest_path).write_text(
            json.dumps(benchmark.manifest, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )


def read_benchmark_jsonl(path, manifest_path=None) -> Benchmark:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            entries.append(BenchmarkEntry(
                obj["query_id"], obj["field"], list(obj["positives"]),
                {t: list(ids) for t, ids in obj["negatives"].items()},
            ))
    manifest: dict = {}
    if manifest_path is not None:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    return Benchmark(entries, manifest)
