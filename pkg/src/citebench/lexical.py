"""BM25 retrieval over an in-memory inverted index.

Documents are the concatenation of an article's title and abstract. Scoring
follows the classic formulation

    s(Q, D) = sum_i IDF(q_i) * f(q_i, D) (k1 + 1) / (f(q_i, D) + k1 (1 - b + b |D| / avgdl))
    IDF(t)  = ln((N - n(t) + 0.5) / (n(t) + 0.5) + 1)

summed over the query's token sequence, so a term occurring twice in the
query contributes twice. The +1 inside the log keeps IDF strictly positive.
Search returns only documents matching at least one query term; ties break
by ascending doc id.
"""

from __future__ import annotations

import math
import re
import struct
from collections import Counter
from dataclasses import dataclass

from . import metrics
from .corpus import Corpus

_WORD = re.compile(r"\w+")


@dataclass(frozen=True)
class AnalyzerConfig:
    """Deterministic text analysis shared by documents and queries."""

    lowercase: bool = True
    stopwords: frozenset[str] | None = None
    stemming: str | None = None  # reserved; only None is supported

    def __post_init__(self) -> None:
        if self.stemming is not None:
            raise ValueError("stemming is reserved and must be None")


def analyze(text: str, config: AnalyzerConfig = AnalyzerConfig()) -> list[str]:
    """Unicode word tokens in document order, lowercased and stop-filtered per config."""
    if config.lowercase:
        text = text.lower()
    tokens = _WORD.findall(text)
    if config.stopwords:
        tokens = [t for t in tokens if t not in config.stopwords]
    return tokens


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 0.9
    b: float = 0.4

    def __post_init__(self) -> None:
        if self.k1 < 0:
            raise ValueError("k1 must be >= 0")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must be in [0, 1]")


class Bm25Index:
    """Inverted index with exact term frequencies.

    postings maps term -> {doc id: tf}; doc_lengths maps doc id -> token
    count. Immutable after build; scoring and search are pure.
    """

    def __init__(self, postings: dict[str, dict[str, int]], doc_lengths: dict[str, int],
                 analyzer: AnalyzerConfig):
        self.postings = postings
        self.doc_lengths = doc_lengths
        self.analyzer = analyzer
        self.N = len(doc_lengths)
        self.avgdl = sum(doc_lengths.values()) / self.N if self.N else 0.0


def build_index(corpus: Corpus, config: AnalyzerConfig = AnalyzerConfig()) -> Bm25Index:
    if len(corpus) == 0:
        raise ValueError("cannot index an empty corpus")
    postings: dict[str, dict[str, int]] = {}
    doc_lengths: dict[str, int] = {}
    for art in corpus:
        tokens = analyze(art.text, config)
        doc_lengths[art.id] = len(tokens)
        for term, tf in Counter(tokens).items():
            postings.setdefault(term, {})[art.id] = tf
    return Bm25Index(postings, doc_lengths, config)


def idf(index: Bm25Index, term: str) -> float:
    """ln((N - n + 0.5)/(n + 0.5) + 1), with n = 0 for unseen terms."""
    n = len(index.postings.get(term, ()))
    return math.log((index.N - n + 0.5) / (n + 0.5) + 1.0)


def score(index: Bm25Index, query_terms: list[str], doc_id: str, params: Bm25Params = Bm25Params()) -> float:
    """Score one document against an analyzed query token sequence."""
    if doc_id not in index.doc_lengths:
        raise KeyError(f"unknown doc id {doc_id!r}")
    norm = params.k1 * (1.0 - params.b + params.b * index.doc_lengths[doc_id] / index.avgdl)
    total = 0.0
    for term in query_terms:
        tf = index.postings.get(term, {}).get(doc_id, 0)
        if tf:
            total += idf(index, term) * (tf * (params.k1 + 1.0)) / (tf + norm)
    return total


def search(index: Bm25Index, query_text: str, params: Bm25Params = Bm25Params(),
           k: int = 500, pool=None) -> list[tuple[str, float]]:
    """Top-k documents matching the query, optionally restricted to a pool
    of doc ids. Descending score, ties by ascending doc id; every returned
    score equals score() exactly.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    tokens = analyze(query_text, index.analyzer)
    acc: dict[str, float] = {}
    for term in tokens:
        plist = index.postings.get(term)
        if not plist:
            continue
        # accumulation order per doc equals the query token order, so sums
        # are bit-identical to score()
        for doc_id, tf in plist.items():
            if pool is not None and doc_id not in pool:
                continue
            norm = params.k1 * (1.0 - params.b + params.b * index.doc_lengths[doc_id] / index.avgdl)
            contribution = idf(index, term) * (tf * (params.k1 + 1.0)) / (tf + norm)
            acc[doc_id] = acc.get(doc_id, 0.0) + contribution
    ranked = sorted(acc.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


def default_tuning_grid() -> list[Bm25Params]:
    """b in {0.0, 0.1, ..., 1.0} crossed with k1 in {0.1, 0.3, ..., 2.9}."""
    return [
        Bm25Params(k1=round(0.1 + 0.2 * i, 1), b=round(0.1 * j, 1))
        for j in range(11)
        for i in range(15)
    ]


def _objective(ranked_ids: list[str], positives, name: str) -> float:
    if name == "map":
        return metrics.average_precision(ranked_ids, positives)
    if name == "ndcg":
        return metrics.ndcg(ranked_ids, positives)
    if name.startswith("recall@"):
        return metrics.recall_at_k(ranked_ids, positives, int(name.split("@", 1)[1]))
    raise ValueError(f"unknown objective {name!r}")


def tune_params(index: Bm25Index, validation: list[tuple[str, set]], grid: list[Bm25Params],
                *, pool=None, objective: str = "map", cutoff: int | None = None) -> Bm25Params:
    """Grid point maximizing the mean objective over validation queries.

    `validation` pairs query text with the query's positive id set. Ties
    break toward smaller (b, k1).
    """
    if not grid:
        raise ValueError("empty parameter grid")
    if not validation:
        raise ValueError("empty validation set")
    k = cutoff if cutoff is not None else (len(pool) if pool is not None else index.N)
    best_key = None
    best_params = None
    for params in grid:
        total = 0.0
        for query_text, positives in validation:
            ranked = search(index, query_text, params, k=k, pool=pool)
            total += _objective([doc for doc, _ in ranked], positives, objective)
        mean = total / len(validation)
        key = (-mean, params.b, params.k1)
        if best_key is None or key < best_key:
            best_key, best_params = key, params
    return best_params


# ---------------------------------------------------------------------------
# binary index persistence (little-endian, versioned header)
# ---------------------------------------------------------------------------

_MAGIC = b"CBIX"
_VERSION = 1


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        values = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return values

    def take_str(self) -> str:
        (n,) = self.take("<I")
        raw = self.data[self.pos:self.pos + n]
        self.pos += n
        return raw.decode("utf-8")


def save_index(index: Bm25Index, path) -> None:
    """Persist the index so that load_index(save_index(...)) ranks bit-identically."""
    out = [_MAGIC, struct.pack("<I", _VERSION)]
    cfg = index.analyzer
    stopwords = sorted(cfg.stopwords) if cfg.stopwords else []
    out.append(struct.pack("<BBI", int(cfg.lowercase), int(cfg.stopwords is not None), len(stopwords)))
    out.extend(_pack_str(w) for w in stopwords)
    doc_ids = list(index.doc_lengths)
    out.append(struct.pack("<Q", len(doc_ids)))
    for doc_id in doc_ids:
        out.append(_pack_str(doc_id))
        out.append(struct.pack("<Q", index.doc_lengths[doc_id]))
    row = {doc_id: i for i, doc_id in enumerate(doc_ids)}
    out.append(struct.pack("<Q", len(index.postings)))
    for term, plist in index.postings.items():
        out.append(_pack_str(term))
        out.append(struct.pack("<Q", len(plist)))
        for doc_id, tf in plist.items():
            out.append(struct.pack("<QQ", row[doc_id], tf))
    with open(path, "wb") as fh:
        fh.write(b"".join(out))


def load_index(path) -> Bm25Index:
    with open(path, "rb") as fh:
        reader = _Reader(fh.read())
    if reader.data[:4] != _MAGIC:
        raise ValueError(f"{path}: not an index file")
    reader.pos = 4
    (version,) = reader.take("<I")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported index version {version}")
    lowercase, has_stop, n_stop = reader.take("<BBI")
    stopwords = frozenset(reader.take_str() for _ in range(n_stop)) if has_stop else None
    config = AnalyzerConfig(lowercase=bool(lowercase), stopwords=stopwords)
    (n_docs,) = reader.take("<Q")
    doc_ids: list[str] = []
    doc_lengths: dict[str, int] = {}
    for _ in range(n_docs):
        doc_id = reader.take_str()
        (length,) = reader.take("<Q")
        doc_ids.append(doc_id)
        doc_lengths[doc_id] = length
    (n_terms,) = reader.take("<Q")
    postings: dict[str, dict[str, int]] = {}
    for _ in range(n_terms):
        term = reader.take_str()
        (n_post,) = reader.take("<Q")
        plist: dict[str, int] = {}
        for _ in range(n_post):
            row_idx, tf = reader.take("<QQ")
            plist[doc_ids[row_idx]] = tf
        postings[term] = plist
    return Bm25Index(postings, doc_lengths, config)
