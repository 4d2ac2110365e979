"""Embedding storage and exact top-k nearest-neighbor retrieval.

Vectors are produced elsewhere (any single-vector-per-article encoder) and
consumed here from a raw little-endian float32 file plus a JSON manifest.
Search is an exhaustive scan, never approximate: scores are accumulated in
float64 with row-local reductions, so results do not depend on how the rows
are chunked for parallel scanning.
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence

import numpy as np

METRICS = ("cosine", "dot", "euclidean")


class EmbeddingError(ValueError):
    """Invalid embedding data (size mismatch, NaN/Inf, duplicate ids)."""


class EmbeddingStore:
    """Row-major float32 vectors addressed by article id. Immutable after load."""

    def __init__(self, ids: Sequence[str], vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=np.float32)
        if vectors.ndim != 2:
            raise EmbeddingError("vectors must form a 2-D matrix")
        if vectors.shape[1] < 1:
            raise EmbeddingError("vector dimension must be >= 1")
        if len(ids) != vectors.shape[0]:
            raise EmbeddingError(f"{len(ids)} ids for {vectors.shape[0]} vector rows")
        if len(set(ids)) != len(ids):
            raise EmbeddingError("duplicate embedding ids")
        if not np.isfinite(vectors).all():
            raise EmbeddingError("vectors contain NaN or Inf values")
        self.ids = list(ids)
        self.vectors = vectors
        self.vectors.setflags(write=False)
        self._row = {article_id: i for i, article_id in enumerate(self.ids)}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, article_id: str) -> bool:
        return article_id in self._row

    def vector(self, article_id: str) -> np.ndarray:
        return self.vectors[self._row[article_id]]


def load_embeddings(vector_path, manifest_path) -> EmbeddingStore:
    """Load vectors from a raw '<f4' file validated against its manifest.

    Manifest: JSON object {"dim": int, "count": int, "ids": [str, ...]}.
    The vector file must hold exactly count*dim little-endian float32s.
    """
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    dim, count, ids = manifest["dim"], manifest["count"], manifest["ids"]
    if len(ids) != count:
        raise EmbeddingError(f"manifest lists {len(ids)} ids but count={count}")
    data = np.fromfile(vector_path, dtype="<f4")
    if data.size != count * dim:
        raise EmbeddingError(
            f"vector file holds {data.size} floats, manifest requires {count * dim}"
        )
    return EmbeddingStore(ids, data.reshape(count, dim))


def save_embeddings(ids: Sequence[str], vectors: np.ndarray, vector_path, manifest_path) -> None:
    vectors = np.asarray(vectors, dtype="<f4")
    with open(vector_path, "wb") as fh:
        fh.write(vectors.tobytes(order="C"))
    manifest = {"dim": int(vectors.shape[1]), "count": int(vectors.shape[0]), "ids": list(ids)}
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, ensure_ascii=False, separators=(",", ":"))
        fh.write("\n")


def _scores(vectors: np.ndarray, q: np.ndarray, metric: str) -> np.ndarray:
    # all reductions are row-local so chunked scans reproduce the full scan
    v = vectors.astype(np.float64)
    if metric == "dot":
        return (v * q).sum(axis=1)
    if metric == "euclidean":
        diff = v - q
        return np.sqrt((diff * diff).sum(axis=1))
    if metric == "cosine":
        dots = (v * q).sum(axis=1)
        row_norms = np.sqrt((v * v).sum(axis=1))
        q_norm = math.sqrt(float((q * q).sum()))
        denom = row_norms * q_norm
        safe = np.where(denom > 0.0, denom, 1.0)
        return np.where(denom > 0.0, dots / safe, 0.0)
    raise ValueError(f"unknown metric {metric!r}")


def knn(store: EmbeddingStore, query, k: int, metric: str = "cosine",
        pool=None, chunks: int = 1) -> list[tuple[str, float]]:
    """Exact top-k under the metric, optionally restricted to a pool of ids.

    Euclidean ranks ascending by distance, cosine/dot descending by
    similarity; ties break by ascending article id. The cosine of a
    zero-norm vector is 0 against everything. `chunks` partitions the rows
    for scanning; the deterministic merge keeps results identical for every
    chunk count.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if q.shape[0] != store.dim:
        raise ValueError(f"query has dimension {q.shape[0]}, store has {store.dim}")
    if pool is None:
        rows = np.arange(len(store.ids), dtype=np.intp)
    else:
        try:
            rows = np.array(sorted(store._row[i] for i in pool), dtype=np.intp)
        except KeyError as exc:
            raise KeyError(f"pool id {exc.args[0]!r} has no embedding row") from None
    if rows.size == 0:
        return []
    descending = metric in ("cosine", "dot")
    candidates: list[tuple[str, float]] = []
    for part in np.array_split(rows, max(1, min(chunks, rows.size))):
        if part.size == 0:
            continue
        part_scores = _scores(store.vectors[part], q, metric)
        candidates.extend((store.ids[r], float(s)) for r, s in zip(part, part_scores))
    if descending:
        candidates.sort(key=lambda item: (-item[1], item[0]))
    else:
        candidates.sort(key=lambda item: (item[1], item[0]))
    return candidates[:k]
