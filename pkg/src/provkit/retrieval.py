"""Exact nearest-neighbor search over the three retrieval sub-indexes.

Search is a flat cosine scan with partial selection of the top k: no
approximation, so results are reproducible and directly checkable
against a full sort. Three sub-indexes back the three strategies:

    raw       embeddings of the preprocessed reference photographs
    edge      embeddings of their difference-of-Gaussians edge maps
    semantic  joint-space embeddings of the photographs and of every
              context paragraph (text entries carry the owning image's
              label, so all strategies rank the same label space)

An index is immutable once built; searches are read-only and the three
strategies of ``retrieve_all`` run concurrently and join
deterministically.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import CorpusStore
from .embedding import (
    EmbedderProvider,
    EmbeddingVector,
    deserialize_cache,
    embed_image,
    embed_text,
    serialize_cache,
)
from .errors import EmbedderMismatchError, IndexFormatError, UnsupportedVersionError
from .filtering import edge_map
from .imaging import preprocess

_INDEX_MAGIC = b"PVKIDX01"
_INDEX_VERSION = 1

SUB_INDEX_ORDER = ("raw", "edge", "semantic")
VARIANTS = ("raw", "edge", "semantic-image", "semantic-text")


@dataclass(frozen=True)
class SearchHit:
    label: str
    score: float
    strategy: str


@dataclass
class SubIndex:
    """One embedding block: aligned keys, labels and a float32 matrix."""

    embedder_id: str
    dim: int
    keys: list[str] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    matrix: np.ndarray | None = None  # (n, dim) float32

    def __len__(self) -> int:
        return len(self.keys)

    def scores(self, query: EmbeddingVector) -> np.ndarray:
        if query.embedder_id != self.embedder_id:
            raise EmbedderMismatchError(
                f"query embedded by {query.embedder_id!r}, index by {self.embedder_id!r}"
            )
        if query.dim != self.dim:
            raise EmbedderMismatchError(f"query dim {query.dim}, index dim {self.dim}")
        if not self.keys:
            return np.zeros(0, dtype=np.float64)
        return self.matrix.astype(np.float64) @ query.values

    def entries(self) -> dict[str, np.ndarray]:
        return {key: self.matrix[i] for i, key in enumerate(self.keys)}


def sub_index_from_entries(embedder_id: str, dim: int, entries: dict[str, np.ndarray]) -> SubIndex:
    keys = sorted(entries)
    labels = [_label_from_key(k) for k in keys]
    matrix = (
        np.stack([entries[k] for k in keys]).astype(np.float32)
        if keys
        else np.zeros((0, dim), dtype=np.float32)
    )
    return SubIndex(embedder_id=embedder_id, dim=dim, keys=keys, labels=labels, matrix=matrix)


def _label_from_key(key: str) -> str:
    # raw/edge keys are bare labels; semantic keys are "img|label" or
    # "txt|label|para_id" so one label may own several text entries.
    if key.startswith("img|"):
        return key[4:]
    if key.startswith("txt|"):
        return key[4:].rsplit("|", 1)[0]
    return key


@dataclass
class VectorIndex:
    raw: SubIndex
    edge: SubIndex
    semantic: SubIndex
    corpus_checksum: str
    sigma: float
    built_at: str = ""  # informational; not persisted, so rebuilds stay byte-identical

    def sub(self, name: str) -> SubIndex:
        return {"raw": self.raw, "edge": self.edge, "semantic": self.semantic}[name]

    @property
    def empty(self) -> bool:
        return len(self.raw) == 0

    def save(self, path: str | Path) -> None:
        parts = [_INDEX_MAGIC, struct.pack("<I", _INDEX_VERSION)]
        checksum = self.corpus_checksum.encode("utf-8")
        parts.append(struct.pack("<H", len(checksum)))
        parts.append(checksum)
        parts.append(struct.pack("<d", self.sigma))
        for name in SUB_INDEX_ORDER:
            sub = self.sub(name)
            ident = sub.embedder_id.encode("utf-8")
            parts.append(struct.pack("<H", len(ident)))
            parts.append(ident)
            parts.append(struct.pack("<II", sub.dim, len(sub)))
        for name in SUB_INDEX_ORDER:
            sub = self.sub(name)
            parts.append(serialize_cache(sub.embedder_id, sub.dim, sub.entries()))
        Path(path).write_bytes(b"".join(parts))

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        data = Path(path).read_bytes()
        if data[:8] != _INDEX_MAGIC:
            raise IndexFormatError(f"{path} is not an index file")
        offset = 8
        (version,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if version != _INDEX_VERSION:
            raise UnsupportedVersionError(f"index version {version} not supported")
        (n,) = struct.unpack_from("<H", data, offset)
        offset += 2
        checksum = data[offset : offset + n].decode("utf-8")
        offset += n
        (sigma,) = struct.unpack_from("<d", data, offset)
        offset += 8
        headers = []
        for _ in SUB_INDEX_ORDER:
            (n,) = struct.unpack_from("<H", data, offset)
            offset += 2
            ident = data[offset : offset + n].decode("utf-8")
            offset += n
            dim, count = struct.unpack_from("<II", data, offset)
            offset += 8
            headers.append((ident, dim, count))
        subs = []
        for ident, dim, count in headers:
            block_id, block_dim, entries, offset = deserialize_cache(data, offset, ident)
            if block_dim != dim or len(entries) != count:
                raise IndexFormatError("index header disagrees with embedding block")
            subs.append(sub_index_from_entries(block_id, dim, entries))
        if offset != len(data):
            raise IndexFormatError(f"{len(data) - offset} trailing bytes in index file")
        return cls(raw=subs[0], edge=subs[1], semantic=subs[2], corpus_checksum=checksum, sigma=sigma)


def build_index(
    store: CorpusStore,
    provider_raw: EmbedderProvider,
    provider_semantic: EmbedderProvider,
    sigma: float,
    side: int = 224,
) -> VectorIndex:
    """Embed every asset three ways and assemble the index.

    Raw and edge blocks hold exactly one entry per image asset; the
    semantic block holds one entry per asset plus one per context
    paragraph. Provider failures abort the build after bounded retries;
    nothing partial is ever published.
    """
    raw_entries: dict[str, np.ndarray] = {}
    edge_entries: dict[str, np.ndarray] = {}
    semantic_entries: dict[str, np.ndarray] = {}
    for asset in store.assets():
        label = asset.label.canonical
        data = store.image_bytes(asset.image_id)
        color = preprocess(data, target_side=side, gray=False)
        gray = preprocess(data, target_side=side, gray=True)
        raw_entries[label] = embed_image(color, provider_raw).values
        edge_entries[label] = embed_image(edge_map(gray, sigma), provider_raw).values
        semantic_entries[f"img|{label}"] = embed_image(color, provider_semantic).values
        for para_id, text in store.link_context(asset.image_id):
            key = f"txt|{label}|{para_id}"
            semantic_entries[key] = embed_text(text, provider_semantic).values
    return VectorIndex(
        raw=sub_index_from_entries(provider_raw.embedder_id, provider_raw.dim, raw_entries),
        edge=sub_index_from_entries(provider_raw.embedder_id, provider_raw.dim, edge_entries),
        semantic=sub_index_from_entries(
            provider_semantic.embedder_id, provider_semantic.dim, semantic_entries
        ),
        corpus_checksum=store.checksum,
        sigma=sigma,
        built_at=datetime.now(timezone.utc).isoformat(),
    )


def _select_top(scores: np.ndarray, labels: Sequence[str], k: int) -> list[tuple[str, float]]:
    """Exact top-k by (score desc, label asc), safe under boundary ties."""
    n = scores.shape[0]
    if n == 0:
        return []
    k = min(k, n)
    if k < n:
        threshold = np.partition(scores, n - k)[n - k]
        candidate_idx = np.flatnonzero(scores >= threshold)
    else:
        candidate_idx = np.arange(n)
    ranked = sorted(candidate_idx, key=lambda i: (-scores[i], labels[i]))
    return [(labels[i], float(scores[i])) for i in ranked[:k]]


def search(sub: SubIndex, query: EmbeddingVector, k: int, strategy: str = "raw") -> list[SearchHit]:
    """The k highest-cosine entries, fewer if the index is smaller.

    Ordering is score descending with ties broken by label ascending.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scores = sub.scores(query)
    return [SearchHit(label, score, strategy) for label, score in _select_top(scores, sub.labels, k)]


def search_labels(sub: SubIndex, query: EmbeddingVector, k: int, strategy: str) -> list[SearchHit]:
    """Top-k distinct labels, reducing multi-entry labels to their best score.

    For raw/edge (one entry per label) this coincides with ``search``;
    for the semantic block it folds text entries into the owning image's
    label before ranking.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scores = sub.scores(query)
    best: dict[str, float] = {}
    for i, label in enumerate(sub.labels):
        s = float(scores[i])
        if label not in best or s > best[label]:
            best[label] = s
    ranked = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
    return [SearchHit(label, score, strategy) for label, score in ranked[:k]]


@dataclass(frozen=True)
class StrategyHits:
    raw: list[SearchHit]
    edge: list[SearchHit]
    clip: list[SearchHit]


class Retriever:
    """Runs the three retrieval strategies against a published index."""

    def __init__(
        self,
        index: VectorIndex,
        provider_raw: EmbedderProvider,
        provider_semantic: EmbedderProvider,
        side: int = 224,
        allow_partial: bool = False,
    ):
        self.index = index
        self.provider_raw = provider_raw
        self.provider_semantic = provider_semantic
        self.side = side
        # Degraded mode: a failing strategy contributes an empty hit list
        # instead of failing the whole retrieval. Off by default because
        # aggregation semantics assume all three strategies answered.
        self.allow_partial = allow_partial

    def _run_raw(self, data: bytes, k: int) -> list[SearchHit]:
        q = embed_image(preprocess(data, self.side, gray=False), self.provider_raw)
        return search_labels(self.index.raw, q, k, "raw")

    def _run_edge(self, data: bytes, k: int) -> list[SearchHit]:
        gray = preprocess(data, self.side, gray=True)
        q = embed_image(edge_map(gray, self.index.sigma), self.provider_raw)
        return search_labels(self.index.edge, q, k, "edge")

    def _run_clip(self, data: bytes, k: int) -> list[SearchHit]:
        q = embed_image(preprocess(data, self.side, gray=False), self.provider_semantic)
        return search_labels(self.index.semantic, q, k, "clip")

    def retrieve_all(self, query_image_bytes: bytes, k: int) -> StrategyHits:
        """Run raw, edge and clip retrieval concurrently and join in order."""
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        runners = (self._run_raw, self._run_edge, self._run_clip)
        with ThreadPoolExecutor(max_workers=3) as pool:
            futures = [pool.submit(fn, query_image_bytes, k) for fn in runners]
            results = []
            for future in futures:
                try:
                    results.append(future.result())
                except Exception:
                    if not self.allow_partial:
                        raise
                    results.append([])
        return StrategyHits(raw=results[0], edge=results[1], clip=results[2])
