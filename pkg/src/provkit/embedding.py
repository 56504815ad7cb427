"""Embedding providers, unit vectors, and the on-disk vector cache.

A provider turns images (and optionally texts) into fixed-dimension
vectors; every vector leaving this module is L2-normalized and tagged
with the provider's embedder_id so that vectors from different spaces
can never be compared by accident.

Two providers ship with the package: a deterministic, dependency-free
stub used throughout the test suite, and an HTTP client for a remote
joint image-text encoder service.
"""

from __future__ import annotations

import base64
import os
import struct
import time
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
import requests

from .errors import (
    EmbedderMismatchError,
    IndexFormatError,
    ProviderContractError,
    ProviderTransportError,
)
from .imaging import ImageTensor, box_resize, encode_png, to_grayscale

STUB_EMBEDDER_ID = "stub-gray16"
STUB_DIM = 256

_CACHE_MAGIC = b"PVEMBC01"
_CACHE_VERSION = 1


@dataclass(frozen=True)
class EmbeddingVector:
    """A unit-norm vector tagged with the embedder that produced it."""

    embedder_id: str
    values: np.ndarray

    def __post_init__(self):
        norm = float(np.linalg.norm(self.values))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"vector is not unit-norm (|v| = {norm})")

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


@runtime_checkable
class EmbedderProvider(Protocol):
    """Capability contract for embedding backends.

    Conforming providers are deterministic: the same input always maps
    to the same vector, and dim is constant for a given embedder_id.
    """

    embedder_id: str
    dim: int
    supports_text: bool

    def embed_images(self, tensors: Sequence[ImageTensor]) -> list[np.ndarray]: ...

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]: ...


def _normalize(raw: np.ndarray, fallback_dim: int) -> np.ndarray:
    """L2-normalize, mapping a (near) zero vector to the first basis vector."""
    vec = np.asarray(raw, dtype=np.float64)
    norm = float(np.linalg.norm(vec))
    if norm < 1e-12:
        out = np.zeros(fallback_dim, dtype=np.float64)
        out[0] = 1.0
        return out
    return vec / norm


class StubEmbedder:
    """Deterministic reference provider for tests and demos.

    Images: grayscale, exact area-average resize to 16x16, flatten to
    256 values, subtract the mean, L2-normalize. Texts: byte trigrams
    hashed into 256 buckets by their base-256 value, then L2-normalized.
    Degenerate inputs whose centered vector has zero norm (a constant
    image, a text shorter than three bytes) map to the first basis
    vector so the unit-norm contract always holds.
    """

    embedder_id = STUB_EMBEDDER_ID
    dim = STUB_DIM
    supports_text = True

    def embed_images(self, tensors: Sequence[ImageTensor]) -> list[np.ndarray]:
        out = []
        for t in tensors:
            plane = to_grayscale(t).plane
            small = box_resize(plane, 16, 16).reshape(-1)
            centered = small - small.mean()
            out.append(_normalize(centered, self.dim))
        return out

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        out = []
        for text in texts:
            data = text.encode("utf-8")
            counts = np.zeros(self.dim, dtype=np.float64)
            for i in range(len(data) - 2):
                bucket = (data[i] * 65536 + data[i + 1] * 256 + data[i + 2]) % self.dim
                counts[bucket] += 1.0
            out.append(_normalize(counts, self.dim))
        return out


class RemoteEmbedder:
    """HTTP client for a remote embedding service.

    Wire contract: POST {"inputs": [{"kind": "image", "b64": ...} |
    {"kind": "text", "text": ...}]} to the endpoint, answered with
    {"embedder_id": ..., "dim": ..., "vectors": [[...], ...]}. The
    endpoint defaults to the EMBED_API_BASE environment variable.

    embedder_id and dim are learned from the first response and pinned;
    any later drift is a fatal contract violation.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        embedder_id: str | None = None,
        dim: int | None = None,
        supports_text: bool = True,
        session: requests.Session | None = None,
        timeout: float = 60.0,
    ):
        endpoint = endpoint or os.environ.get("EMBED_API_BASE")
        if not endpoint:
            raise ValueError("no embedding endpoint: pass endpoint or set EMBED_API_BASE")
        self.endpoint = endpoint
        self.embedder_id = embedder_id
        self.dim = dim
        self.supports_text = supports_text
        self._session = session or requests.Session()
        self._timeout = timeout

    def _post(self, inputs: list[dict]) -> list[np.ndarray]:
        try:
            resp = self._session.post(self.endpoint, json={"inputs": inputs}, timeout=self._timeout)
        except requests.RequestException as exc:
            raise ProviderTransportError(f"embedding endpoint {self.endpoint} unreachable: {exc}") from exc
        if resp.status_code >= 500:
            raise ProviderTransportError(f"embedding endpoint returned {resp.status_code}")
        if resp.status_code != 200:
            raise ProviderContractError(f"embedding endpoint returned {resp.status_code}: {resp.text[:200]}")
        try:
            payload = resp.json()
            embedder_id = payload["embedder_id"]
            dim = int(payload["dim"])
            vectors = payload["vectors"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderContractError(f"malformed embedding response: {exc}") from exc
        if self.embedder_id is None:
            self.embedder_id = embedder_id
        elif embedder_id != self.embedder_id:
            raise ProviderContractError(
                f"embedder_id drifted: expected {self.embedder_id}, got {embedder_id}"
            )
        if self.dim is None:
            self.dim = dim
        elif dim != self.dim:
            raise ProviderContractError(f"dim drifted: expected {self.dim}, got {dim}")
        if len(vectors) != len(inputs):
            raise ProviderContractError(
                f"expected {len(inputs)} vectors, got {len(vectors)}"
            )
        return [np.asarray(v, dtype=np.float64) for v in vectors]

    def embed_images(self, tensors: Sequence[ImageTensor]) -> list[np.ndarray]:
        inputs = [
            {"kind": "image", "b64": base64.b64encode(encode_png(t)).decode("ascii")}
            for t in tensors
        ]
        return self._post(inputs)

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not self.supports_text:
            raise ProviderContractError("provider does not support text inputs")
        return self._post([{"kind": "text", "text": s} for s in texts])


def _call_with_retries(fn, retries: int, backoff: float):
    attempt = 0
    while True:
        try:
            return fn()
        except ProviderTransportError:
            if attempt >= retries:
                raise
            time.sleep(backoff * (2**attempt))
            attempt += 1


def _finish(raw: np.ndarray, provider: EmbedderProvider) -> EmbeddingVector:
    if raw.shape != (provider.dim,):
        raise ProviderContractError(
            f"provider {provider.embedder_id} returned shape {raw.shape}, expected ({provider.dim},)"
        )
    return EmbeddingVector(provider.embedder_id, _normalize(raw, provider.dim))


def embed_image(
    t: ImageTensor, provider: EmbedderProvider, retries: int = 2, backoff: float = 0.05
) -> EmbeddingVector:
    """Embed one image, retrying transient transport failures."""
    raw = _call_with_retries(lambda: provider.embed_images([t])[0], retries, backoff)
    return _finish(raw, provider)


def embed_text(
    text: str, provider: EmbedderProvider, retries: int = 2, backoff: float = 0.05
) -> EmbeddingVector:
    """Embed one text; requires a provider with supports_text."""
    if not provider.supports_text:
        raise ProviderContractError(f"provider {provider.embedder_id} does not support text")
    raw = _call_with_retries(lambda: provider.embed_texts([text])[0], retries, backoff)
    return _finish(raw, provider)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity; equals the dot product since inputs are unit-norm."""
    if a.embedder_id != b.embedder_id:
        raise EmbedderMismatchError(f"embedder mismatch: {a.embedder_id} vs {b.embedder_id}")
    if a.dim != b.dim:
        raise EmbedderMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return float(np.dot(a.values, b.values))


def write_cache(path, embedder_id: str, dim: int, entries: dict[str, np.ndarray]) -> None:
    """Write keyed float32 vectors in the binary cache format.

    Layout: magic, u32 version, (u16 len + utf8) embedder_id, u32 dim,
    u32 count, then per record (keys sorted ascending): u16 key length,
    key utf8, dim little-endian float32 values.
    """
    with open(path, "wb") as fh:
        fh.write(serialize_cache(embedder_id, dim, entries))


def serialize_cache(embedder_id: str, dim: int, entries: dict[str, np.ndarray]) -> bytes:
    ident = embedder_id.encode("utf-8")
    parts = [
        _CACHE_MAGIC,
        struct.pack("<I", _CACHE_VERSION),
        struct.pack("<H", len(ident)),
        ident,
        struct.pack("<II", dim, len(entries)),
    ]
    for key in sorted(entries):
        vec = np.asarray(entries[key], dtype="<f4")
        if vec.shape != (dim,):
            raise ValueError(f"entry {key!r} has shape {vec.shape}, expected ({dim},)")
        encoded = key.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(vec.tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.offset = offset

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise IndexFormatError("truncated cache data")
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def deserialize_cache(
    data: bytes, offset: int = 0, expect_embedder_id: str | None = None
) -> tuple[str, int, dict[str, np.ndarray], int]:
    """Parse one cache block; returns (embedder_id, dim, entries, end offset)."""
    r = _Reader(data, offset)
    if r.take(len(_CACHE_MAGIC)) != _CACHE_MAGIC:
        raise IndexFormatError("bad cache magic")
    version = r.u32()
    if version != _CACHE_VERSION:
        raise IndexFormatError(f"unsupported cache version {version}")
    embedder_id = r.take(r.u16()).decode("utf-8")
    if expect_embedder_id is not None and embedder_id != expect_embedder_id:
        raise EmbedderMismatchError(
            f"cache written by {embedder_id!r}, expected {expect_embedder_id!r}"
        )
    dim = r.u32()
    count = r.u32()
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        key = r.take(r.u16()).decode("utf-8")
        vec = np.frombuffer(r.take(4 * dim), dtype="<f4").astype(np.float64)
        entries[key] = vec
    return embedder_id, dim, entries, r.offset


def read_cache(path, expect_embedder_id: str | None = None) -> tuple[str, int, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        data = fh.read()
    embedder_id, dim, entries, end = deserialize_cache(data, 0, expect_embedder_id)
    if end != len(data):
        raise IndexFormatError(f"{len(data) - end} trailing bytes after cache records")
    return embedder_id, dim, entries
