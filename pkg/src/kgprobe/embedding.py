"""Sentence embedding providers and cosine-based semantic distance.

The fallback provider is a deterministic signed-hash bag-of-words, so the
whole pipeline (and test suite) runs without a network or model weights.
An HTTP provider slots in behind the same interface for real encoders.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass

import numpy as np

from kgprobe.errors import BackendError, UnembeddableError
from kgprobe.text import content_words


@dataclass(frozen=True)
class EmbeddingVector:
    vector: np.ndarray
    provider: str


class FallbackEmbedder:
    """Hashed bag-of-words: each content word lands in one of ``dim`` buckets
    with a deterministic sign; counts accumulate and the result is
    L2-normalized. Word order never matters."""

    def __init__(self, dim: int = 4096, stopwords: frozenset[str] | None = None):
        self.dim = dim
        self.stopwords = stopwords
        self.provider_id = f"fallback:hashed-bow-{dim}"

    def embed(self, text: str) -> EmbeddingVector:
        words = content_words(text, self.stopwords)
        if not words:
            raise UnembeddableError(f"no content words to embed in {text!r}")
        vec = np.zeros(self.dim)
        for word in words:
            digest = hashlib.md5(word.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:8], "big") % self.dim
            sign = 1.0 if digest[8] & 1 else -1.0
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise UnembeddableError(f"hashing cancelled out for {text!r}")
        return EmbeddingVector(vec / norm, self.provider_id)


class HttpEmbedder:
    """POSTs ``{"text": ...}`` and reads the vector at a configurable JSON path."""

    def __init__(self, endpoint: str, vector_path: str = "vector", transport=None):
        self.endpoint = endpoint
        self.vector_path = vector_path
        self.provider_id = f"http:{endpoint}"
        self._transport = transport or _default_transport

    def embed(self, text: str) -> EmbeddingVector:
        try:
            body = self._transport(self.endpoint, {"text": text})
        except Exception as exc:
            raise BackendError(f"embedding request failed: {exc}", retryable=True) from exc
        value = walk_json_path(body, self.vector_path)
        if not isinstance(value, (list, tuple)) or not value:
            raise BackendError(
                f"no vector at path {self.vector_path!r}", raw=repr(body)
            )
        vec = np.asarray(value, dtype=float)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise UnembeddableError(f"provider returned a zero vector for {text!r}")
        return EmbeddingVector(vec, self.provider_id)


def _default_transport(endpoint: str, payload: dict) -> dict:
    import requests

    resp = requests.post(endpoint, json=payload, timeout=30)
    resp.raise_for_status()
    return resp.json()


def walk_json_path(body, path: str):
    """Follow a dotted path through dicts and lists ('choices.0.text')."""
    node = body
    for key in path.split("."):
        if isinstance(node, list):
            node = node[int(key)]
        elif isinstance(node, dict):
            if key not in node:
                raise BackendError(f"missing key {key!r} in response", raw=repr(body))
            node = node[key]
        else:
            raise BackendError(f"cannot descend into {type(node).__name__}", raw=repr(body))
    return node


class CachingEmbedder:
    """Memoizes any embedder; safe for concurrent readers, writes serialized."""

    def __init__(self, inner):
        self.inner = inner
        self.provider_id = inner.provider_id
        self._cache: dict[str, EmbeddingVector] = {}
        self._lock = threading.Lock()

    def embed(self, text: str) -> EmbeddingVector:
        key = hashlib.sha256(text.encode("utf-8")).hexdigest()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        vec = self.inner.embed(text)
        with self._lock:
            self._cache[key] = vec
        return vec


def embed(text: str, provider) -> EmbeddingVector:
    """Embed text through any provider object exposing ``.embed``."""
    return provider.embed(text)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    num = float(np.dot(a.vector, b.vector))
    den = float(np.linalg.norm(a.vector) * np.linalg.norm(b.vector))
    if den == 0.0:
        raise UnembeddableError("cosine undefined for a zero vector")
    return max(-1.0, min(1.0, num / den))


def semantic_distance(a: str, b: str, provider) -> float:
    """1 - cosine similarity of the two embeddings; 0 for identical texts."""
    if a == b:
        return 0.0
    return 1.0 - cosine(provider.embed(a), provider.embed(b))


def make_embedder(cfg: dict, stopwords: frozenset[str] | None = None, transport=None):
    """Build the configured provider (wrapped in a cache)."""
    kind = cfg.get("provider", "fallback")
    if kind == "fallback":
        inner = FallbackEmbedder(dim=int(cfg.get("dim", 4096)), stopwords=stopwords)
    elif kind == "http":
        if not cfg.get("endpoint"):
            raise BackendError("http embedding provider requires an endpoint")
        inner = HttpEmbedder(
            cfg["endpoint"], cfg.get("vector_path", "vector"), transport=transport
        )
    else:
        raise BackendError(f"unknown embedding provider {kind!r}")
    return CachingEmbedder(inner)
