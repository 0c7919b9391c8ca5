"""Dense text embeddings and cosine similarity.

Two backends: "offline-hash" (deterministic hashed bag of character trigrams,
L2-normalized; the test double for real dual encoders) and "remote" (an
OpenAI-compatible POST /v1/embeddings endpoint). Embeddings are float64
numpy arrays of fixed dimension.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import httpx
import numpy as np

from ontorag import _kernels
from ontorag.errors import EmbeddingError, TransportError

RETRY_ATTEMPTS = 3
RETRY_BACKOFF_S = 0.25
_RETRIABLE_STATUSES = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class EmbedderConfig:
    backend: str = "offline-hash"
    dims: int = 256
    endpoint_url: str | None = None
    model_id: str | None = None
    batch_size: int = 64
    max_inflight: int = 8
    api_key_env: str = "ONTORAG_API_KEY"

    def __post_init__(self):
        if self.backend not in ("offline-hash", "remote"):
            raise ValueError(f"unknown embedder backend: {self.backend!r}")
        if self.dims <= 0:
            raise ValueError("dims must be positive")
        if self.backend == "remote" and not (self.endpoint_url and self.model_id):
            raise ValueError("remote embedder requires endpoint_url and model_id")


def normalize_for_hashing(text: str) -> str:
    """Lowercase, collapse whitespace, and pad with one space on each side."""
    collapsed = " ".join(text.lower().split())
    if not collapsed:
        raise EmbeddingError("cannot embed empty text")
    return f" {collapsed} "


def _offline_embed(text: str, dims: int) -> np.ndarray:
    counts = _kernels.trigram_bucket_counts(normalize_for_hashing(text), dims)
    norm = math.sqrt(float(np.dot(counts, counts)))
    if norm == 0.0:  # unreachable: padding guarantees at least one trigram
        raise EmbeddingError("hashed trigram bag is empty")
    return counts / norm


def _auth_headers(cfg: EmbedderConfig) -> dict[str, str]:
    key = os.environ.get(cfg.api_key_env, "")
    return {"Authorization": f"Bearer {key}"} if key else {}


def _post_with_retries(
    client: httpx.Client, url: str, payload: dict, headers: dict[str, str]
) -> dict:
    last_exc: Exception | None = None
    for attempt in range(RETRY_ATTEMPTS):
        try:
            resp = client.post(url, json=payload, headers=headers)
        except httpx.HTTPError as exc:
            last_exc = TransportError(f"transport failure calling {url}: {exc}")
        else:
            if resp.status_code == 200:
                return resp.json()
            last_exc = TransportError(
                f"{url} returned {resp.status_code}: {resp.text[:200]}",
                status=resp.status_code,
            )
            if resp.status_code not in _RETRIABLE_STATUSES:
                raise last_exc
        if attempt < RETRY_ATTEMPTS - 1 and RETRY_BACKOFF_S > 0:
            time.sleep(RETRY_BACKOFF_S * (2**attempt))
    raise last_exc  # type: ignore[misc]


def _remote_embed_batch(
    cfg: EmbedderConfig,
    texts: list[str],
    role: str,
    transport: httpx.BaseTransport | None = None,
) -> list[np.ndarray]:
    payload = {"model": cfg.model_id, "input": texts, "role": role}
    with httpx.Client(transport=transport, timeout=30.0) as client:
        body = _post_with_retries(client, cfg.endpoint_url, payload, _auth_headers(cfg))
    try:
        items = sorted(body["data"], key=lambda item: item.get("index", 0))
        vectors = [np.asarray(item["embedding"], dtype=np.float64) for item in items]
    except (KeyError, TypeError) as exc:
        raise EmbeddingError(f"malformed embeddings response: {exc}") from exc
    if len(vectors) != len(texts):
        raise EmbeddingError(
            f"endpoint returned {len(vectors)} embeddings for {len(texts)} inputs"
        )
    for vec in vectors:
        if vec.shape != (cfg.dims,):
            raise EmbeddingError(f"expected dims {cfg.dims}, endpoint returned {vec.shape[0]}")
        if not np.all(np.isfinite(vec)):
            raise EmbeddingError("endpoint returned non-finite embedding values")
    return vectors


def embed_text(
    cfg: EmbedderConfig,
    text: str,
    role: str = "document",
    transport: httpx.BaseTransport | None = None,
) -> np.ndarray:
    """Embed one text. Deterministic for the offline-hash backend."""
    if role not in ("query", "document"):
        raise ValueError(f"role must be 'query' or 'document', got {role!r}")
    if not text.strip():
        raise EmbeddingError("cannot embed empty text")
    if cfg.backend == "offline-hash":
        return _offline_embed(text, cfg.dims)
    return _remote_embed_batch(cfg, [text], role, transport=transport)[0]


def batch_embed(
    cfg: EmbedderConfig,
    texts: list[str],
    role: str = "document",
    transport: httpx.BaseTransport | None = None,
) -> list[np.ndarray]:
    """Embed many texts, preserving order; elementwise equal to embed_text."""
    for i, text in enumerate(texts):
        if not text.strip():
            raise EmbeddingError(f"cannot embed empty text at index {i}")
    if not texts:
        return []
    if cfg.backend == "offline-hash":
        return [_offline_embed(text, cfg.dims) for text in texts]

    batches = [texts[i : i + cfg.batch_size] for i in range(0, len(texts), cfg.batch_size)]
    if len(batches) == 1:
        return _remote_embed_batch(cfg, batches[0], role, transport=transport)
    workers = min(cfg.max_inflight, len(batches))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(
            pool.map(lambda b: _remote_embed_batch(cfg, b, role, transport=transport), batches)
        )
    return [vec for batch in results for vec in batch]


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of two vectors, clamped to [-1, 1] against rounding."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise EmbeddingError(f"dims mismatch: {a.shape} vs {b.shape}")
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        raise EmbeddingError("cosine undefined for zero-norm vector")
    return float(min(1.0, max(-1.0, float(np.dot(a, b)) / (na * nb))))
