"""Exact top-k retrieval over chunk embeddings.

The index is an exhaustive-scan structure (no approximation): entries are
stored sorted by chunk id so that a stable sort on descending score yields
the documented tie rule (ascending chunk id) for free. Indexes are immutable
after construction; rebuilds produce a new value.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from ontorag.corpus import Chunk
from ontorag.embed import EmbedderConfig, batch_embed, embed_text
from ontorag.errors import RetrievalError

DEFAULT_TOP_K = 4
_INDEX_MAGIC = b"ORIX"
_INDEX_VERSION = 1


@dataclass(frozen=True)
class RetrievalHit:
    chunk_id: str
    score: float
    rank: int


class VectorIndex:
    """Immutable collection of (chunk_id, embedding) rows sharing one dimension."""

    def __init__(self, chunk_ids: list[str], matrix: np.ndarray):
        if len(chunk_ids) != matrix.shape[0]:
            raise RetrievalError("id table and matrix row count differ")
        order = sorted(range(len(chunk_ids)), key=lambda i: chunk_ids[i])
        self.chunk_ids: tuple[str, ...] = tuple(chunk_ids[i] for i in order)
        self.matrix = np.ascontiguousarray(matrix[order], dtype=np.float64)
        self.matrix.setflags(write=False)
        self.dims = int(self.matrix.shape[1])
        self.norms = np.sqrt(np.einsum("ij,ij->i", self.matrix, self.matrix))
        if np.any(self.norms == 0.0):
            raise RetrievalError("index contains a zero-norm embedding")
        self.build_fingerprint = self._fingerprint(self.chunk_ids, self.dims)

    def __len__(self) -> int:
        return len(self.chunk_ids)

    @staticmethod
    def _fingerprint(chunk_ids: tuple[str, ...], dims: int) -> str:
        h = hashlib.sha256()
        h.update(str(dims).encode())
        for cid in chunk_ids:
            h.update(b"\x00" + cid.encode("utf-8"))
        return h.hexdigest()


def build_index(chunks: list[Chunk], embedder: EmbedderConfig) -> VectorIndex:
    """Embed every chunk (role=document) into a fresh index.

    Any embedding failure aborts the build; no partial index is returned.
    """
    if not chunks:
        raise RetrievalError("empty knowledge base: no chunks to index")
    ids = [chunk.id for chunk in chunks]
    if len(set(ids)) != len(ids):
        raise RetrievalError("duplicate chunk ids in knowledge base")
    vectors = batch_embed(embedder, [chunk.text for chunk in chunks], role="document")
    return VectorIndex(ids, np.stack(vectors))


def retrieve(
    index: VectorIndex,
    query: str,
    k: int = DEFAULT_TOP_K,
    embedder: EmbedderConfig | None = None,
    query_vector: np.ndarray | None = None,
) -> list[RetrievalHit]:
    """Return the min(k, |index|) most cosine-similar chunks for the query.

    Scores are exact (exhaustive scan); ties break by ascending chunk id.
    ``query_vector`` bypasses the embedder for callers that already hold one.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(index) == 0:
        raise RetrievalError("empty index")
    if query_vector is None:
        if embedder is None:
            raise ValueError("either embedder or query_vector is required")
        query_vector = embed_text(embedder, query, role="query")
    q = np.asarray(query_vector, dtype=np.float64)
    if q.shape != (index.dims,):
        raise RetrievalError(f"query dims {q.shape[0]} do not match index dims {index.dims}")
    qnorm = float(np.sqrt(np.dot(q, q)))
    if qnorm == 0.0:
        raise RetrievalError("query embedding has zero norm")

    # numpy matmul beats a scalar compiled loop here (see benchmarks/bench_kernels.py)
    scores = (index.matrix @ q) / (index.norms * qnorm)
    np.clip(scores, -1.0, 1.0, out=scores)
    order = np.argsort(-scores, kind="stable")[: min(k, len(index))]
    return [
        RetrievalHit(chunk_id=index.chunk_ids[i], score=float(scores[i]), rank=rank)
        for rank, i in enumerate(order, start=1)
    ]


def format_context(hits: list[RetrievalHit], chunks: Mapping[str, Chunk]) -> str:
    """Concatenate hit chunk texts in rank order with "[source: doc#pos]" headers."""
    blocks = []
    for hit in hits:
        chunk = chunks.get(hit.chunk_id)
        if chunk is None:
            raise RetrievalError(f"hit references unknown chunk id {hit.chunk_id!r}")
        blocks.append(f"[source: {chunk.doc_id}#{chunk.position}]\n{chunk.text}")
    return "\n\n".join(blocks)


def save_index(index: VectorIndex, path: str | Path) -> None:
    """Persist the index: header (dims, count), id table, float32 rows, fingerprint."""
    with open(path, "wb") as fh:
        fh.write(_INDEX_MAGIC)
        fh.write(struct.pack("<HII", _INDEX_VERSION, index.dims, len(index)))
        fp = index.build_fingerprint.encode("ascii")
        fh.write(struct.pack("<H", len(fp)) + fp)
        for cid in index.chunk_ids:
            raw = cid.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)) + raw)
        fh.write(index.matrix.astype(np.float32).tobytes(order="C"))


def load_index(path: str | Path) -> VectorIndex:
    """Load a persisted index, verifying magic, shape, and fingerprint."""
    data = Path(path).read_bytes()
    if data[:4] != _INDEX_MAGIC:
        raise RetrievalError(f"{path}: not an index file")
    version, dims, count = struct.unpack_from("<HII", data, 4)
    if version != _INDEX_VERSION:
        raise RetrievalError(f"{path}: unsupported index version {version}")
    offset = 4 + struct.calcsize("<HII")
    (fp_len,) = struct.unpack_from("<H", data, offset)
    offset += 2
    stored_fp = data[offset : offset + fp_len].decode("ascii")
    offset += fp_len
    ids = []
    for _ in range(count):
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        ids.append(data[offset : offset + id_len].decode("utf-8"))
        offset += id_len
    expected = count * dims * 4
    raw = data[offset : offset + expected]
    if len(raw) != expected:
        raise RetrievalError(f"{path}: truncated vector payload")
    matrix = np.frombuffer(raw, dtype=np.float32).reshape(count, dims).astype(np.float64)
    index = VectorIndex(ids, matrix)
    if index.build_fingerprint != stored_fp:
        raise RetrievalError(f"{path}: fingerprint mismatch; cache is stale or corrupt")
    return index
