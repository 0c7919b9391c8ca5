"""Reference-based answer metrics: ROUGE-n, METEOR-lite, semantic score.

Tokenization for the lexical metrics is fixed: lowercase, strip ASCII
punctuation, split on whitespace. METEOR-lite is the exact-match-only
variant (no stemming or synonymy): harmonic mean F = 10PR/(R+9P) with a
fragmentation penalty 0.5*(chunks/m)^3, where a chunk is a maximal run of
matched candidate tokens whose aligned reference positions are consecutive
and increasing; candidate tokens bind to the smallest unused reference
position holding the same token, scanning left to right.
"""

from __future__ import annotations

import string
from collections import deque
from typing import NamedTuple

from ontorag.embed import EmbedderConfig, cosine_similarity, embed_text

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


class RougeScore(NamedTuple):
    precision: float
    recall: float
    f1: float


def tokenize(text: str) -> list[str]:
    """Lowercased whitespace tokens with ASCII punctuation characters removed."""
    return text.lower().translate(_PUNCT_TABLE).split()


def _ngrams(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def _require_reference(reference: str) -> list[str]:
    if not reference.strip():
        raise ValueError("reference must be non-empty")
    tokens = tokenize(reference)
    if not tokens:
        raise ValueError("reference has no tokens after normalization")
    return tokens


def rouge_n(candidate: str, reference: str, n: int) -> RougeScore:
    """Clipped n-gram multiset overlap (n in {1, 2})."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    ref_tokens = _require_reference(reference)
    cand_tokens = tokenize(candidate)
    cand_grams = _ngrams(cand_tokens, n)
    ref_grams = _ngrams(ref_tokens, n)
    if not cand_grams or not ref_grams:
        return RougeScore(0.0, 0.0, 0.0)

    ref_counts: dict[tuple[str, ...], int] = {}
    for gram in ref_grams:
        ref_counts[gram] = ref_counts.get(gram, 0) + 1
    matched = 0
    for gram in cand_grams:
        remaining = ref_counts.get(gram, 0)
        if remaining > 0:
            matched += 1
            ref_counts[gram] = remaining - 1

    precision = matched / len(cand_grams)
    recall = matched / len(ref_grams)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return RougeScore(precision, recall, f1)


def _align_exact(cand_tokens: list[str], ref_tokens: list[str]) -> list[tuple[int, int]]:
    """(candidate_pos, reference_pos) pairs; each candidate token takes the
    smallest unused reference position with the same token."""
    positions: dict[str, deque[int]] = {}
    for j, token in enumerate(ref_tokens):
        positions.setdefault(token, deque()).append(j)
    pairs = []
    for i, token in enumerate(cand_tokens):
        queue = positions.get(token)
        if queue:
            pairs.append((i, queue.popleft()))
    return pairs


def _count_chunks(pairs: list[tuple[int, int]]) -> int:
    chunks = 0
    prev_i = prev_j = None
    for i, j in pairs:
        if prev_i is None or i != prev_i + 1 or j != prev_j + 1:
            chunks += 1
        prev_i, prev_j = i, j
    return chunks


def meteor_lite(candidate: str, reference: str) -> float:
    """Exact-match METEOR: F = 10PR/(R+9P), penalty 0.5*(chunks/m)^3."""
    ref_tokens = _require_reference(reference)
    cand_tokens = tokenize(candidate)
    if not cand_tokens:
        return 0.0
    pairs = _align_exact(cand_tokens, ref_tokens)
    m = len(pairs)
    if m == 0:
        return 0.0
    precision = m / len(cand_tokens)
    recall = m / len(ref_tokens)
    f_mean = 10 * precision * recall / (recall + 9 * precision)
    penalty = 0.5 * (_count_chunks(pairs) / m) ** 3
    return f_mean * (1.0 - penalty)


def semantic_score(candidate: str, reference: str, embedder: EmbedderConfig) -> float:
    """Cosine similarity of whole-text embeddings, reported raw in [-1, 1]."""
    if not candidate.strip() or not reference.strip():
        raise ValueError("candidate and reference must be non-empty")
    return cosine_similarity(
        embed_text(embedder, candidate, role="document"),
        embed_text(embedder, reference, role="document"),
    )
