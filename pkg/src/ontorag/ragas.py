"""Judge-based grounding diagnostics in the RAGAS style.

These are prompt reimplementations, not the upstream library: a chat client
acts as the judge (a deterministic stub in tests), and entity extraction is
a fixed lexical rule rather than an NER model. Judge failures abort the
metric run; a metric is never silently zero because the judge was down.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from typing import Sequence

from ontorag.clients import ChatClient
from ontorag.embed import EmbedderConfig, cosine_similarity, embed_text
from ontorag.errors import UnparseableReplyError

_CAP_WORD = re.compile(r"^[A-Z][a-zA-Z]*$")
_ACRONYM = re.compile(r"^[A-Z]{2,}$")
_HAS_DIGIT = re.compile(r"\d")

RELEVANCE_PROMPT = (
    "CONTEXT:\n{context}\n\n"
    "QUESTION:\n{question}\n\n"
    "REFERENCE ANSWER:\n{reference}\n\n"
    "INSTRUCTIONS:\n"
    "Does the CONTEXT help answer the QUESTION as given by the REFERENCE ANSWER? "
    "Reply YES or NO."
)

CLAIM_SPLIT_PROMPT = (
    "TEXT:\n{text}\n\n"
    "INSTRUCTIONS:\n"
    "Split the TEXT into its atomic factual claims. Reply with one claim per line."
)

CLAIM_SUPPORT_PROMPT = (
    "CONTEXTS:\n{contexts}\n\n"
    "CLAIM:\n{claim}\n\n"
    "INSTRUCTIONS:\n"
    "Is the CLAIM supported by the CONTEXTS? Reply YES or NO."
)

QUESTION_GEN_PROMPT = (
    "ANSWER:\n{answer}\n\n"
    "INSTRUCTIONS:\n"
    "Write 3 questions that this ANSWER would answer. Reply with one question per line."
)


@dataclass(frozen=True)
class ContextMetrics:
    context_precision: float
    context_recall: float
    context_entity_recall: float
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class AnswerMetrics:
    faithfulness: float
    answer_relevancy: float
    flags: tuple[str, ...] = ()


def _ask(judge: ChatClient, prompt: str) -> str:
    return judge.complete([{"role": "user", "content": prompt}])


def _parse_yes_no(reply: str) -> bool:
    match = re.search(r"[A-Za-z]+", reply)
    if match:
        word = match.group(0).lower()
        if word == "yes":
            return True
        if word == "no":
            return False
    raise UnparseableReplyError(f"expected YES or NO, got: {reply[:80]!r}")


def _parse_lines(reply: str) -> list[str]:
    lines = []
    for raw in reply.splitlines():
        line = raw.strip().lstrip("-*• ").strip()
        line = re.sub(r"^\d+[.)]\s*", "", line)
        if line:
            lines.append(line)
    return lines


def split_claims(judge: ChatClient, text: str) -> list[str]:
    return _parse_lines(_ask(judge, CLAIM_SPLIT_PROMPT.format(text=text)))


def extract_entities(text: str) -> set[str]:
    """Deterministic lexical entities: capitalized multiword spans, acronyms,
    and digit-bearing technical tokens. Lowercased for matching."""
    tokens = [tok.strip(string.punctuation) for tok in text.split()]
    tokens = [tok for tok in tokens if tok]
    entities: set[str] = set()

    run: list[str] = []
    for token in tokens + [""]:
        if _CAP_WORD.match(token):
            run.append(token)
        else:
            if len(run) >= 2:
                entities.add(" ".join(run).lower())
            run = []
    for token in tokens:
        if _HAS_DIGIT.search(token) or _ACRONYM.match(token):
            entities.add(token.lower())
    return entities


def ragas_context_metrics(
    question: str,
    reference_answer: str,
    contexts: Sequence[str],
    judge: ChatClient,
    embedder: EmbedderConfig,
) -> ContextMetrics:
    """Rank-weighted context precision, claim recall, and entity recall."""
    if not contexts:
        return ContextMetrics(0.0, 0.0, 0.0, flags=("empty_contexts",))
    flags: list[str] = []

    relevant = [
        _parse_yes_no(
            _ask(
                judge,
                RELEVANCE_PROMPT.format(
                    context=ctx, question=question, reference=reference_answer
                ),
            )
        )
        for ctx in contexts
    ]
    precision_terms = []
    seen_relevant = 0
    for rank, is_relevant in enumerate(relevant, start=1):
        if is_relevant:
            seen_relevant += 1
            precision_terms.append(seen_relevant / rank)
    context_precision = (
        sum(precision_terms) / len(precision_terms) if precision_terms else 0.0
    )

    claims = split_claims(judge, reference_answer)
    if claims:
        joined = "\n\n".join(contexts)
        supported = sum(
            _parse_yes_no(
                _ask(judge, CLAIM_SUPPORT_PROMPT.format(contexts=joined, claim=claim))
            )
            for claim in claims
        )
        context_recall = supported / len(claims)
    else:
        context_recall = 0.0
        flags.append("no_claims")

    ref_entities = extract_entities(reference_answer)
    if ref_entities:
        ctx_entities = set().union(*(extract_entities(ctx) for ctx in contexts))
        context_entity_recall = len(ref_entities & ctx_entities) / len(ref_entities)
    else:
        context_entity_recall = 0.0
        flags.append("no_entities")

    return ContextMetrics(context_precision, context_recall, context_entity_recall, tuple(flags))


def ragas_answer_metrics(
    question: str,
    answer: str,
    contexts: Sequence[str],
    judge: ChatClient,
    embedder: EmbedderConfig,
) -> AnswerMetrics:
    """Faithfulness (claims supported by contexts) and answer relevancy
    (cosine of judge-generated questions to the original)."""
    if not answer.strip():
        raise ValueError("answer must be non-empty")
    flags: list[str] = []

    claims = split_claims(judge, answer)
    if claims:
        joined = "\n\n".join(contexts) if contexts else "(no contexts)"
        supported = sum(
            _parse_yes_no(
                _ask(judge, CLAIM_SUPPORT_PROMPT.format(contexts=joined, claim=claim))
            )
            for claim in claims
        )
        faithfulness = supported / len(claims)
    else:
        faithfulness = 1.0
        flags.append("no_claims")

    generated = _parse_lines(_ask(judge, QUESTION_GEN_PROMPT.format(answer=answer)))[:3]
    if not generated:
        raise UnparseableReplyError("judge produced no generated questions")
    original_vec = embed_text(embedder, question, role="query")
    sims = [
        cosine_similarity(embed_text(embedder, gen, role="query"), original_vec)
        for gen in generated
    ]
    answer_relevancy = max(0.0, min(1.0, sum(sims) / len(sims)))

    return AnswerMetrics(faithfulness, answer_relevancy, tuple(flags))
