"""Answer generation: prompt assembly, prompting strategies, pipeline glue.

The base prompt template is fixed verbatim (golden-file tested); strategies
decorate it. Strategy selection rules are deterministic: nearest-neighbor
exemplars for in-context prompting, embedding medoid for self-consistency,
index-parse with candidate-1 fallback for tree-of-thought.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ontorag.clients import ChatClient
from ontorag.corpus import QAPair, load_qa_dataset
from ontorag.embed import EmbedderConfig, batch_embed, cosine_similarity, embed_text
from ontorag.errors import GenerationError, StageError
from ontorag.retrieve import RetrievalHit, VectorIndex, format_context, retrieve

ANSWER_PROMPT_TEMPLATE = (
    "DOCUMENT:\n{document}\n\n"
    "QUESTION:\n{question}\n\n"
    "INSTRUCTIONS:\n"
    "Answer the user's QUESTION using the DOCUMENT text above. "
    "Keep your answer grounded in the facts of the DOCUMENT. "
    "If the DOCUMENT doesn’t contain the facts to answer the QUESTION, "
    "give a response based on your knowledge."
)

EMPTY_DOCUMENT_PLACEHOLDER = "(no documents retrieved)"

COT_SUFFIX = "Think step by step, then state the final answer after 'ANSWER:'."

STRATEGY_KINDS = (
    "vanilla",
    "in_context_1",
    "in_context_3",
    "chain_of_thought",
    "tree_of_thought",
    "self_consistency",
)

SAMPLING_TEMPERATURE = 0.7


@dataclass(frozen=True)
class PromptStrategy:
    kind: str = "vanilla"
    samples: int = 5
    branches: int = 3
    exemplar_source: str | None = None

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind: {self.kind!r}")
        if self.samples < 1 or self.branches < 1:
            raise ValueError("samples and branches must be positive")


@dataclass(frozen=True)
class AnswerRecord:
    question: str
    context_text: str
    answer_text: str
    strategy: str
    model_id: str
    hits: tuple[RetrievalHit, ...]
    latency_s: float
    raw_samples: tuple[str, ...]
    warnings: tuple[str, ...] = ()


def build_answer_prompt(context_text: str, question: str) -> str:
    """Render the answer prompt; empty context gets the literal placeholder line."""
    if not question.strip():
        raise ValueError("question must be non-empty")
    document = context_text if context_text.strip() else EMPTY_DOCUMENT_PLACEHOLDER
    return ANSWER_PROMPT_TEMPLATE.format(document=document, question=question)


def _user_message(prompt: str) -> list[dict]:
    return [{"role": "user", "content": prompt}]


def _extract_after_answer_marker(completion: str) -> str:
    tail = completion.rpartition("ANSWER:")[2].strip()
    return tail if tail else completion.strip()


def _select_exemplars(
    exemplars: Sequence[QAPair], question: str, k: int, embedder: EmbedderConfig
) -> list[QAPair]:
    if len(exemplars) < k:
        raise GenerationError(
            f"strategy needs {k} exemplars but the store holds {len(exemplars)}"
        )
    query_vec = embed_text(embedder, question, role="query")
    scored = [
        (cosine_similarity(embed_text(embedder, ex.question, role="query"), query_vec), ex)
        for ex in exemplars
    ]
    scored.sort(key=lambda pair: (-pair[0], pair[1].id))
    return [ex for _, ex in scored[:k]]


def _format_exemplar_blocks(selected: Sequence[QAPair]) -> str:
    blocks = [
        f"EXAMPLE QUESTION:\n{ex.question}\nEXAMPLE ANSWER:\n{ex.reference_answer}"
        for ex in selected
    ]
    return "\n\n".join(blocks)


def _medoid_index(vectors: list[np.ndarray]) -> int:
    """Index of the sample with the highest mean cosine to the others (ties: lowest)."""
    if len(vectors) == 1:
        return 0
    best_idx, best_mean = 0, -np.inf
    for i, vec in enumerate(vectors):
        sims = [cosine_similarity(vec, other) for j, other in enumerate(vectors) if j != i]
        mean = sum(sims) / len(sims)
        if mean > best_mean:
            best_idx, best_mean = i, mean
    return best_idx


def _parse_candidate_index(reply: str, n: int) -> int | None:
    for token in reply.replace(",", " ").split():
        digits = "".join(ch for ch in token if ch.isdigit())
        if digits:
            value = int(digits)
            if 1 <= value <= n:
                return value
            return None
    return None


def apply_prompt_strategy(
    strategy: PromptStrategy,
    context_text: str,
    question: str,
    client: ChatClient,
    embedder: EmbedderConfig,
    exemplars: Sequence[QAPair] | None = None,
) -> AnswerRecord:
    """Run one prompting strategy end to end and return the AnswerRecord.

    All intermediate completions are kept in raw_samples.
    """
    start = time.perf_counter()
    base_prompt = build_answer_prompt(context_text, question)
    raw_samples: list[str] = []
    warnings: list[str] = []

    if strategy.kind == "vanilla":
        answer = client.complete(_user_message(base_prompt))
        raw_samples.append(answer)

    elif strategy.kind in ("in_context_1", "in_context_3"):
        k = 1 if strategy.kind == "in_context_1" else 3
        if exemplars is None:
            if not strategy.exemplar_source:
                raise GenerationError(f"{strategy.kind} requires an exemplar_source")
            exemplars = load_qa_dataset(strategy.exemplar_source)
        selected = _select_exemplars(exemplars, question, k, embedder)
        prompt = _format_exemplar_blocks(selected) + "\n\n" + base_prompt
        answer = client.complete(_user_message(prompt))
        raw_samples.append(answer)

    elif strategy.kind == "chain_of_thought":
        completion = client.complete(_user_message(base_prompt + "\n" + COT_SUFFIX))
        raw_samples.append(completion)
        answer = _extract_after_answer_marker(completion)

    elif strategy.kind == "tree_of_thought":
        cot_prompt = base_prompt + "\n" + COT_SUFFIX
        candidates = []
        for _ in range(strategy.branches):
            completion = client.complete(
                _user_message(cot_prompt), temperature=SAMPLING_TEMPERATURE
            )
            raw_samples.append(completion)
            candidates.append(_extract_after_answer_marker(completion))
        listing = "\n\n".join(
            f"CANDIDATE {i}:\n{text}" for i, text in enumerate(candidates, start=1)
        )
        selection_prompt = (
            f"QUESTION:\n{question}\n\nCANDIDATE ANSWERS:\n{listing}\n\n"
            "INSTRUCTIONS:\nReply with the number of the single best CANDIDATE answer."
        )
        reply = client.complete(_user_message(selection_prompt))
        raw_samples.append(reply)
        choice = _parse_candidate_index(reply, len(candidates))
        if choice is None:
            warnings.append("tree-of-thought selection reply unparseable; using candidate 1")
            choice = 1
        answer = candidates[choice - 1]

    else:  # self_consistency
        completions = [
            client.complete(_user_message(base_prompt), temperature=SAMPLING_TEMPERATURE)
            for _ in range(strategy.samples)
        ]
        raw_samples.extend(completions)
        vectors = batch_embed(embedder, completions, role="document")
        answer = completions[_medoid_index(vectors)]

    if not answer.strip():
        raise GenerationError("strategy produced an empty answer")
    return AnswerRecord(
        question=question,
        context_text=context_text,
        answer_text=answer,
        strategy=strategy.kind,
        model_id=client.model_id,
        hits=(),
        latency_s=time.perf_counter() - start,
        raw_samples=tuple(raw_samples),
        warnings=tuple(warnings),
    )


def answer_question(
    question: str,
    strategy: PromptStrategy,
    client: ChatClient,
    embedder: EmbedderConfig,
    index: VectorIndex | None = None,
    chunk_store: Mapping | None = None,
    k: int = 4,
    zero_shot: bool = False,
    exemplars: Sequence[QAPair] | None = None,
) -> AnswerRecord:
    """retrieve -> format_context -> apply_prompt_strategy; stage-tagged errors.

    Zero-shot mode (or a missing index) skips retrieval and uses empty context.
    """
    start = time.perf_counter()
    hits: list[RetrievalHit] = []
    context_text = ""
    if not zero_shot and index is not None:
        try:
            hits = retrieve(index, question, k=k, embedder=embedder)
        except Exception as exc:
            raise StageError("retrieve", exc) from exc
        try:
            context_text = format_context(hits, chunk_store or {})
        except Exception as exc:
            raise StageError("format_context", exc) from exc
    try:
        record = apply_prompt_strategy(
            strategy, context_text, question, client, embedder, exemplars=exemplars
        )
    except Exception as exc:
        raise StageError("generate", exc) from exc
    return AnswerRecord(
        question=record.question,
        context_text=record.context_text,
        answer_text=record.answer_text,
        strategy=record.strategy,
        model_id=record.model_id,
        hits=tuple(hits),
        latency_s=time.perf_counter() - start,
        raw_samples=record.raw_samples,
        warnings=record.warnings,
    )
