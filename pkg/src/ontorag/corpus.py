"""Knowledge-base corpus and QA dataset handling.

Documents and QA pairs ship as JSONL (one UTF-8 object per line); directory
ingestion accepts .txt and .md files. "Token" means a whitespace-delimited
word throughout, which keeps chunking deterministic and tokenizer-independent.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, replace
from pathlib import Path

from ontorag.errors import CorpusError

DEFAULT_CHUNK_TOKENS = 256
DEFAULT_CHUNK_OVERLAP = 32


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    text: str
    source: str = ""
    tags: tuple[str, ...] = ()


@dataclass(frozen=True)
class Chunk:
    id: str
    doc_id: str
    text: str
    position: int
    token_count: int


@dataclass(frozen=True)
class QAPair:
    id: str
    question: str
    reference_answer: str
    dataset_tag: str = ""
    in_kb: bool = False


def _read_jsonl(path: Path) -> list[dict]:
    records = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(
                        f"{path}: malformed JSONL at line {lineno}: {exc}"
                    ) from exc
                if not isinstance(rec, dict):
                    raise CorpusError(f"{path}: line {lineno} is not a JSON object")
                records.append(rec)
    except UnicodeDecodeError as exc:
        raise CorpusError(f"{path}: not valid UTF-8: {exc}") from exc
    return records


def load_documents(path: str | Path, format: str | None = None) -> list[Document]:
    """Load documents from a JSONL file or a directory of .txt/.md files.

    Order is stable: record order for JSONL, lexicographic filename order for
    directories. Missing ids are assigned "doc-<n>" (1-based record number).
    """
    p = Path(path)
    if not p.exists():
        raise CorpusError(f"no such path: {p}")
    if format is None:
        format = "plain-text-dir" if p.is_dir() else "jsonl"
    if format not in ("jsonl", "plain-text-dir"):
        raise CorpusError(f"unknown corpus format: {format!r}")

    docs: list[Document] = []
    if format == "jsonl":
        for n, rec in enumerate(_read_jsonl(p), start=1):
            text = rec.get("text", "")
            if not isinstance(text, str) or not text.strip():
                raise CorpusError(f"{p}: record {n - 1} has empty or missing 'text'")
            doc_id = str(rec.get("id") or f"doc-{n}")
            docs.append(
                Document(
                    id=doc_id,
                    title=str(rec.get("title") or doc_id),
                    text=text,
                    source=str(rec.get("source") or p),
                    tags=tuple(str(t) for t in rec.get("tags", ())),
                )
            )
    else:
        files = sorted(f for f in p.iterdir() if f.suffix in (".txt", ".md") and f.is_file())
        for f in files:
            try:
                text = f.read_text(encoding="utf-8")
            except UnicodeDecodeError as exc:
                raise CorpusError(f"{f}: not valid UTF-8: {exc}") from exc
            if not text.strip():
                raise CorpusError(f"{f}: file is empty")
            docs.append(Document(id=f.stem, title=f.stem, text=text, source=str(f)))

    seen: set[str] = set()
    for doc in docs:
        if doc.id in seen:
            raise CorpusError(f"duplicate document id {doc.id!r}")
        seen.add(doc.id)
    return docs


def chunk_document(
    doc: Document,
    max_tokens: int = DEFAULT_CHUNK_TOKENS,
    overlap: int = DEFAULT_CHUNK_OVERLAP,
) -> list[Chunk]:
    """Split a document into word-window chunks of at most ``max_tokens`` words.

    Windows start at every multiple of the stride ``max_tokens - overlap``, so
    consecutive chunks share ``overlap`` words and dropping each later chunk's
    first ``overlap`` words reconstructs the document's word sequence.
    """
    if max_tokens <= 0:
        raise ValueError("max_tokens must be positive")
    if overlap < 0 or overlap >= max_tokens:
        raise ValueError("overlap must satisfy 0 <= overlap < max_tokens")
    words = doc.text.split()
    if not words:
        raise CorpusError(f"document {doc.id!r} has no text to chunk")

    stride = max_tokens - overlap
    chunks = []
    for position, start in enumerate(range(0, len(words), stride)):
        window = words[start : start + max_tokens]
        chunks.append(
            Chunk(
                id=f"{doc.id}#{position}",
                doc_id=doc.id,
                text=" ".join(window),
                position=position,
                token_count=len(window),
            )
        )
    return chunks


def load_qa_dataset(path: str | Path, format: str = "jsonl", default_tag: str = "") -> list[QAPair]:
    """Load QA pairs from JSONL records {id?, question, answer, tag?}.

    Unknown fields are ignored. Errors name the offending 0-based record index.
    """
    p = Path(path)
    if not p.exists():
        raise CorpusError(f"no such path: {p}")
    if format != "jsonl":
        raise CorpusError(f"unknown QA format: {format!r}")

    pairs: list[QAPair] = []
    seen: set[str] = set()
    for n, rec in enumerate(_read_jsonl(p), start=1):
        idx = n - 1
        for field in ("question", "answer"):
            value = rec.get(field)
            if not isinstance(value, str) or not value.strip():
                raise CorpusError(f"{p}: record {idx} has empty or missing {field!r}")
        qa_id = str(rec.get("id") or f"qa-{n}")
        if qa_id in seen:
            raise CorpusError(f"duplicate QA id {qa_id!r}")
        seen.add(qa_id)
        pairs.append(
            QAPair(
                id=qa_id,
                question=rec["question"],
                reference_answer=rec["answer"],
                dataset_tag=str(rec.get("tag") or default_tag),
                in_kb=bool(rec.get("in_kb", False)),
            )
        )
    return pairs


def partition_in_kb(
    qas: list[QAPair], ratio: float, seed: int
) -> tuple[list[QAPair], list[QAPair]]:
    """Split QA pairs into (in-KB, out-of-KB) by a seeded uniform shuffle.

    floor(ratio * n) pairs are flagged in_kb=True (with a 1e-9 guard against
    float representation of decimal ratios); both halves keep input order.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must be in [0, 1], got {ratio}")
    n = len(qas)
    n_in = int(math.floor(ratio * n + 1e-9))
    order = list(range(n))
    random.Random(seed).shuffle(order)
    chosen = set(order[:n_in])
    in_kb = [replace(qa, in_kb=True) for i, qa in enumerate(qas) if i in chosen]
    out_kb = [replace(qa, in_kb=False) for i, qa in enumerate(qas) if i not in chosen]
    return in_kb, out_kb


def write_documents_jsonl(docs: list[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(
                json.dumps(
                    {
                        "id": doc.id,
                        "title": doc.title,
                        "text": doc.text,
                        "source": doc.source,
                        "tags": list(doc.tags),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def write_qa_jsonl(qas: list[QAPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qa in qas:
            fh.write(
                json.dumps(
                    {
                        "id": qa.id,
                        "question": qa.question,
                        "answer": qa.reference_answer,
                        "tag": qa.dataset_tag,
                        "in_kb": qa.in_kb,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
