"""Knowledge-graph ontology schema, answer validation, and gating.

The bundled schema distills a cybersecurity knowledge graph to its rule
level: entity types grouped into categories plus permitted
(subject_type, relation, object_type) edges. A validator model judges each
question/answer pair against the rendered schema and answers are released
only when the mean judge score clears the threshold. The gate fails closed:
an unreachable validator blocks the answer.
"""

from __future__ import annotations

import json
import re
import statistics
from dataclasses import dataclass
from pathlib import Path

from ontorag.errors import (
    OntologySchemaError,
    UnparseableReplyError,
    ValidationUnavailableError,
)

DEFAULT_SIGMA = 0.5
DEFAULT_JUDGE_SAMPLES = 3
DEFAULT_JUDGE_TEMPERATURE = 0.7

VALIDATION_PROMPT_TEMPLATE = (
    "QUESTION:\n{question}\n\n"
    "ANSWER:\n{answer}\n\n"
    "ONTOLOGY:\n{ontology}\n\n"
    "INSTRUCTIONS:\n"
    "Please judge if the QUESTION and ANSWER align well with the ONTOLOGY. "
    "The QUESTION and ANSWER align well with the ONTOLOGY if they are in the same "
    "knowledge domain as the ONTOLOGY, and the ANSWER follows the relationships "
    "defined in the ONTOLOGY.\n"
    "Reply with a single number between 0 and 1 on the first line, then a "
    "one-sentence justification."
)


@dataclass(frozen=True)
class OntologyTriple:
    subject_type: str
    relation: str
    object_type: str


@dataclass(frozen=True)
class OntologySchema:
    categories: tuple[str, ...]
    entity_types: tuple[str, ...]
    relations: tuple[str, ...]
    hierarchy: tuple[tuple[str, str], ...]
    edges: tuple[OntologyTriple, ...]


@dataclass(frozen=True)
class ValidationResult:
    judge_score: float
    uncertainty: float
    samples: tuple[float, ...]
    threshold: float
    passed: bool
    rationale_texts: tuple[str, ...]


@dataclass(frozen=True)
class GateDecision:
    accepted: bool
    judge_score: float
    threshold: float
    reason: str | None = None


def default_ontology_path() -> Path:
    return Path(__file__).parent / "data" / "ontology.json"


def validate_schema(schema: OntologySchema) -> None:
    """Check every schema invariant; errors name the offending element."""
    type_set = set(schema.entity_types)
    relation_set = set(schema.relations)
    category_set = set(schema.categories)

    assigned: dict[str, str] = {}
    for etype, category in schema.hierarchy:
        if etype not in type_set:
            raise OntologySchemaError(f"hierarchy names unknown entity type {etype!r}")
        if category not in category_set:
            raise OntologySchemaError(f"hierarchy names unknown category {category!r}")
        if etype in assigned:
            raise OntologySchemaError(f"entity type {etype!r} mapped to more than one category")
        assigned[etype] = category
    for etype in schema.entity_types:
        if etype not in assigned:
            raise OntologySchemaError(f"entity type {etype!r} has no category")

    seen: set[OntologyTriple] = set()
    for edge in schema.edges:
        if not (edge.subject_type and edge.relation and edge.object_type):
            raise OntologySchemaError(f"edge with empty field: {edge}")
        for endpoint in (edge.subject_type, edge.object_type):
            if endpoint not in type_set:
                raise OntologySchemaError(
                    f"unknown entity type {endpoint!r} in edge "
                    f"({edge.subject_type}, {edge.relation}, {edge.object_type})"
                )
        if edge.relation not in relation_set:
            raise OntologySchemaError(
                f"unknown relation {edge.relation!r} in edge "
                f"({edge.subject_type}, {edge.relation}, {edge.object_type})"
            )
        if edge in seen:
            raise OntologySchemaError(
                f"duplicate edge ({edge.subject_type}, {edge.relation}, {edge.object_type})"
            )
        seen.add(edge)


def load_ontology(path: str | Path | None = None) -> OntologySchema:
    """Load and validate an ontology JSON file (bundled schema by default)."""
    p = Path(path) if path is not None else default_ontology_path()
    if not p.exists():
        raise OntologySchemaError(f"no such ontology file: {p}")
    with open(p, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        schema = OntologySchema(
            categories=tuple(raw["categories"]),
            entity_types=tuple(raw["entity_types"]),
            relations=tuple(raw["relations"]),
            hierarchy=tuple((e, c) for e, c in raw["hierarchy"]),
            edges=tuple(OntologyTriple(s, r, o) for s, r, o in raw["edges"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise OntologySchemaError(f"{p}: malformed ontology file: {exc}") from exc
    validate_schema(schema)
    return schema


def schema_to_dict(schema: OntologySchema) -> dict:
    """Inverse of load_ontology's parse; loading the dump is lossless."""
    return {
        "categories": list(schema.categories),
        "entity_types": list(schema.entity_types),
        "relations": list(schema.relations),
        "hierarchy": [list(pair) for pair in schema.hierarchy],
        "edges": [[e.subject_type, e.relation, e.object_type] for e in schema.edges],
    }


def render_ontology(schema: OntologySchema) -> str:
    """Deterministic text rendering: categories, grouped types, one line per edge."""
    by_category: dict[str, list[str]] = {c: [] for c in schema.categories}
    category_of = dict(schema.hierarchy)
    for etype in schema.entity_types:
        by_category[category_of[etype]].append(etype)

    lines = ["CATEGORIES: " + ", ".join(schema.categories), "", "ENTITY TYPES:"]
    for category in schema.categories:
        lines.append(f"{category}: " + ", ".join(by_category[category]))
    lines.append("")
    lines.append("RULES:")
    for edge in schema.edges:
        lines.append(f"{edge.subject_type} --{edge.relation}--> {edge.object_type}")
    return "\n".join(lines)


def build_validation_prompt(question: str, answer: str, ontology_text: str) -> str:
    for name, value in (("question", question), ("answer", answer), ("ontology", ontology_text)):
        if not value.strip():
            raise ValueError(f"validation prompt requires a non-empty {name}")
    return VALIDATION_PROMPT_TEMPLATE.format(
        question=question, answer=answer, ontology=ontology_text
    )


# lookbehind keeps fragments of negative numbers ("-0.5") and mid-number
# digits ("v1.2.3" -> ".3") from being read as scores
_NUMBER_RE = re.compile(r"(?<![\d.\-])(\d+(?:\.\d+)?|\.\d+)(%?)")


def parse_judge_score(reply: str) -> float:
    """First decimal number in [0, 1] scanning left to right; "90%" -> 0.90."""
    for match in _NUMBER_RE.finditer(reply):
        value = float(match.group(1))
        if match.group(2):
            value /= 100.0
        if 0.0 <= value <= 1.0:
            return value
    raise UnparseableReplyError(f"no score in [0, 1] found in reply: {reply[:120]!r}")


def judge_alignment(
    client,
    question: str,
    answer: str,
    schema: OntologySchema,
    m: int = DEFAULT_JUDGE_SAMPLES,
    sigma: float = DEFAULT_SIGMA,
    ontology_text: str | None = None,
) -> ValidationResult:
    """Sample the validator m times and aggregate into a ValidationResult.

    judge_score is the arithmetic mean of samples; uncertainty is twice the
    population stddev, clamped to [0, 1] (maximum dispersion, half 0s and
    half 1s, yields 1.0). A sample whose reply cannot be parsed is retried
    once, then scored 0.0 with a warning in the rationale. Client failures
    raise ValidationUnavailableError so callers fail closed.
    """
    if m < 1:
        raise ValueError("judge sample count m must be >= 1")
    if not 0.0 <= sigma <= 1.0:
        raise ValueError("sigma must be in [0, 1]")
    prompt = build_validation_prompt(
        question, answer, ontology_text if ontology_text is not None else render_ontology(schema)
    )
    messages = [{"role": "user", "content": prompt}]

    samples: list[float] = []
    rationales: list[str] = []
    for _ in range(m):
        try:
            reply = client.complete(messages, temperature=DEFAULT_JUDGE_TEMPERATURE)
        except Exception as exc:
            raise ValidationUnavailableError(f"validator call failed: {exc}") from exc
        try:
            score = parse_judge_score(reply)
        except UnparseableReplyError:
            try:
                reply = client.complete(messages, temperature=DEFAULT_JUDGE_TEMPERATURE)
            except Exception as exc:
                raise ValidationUnavailableError(f"validator call failed: {exc}") from exc
            try:
                score = parse_judge_score(reply)
            except UnparseableReplyError:
                score = 0.0
                reply = f"(unparseable validator reply scored 0.0) {reply}"
        samples.append(score)
        rationales.append(reply.strip()[:200])

    judge_score = statistics.fmean(samples)
    uncertainty = min(1.0, 2.0 * statistics.pstdev(samples)) if len(samples) > 1 else 0.0
    return ValidationResult(
        judge_score=judge_score,
        uncertainty=uncertainty,
        samples=tuple(samples),
        threshold=sigma,
        passed=judge_score >= sigma,
        rationale_texts=tuple(rationales),
    )


def gate(result: ValidationResult) -> GateDecision:
    """Accept iff judge_score >= threshold; Block carries scores and rationale."""
    if result.judge_score >= result.threshold:
        return GateDecision(
            accepted=True, judge_score=result.judge_score, threshold=result.threshold
        )
    excerpt = result.rationale_texts[0] if result.rationale_texts else ""
    return GateDecision(
        accepted=False,
        judge_score=result.judge_score,
        threshold=result.threshold,
        reason=(
            f"judge score {result.judge_score:.2f} below threshold "
            f"{result.threshold:.2f}: {excerpt}"
        ),
    )
