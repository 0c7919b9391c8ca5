"""Exception types shared across the pipeline."""

from __future__ import annotations


class OntoRagError(Exception):
    """Base class for all package errors."""


class CorpusError(OntoRagError):
    """Corpus/QA file loading or validation failure."""


class EmbeddingError(OntoRagError):
    """Embedding input or backend failure."""


class TransportError(OntoRagError):
    """HTTP transport failure; carries the last status code when one was seen."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class RetrievalError(OntoRagError):
    """Index construction or lookup failure."""


class GenerationError(OntoRagError):
    """Chat client or prompt-strategy failure."""


class OntologySchemaError(OntoRagError):
    """Ontology file violates a schema invariant."""


class UnparseableReplyError(OntoRagError):
    """A model reply did not contain the expected structured content."""


class ValidationUnavailableError(OntoRagError):
    """The validator could not produce a result; the gate must fail closed."""


class EvalError(OntoRagError):
    """Evaluation harness misconfiguration or failure."""


class StageError(OntoRagError):
    """Pipeline failure tagged with the stage it occurred in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
