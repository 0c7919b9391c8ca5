"""Ontology-gated retrieval-augmented question answering.

Pipeline: retrieve validated knowledge-base passages, generate a grounded
answer through a pluggable chat client, then validate the answer against a
cybersecurity knowledge-graph ontology before it is released.
"""

from ontorag._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
