"""HTTP service exposing the gated QA pipeline.

Fail-closed is a structural property here: the only code path that puts
answer_text into a response body is the accepted branch of the gate, and
validator failures map to a blocked 503 response. Responses are
deterministic for fixed config/corpus/mock clients except for the latency
field, which callers must exclude when comparing.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeoutError
from dataclasses import dataclass

import httpx
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ontorag.clients import make_chat_client
from ontorag.config import AppConfig
from ontorag.corpus import Chunk, Document, chunk_document, load_documents
from ontorag.errors import OntoRagError, StageError, ValidationUnavailableError
from ontorag.generate import PromptStrategy, answer_question
from ontorag.ontology import (
    gate,
    judge_alignment,
    load_ontology,
    render_ontology,
    schema_to_dict,
)
from ontorag.retrieve import VectorIndex, build_index

logger = logging.getLogger("ontorag.service")

REFUSAL_MESSAGE = (
    "This answer was withheld: it did not pass validation against the course ontology."
)
VALIDATOR_DOWN_MESSAGE = "Validator unavailable; the answer was withheld (fail closed)."
NO_INDEX_MESSAGE = "No knowledge base has been ingested yet; ask is unavailable."

_HEALTH_PROBE_TIMEOUT_S = 1.0
_HEALTH_CACHE_S = 30.0


@dataclass
class KnowledgeBase:
    index: VectorIndex
    chunks: dict[str, Chunk]
    documents: dict[str, Document]


class AskRequest(BaseModel):
    question: str
    k: int | None = None
    sigma: float | None = None
    strategy: str | None = None


class IngestRequest(BaseModel):
    paths: list[str]


class ServiceState:
    def __init__(self, config: AppConfig):
        self.config = config
        self.schema = load_ontology(config.ontology_path)
        self.ontology_text = render_ontology(self.schema)
        self.answer_client = make_chat_client(config.answer_client)
        self.validator_client = make_chat_client(config.validator_client)
        self.kb: KnowledgeBase | None = None
        self.fingerprint = config.fingerprint()
        self.ingest_lock = threading.Lock()
        self.executor = ThreadPoolExecutor(max_workers=max(2, config.max_concurrent_requests))
        self.request_slots = threading.BoundedSemaphore(config.max_concurrent_requests)
        self._health_cache: tuple[float, bool] | None = None

    def ingest(self, paths: list[str]) -> dict:
        documents: list[Document] = []
        for path in paths:
            documents.extend(load_documents(path))
        chunks: list[Chunk] = []
        for doc in documents:
            chunks.extend(chunk_document(doc))
        index = build_index(chunks, self.config.embedder)
        # atomic swap: requests see either the old snapshot or the new one
        self.kb = KnowledgeBase(
            index=index,
            chunks={chunk.id: chunk for chunk in chunks},
            documents={doc.id: doc for doc in documents},
        )
        return {
            "documents": len(documents),
            "chunks": len(chunks),
            "index_fingerprint": index.build_fingerprint,
        }

    def clients_reachable(self) -> bool:
        now = time.monotonic()
        if self._health_cache and now - self._health_cache[0] < _HEALTH_CACHE_S:
            return self._health_cache[1]
        reachable = True
        for cfg in (self.config.answer_client, self.config.validator_client):
            if cfg.backend == "http":
                try:
                    httpx.get(cfg.endpoint_url, timeout=_HEALTH_PROBE_TIMEOUT_S)
                except httpx.HTTPError:
                    reachable = False
        self._health_cache = (now, reachable)
        return reachable


def _hit_payload(state: ServiceState, hits) -> list[dict]:
    payload = []
    for hit in hits:
        chunk = state.kb.chunks[hit.chunk_id]
        payload.append(
            {
                "chunk_id": hit.chunk_id,
                "doc_id": chunk.doc_id,
                "score": hit.score,
                "excerpt": chunk.text[:200],
            }
        )
    return payload


def create_app(config: AppConfig | None = None) -> FastAPI:
    state = ServiceState(config or AppConfig())
    app = FastAPI(title="ontorag", version="0.1.0")
    app.state.service = state

    def _log_request(route: str, body: dict) -> None:
        logger.info(
            json.dumps(
                {"route": route, "config_fingerprint": state.fingerprint, **body},
                sort_keys=True,
            )
        )

    def _ask_pipeline(req: AskRequest) -> tuple[dict, int]:
        config = state.config
        k = max(1, min(req.k if req.k is not None else config.top_k, config.max_top_k))
        sigma = config.sigma if req.sigma is None else min(1.0, max(0.0, req.sigma))
        strategy = config.strategy
        if req.strategy is not None and req.strategy != strategy.kind:
            strategy = PromptStrategy(
                kind=req.strategy,
                samples=config.strategy.samples,
                branches=config.strategy.branches,
                exemplar_source=config.strategy.exemplar_source,
            )
        kb = state.kb

        timings: dict[str, float] = {}
        started = time.perf_counter()
        record = answer_question(
            req.question,
            strategy,
            state.answer_client,
            config.embedder,
            index=kb.index,
            chunk_store=kb.chunks,
            k=k,
        )
        timings["generate_s"] = time.perf_counter() - started

        base = {
            "blocked": True,
            "sigma": sigma,
            "hits": [],  # evidence excerpts are attached only when the gate accepts
            "strategy": strategy.kind,
            "model_ids": {
                "answer": state.answer_client.model_id,
                "validator": state.validator_client.model_id,
            },
            "config_fingerprint": state.fingerprint,
        }

        validate_start = time.perf_counter()
        try:
            result = judge_alignment(
                state.validator_client,
                req.question,
                record.answer_text,
                state.schema,
                m=config.judge_samples,
                sigma=sigma,
                ontology_text=state.ontology_text,
            )
        except ValidationUnavailableError:
            timings["validate_s"] = time.perf_counter() - validate_start
            timings["total_s"] = time.perf_counter() - started
            base.update(
                {
                    "judge_score": None,
                    "uncertainty": None,
                    "refusal_message": VALIDATOR_DOWN_MESSAGE,
                    "latency": timings,
                }
            )
            return base, 503
        timings["validate_s"] = time.perf_counter() - validate_start
        timings["total_s"] = time.perf_counter() - started

        decision = gate(result)
        base.update(
            {
                "judge_score": result.judge_score,
                "uncertainty": result.uncertainty,
                "latency": timings,
            }
        )
        if decision.accepted:
            base["blocked"] = False
            base["answer_text"] = record.answer_text
            base["hits"] = _hit_payload(state, record.hits)
        else:
            base["refusal_message"] = REFUSAL_MESSAGE
            base["block_reason"] = decision.reason
        return base, 200

    @app.post("/api/ask")
    def ask(req: AskRequest):
        if not req.question.strip():
            return JSONResponse({"error": "question must be non-empty"}, status_code=400)
        if req.strategy is not None and req.strategy not in (
            "vanilla",
            "in_context_1",
            "in_context_3",
            "chain_of_thought",
            "tree_of_thought",
            "self_consistency",
        ):
            return JSONResponse(
                {"error": f"unknown strategy: {req.strategy!r}"}, status_code=400
            )
        if state.kb is None:
            body = {
                "blocked": True,
                "refusal_message": NO_INDEX_MESSAGE,
                "config_fingerprint": state.fingerprint,
            }
            _log_request("/api/ask", {"status": 503, "blocked": True})
            return JSONResponse(body, status_code=503)

        with state.request_slots:
            future = state.executor.submit(_ask_pipeline, req)
            try:
                body, status = future.result(timeout=state.config.request_timeout_s)
            except FutureTimeoutError:
                _log_request("/api/ask", {"status": 504, "blocked": True})
                return JSONResponse(
                    {
                        "blocked": True,
                        "refusal_message": "Request timed out before validation completed.",
                        "config_fingerprint": state.fingerprint,
                    },
                    status_code=504,
                )
            except StageError as exc:
                _log_request("/api/ask", {"status": 500, "stage": exc.stage})
                return JSONResponse(
                    {"error": str(exc), "stage": exc.stage, "blocked": True},
                    status_code=500,
                )
        _log_request(
            "/api/ask",
            {
                "status": status,
                "blocked": body.get("blocked"),
                "judge_score": body.get("judge_score"),
            },
        )
        return JSONResponse(body, status_code=status)

    @app.post("/api/ingest")
    def ingest(req: IngestRequest):
        if not state.ingest_lock.acquire(blocking=False):
            return JSONResponse({"error": "ingest already in progress"}, status_code=409)
        try:
            counts = state.ingest(req.paths)
        except OntoRagError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        finally:
            state.ingest_lock.release()
        _log_request("/api/ingest", {"status": 200, **counts})
        return {**counts, "config_fingerprint": state.fingerprint}

    @app.get("/api/ontology")
    def ontology():
        schema = state.schema
        return {
            **schema_to_dict(schema),
            "edges_detail": [
                {"subject": e.subject_type, "relation": e.relation, "object": e.object_type}
                for e in schema.edges
            ],
            "counts": {
                "categories": len(schema.categories),
                "entity_types": len(schema.entity_types),
                "relations": len(schema.relations),
                "edges": len(schema.edges),
            },
            "rendered": state.ontology_text,
        }

    @app.get("/api/health")
    def health():
        reachable = state.clients_reachable()
        return {
            "status": "ok" if reachable else "degraded",
            "index_ready": state.kb is not None,
            "clients_reachable": reachable,
        }

    ui_dir = state.config.ui_dir
    if ui_dir:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
