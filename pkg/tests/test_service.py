import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from fastapi.testclient import TestClient

import ontorag.clients as clients_mod
from ontorag.clients import ChatClientConfig
from ontorag.config import AppConfig
from ontorag.corpus import write_documents_jsonl, Document
from ontorag.service import create_app

IN_DOMAIN_Q = "What criteria are used to determine the severity level of a vulnerability?"
OFF_DOMAIN_Q = "How to make money in the stock market?"

KB_DOCS = [
    Document(
        id="severity-guide",
        title="severity-guide",
        text=(
            "Severity levels weigh the potential impact of a vulnerability, its "
            "exploitability, and the scope of affected systems."
        ),
        source="inline",
    ),
    Document(
        id="stock-tips",
        title="stock-tips",
        text="Diversified index funds spread market risk across sectors.",
        source="inline",
    ),
]


@pytest.fixture
def kb_path(tmp_path):
    path = tmp_path / "kb.jsonl"
    write_documents_jsonl(KB_DOCS, path)
    return str(path)


def _app_config(**overrides) -> AppConfig:
    defaults = dict(
        answer_client=ChatClientConfig(backend="echo"),
        validator_client=ChatClientConfig(backend="keyword-judge"),
        top_k=1,
        judge_samples=3,
    )
    defaults.update(overrides)
    return AppConfig(**defaults)


@pytest.fixture
def client(kb_path):
    app = create_app(_app_config())
    with TestClient(app) as tc:
        assert tc.post("/api/ingest", json={"paths": [kb_path]}).status_code == 200
        yield tc


class TestAsk:
    def test_in_domain_passes(self, client):
        resp = client.post("/api/ask", json={"question": IN_DOMAIN_Q})
        assert resp.status_code == 200
        body = resp.json()
        assert body["blocked"] is False
        assert body["judge_score"] == pytest.approx(0.9)
        assert "Severity levels weigh" in body["answer_text"]
        assert body["hits"][0]["doc_id"] == "severity-guide"
        assert body["config_fingerprint"]

    def test_off_domain_blocked_without_answer_text(self, client):
        resp = client.post("/api/ask", json={"question": OFF_DOMAIN_Q})
        assert resp.status_code == 200
        body = resp.json()
        assert body["blocked"] is True
        assert "answer_text" not in body
        assert body["refusal_message"]
        assert body["judge_score"] == pytest.approx(0.1)
        assert body["hits"] == []
        # the generated (echoed) answer text must not appear anywhere in the body
        assert "index funds" not in resp.text

    def test_empty_question_400(self, client):
        assert client.post("/api/ask", json={"question": "  "}).status_code == 400

    def test_unknown_strategy_400(self, client):
        resp = client.post("/api/ask", json={"question": IN_DOMAIN_Q, "strategy": "wizardry"})
        assert resp.status_code == 400

    def test_ask_before_ingest_503(self):
        app = create_app(_app_config())
        with TestClient(app) as tc:
            resp = tc.post("/api/ask", json={"question": IN_DOMAIN_Q})
            assert resp.status_code == 503
            assert resp.json()["blocked"] is True

    def test_sigma_override_blocks_borderline(self, client):
        resp = client.post("/api/ask", json={"question": IN_DOMAIN_Q, "sigma": 0.95})
        body = resp.json()
        assert body["blocked"] is True
        assert "answer_text" not in body

    def test_exact_sigma_boundary_accepts(self, client):
        resp = client.post("/api/ask", json={"question": IN_DOMAIN_Q, "sigma": 0.9})
        assert resp.json()["blocked"] is False

    def test_deterministic_bodies_excluding_latency(self, kb_path):
        bodies = []
        for _ in range(2):
            app = create_app(_app_config())
            with TestClient(app) as tc:
                tc.post("/api/ingest", json={"paths": [kb_path]})
                body = tc.post("/api/ask", json={"question": IN_DOMAIN_Q}).json()
                body.pop("latency")
                bodies.append(json.dumps(body, sort_keys=True))
        assert bodies[0] == bodies[1]


class TestIngest:
    def test_counts_and_fingerprint(self, kb_path):
        app = create_app(_app_config())
        with TestClient(app) as tc:
            resp = tc.post("/api/ingest", json={"paths": [kb_path]})
            body = resp.json()
            assert body["documents"] == 2
            assert body["chunks"] >= 2
            assert body["index_fingerprint"]
            again = tc.post("/api/ingest", json={"paths": [kb_path]}).json()
            assert again["index_fingerprint"] == body["index_fingerprint"]

    def test_bad_path_400(self):
        app = create_app(_app_config())
        with TestClient(app) as tc:
            assert tc.post("/api/ingest", json={"paths": ["/nope/missing"]}).status_code == 400

    def test_concurrent_ingest_409(self, kb_path):
        app = create_app(_app_config())
        with TestClient(app) as tc:
            state = app.state.service
            assert state.ingest_lock.acquire(blocking=False)
            try:
                assert tc.post("/api/ingest", json={"paths": [kb_path]}).status_code == 409
            finally:
                state.ingest_lock.release()
            assert tc.post("/api/ingest", json={"paths": [kb_path]}).status_code == 200


class TestOntologyAndHealth:
    def test_ontology_counts(self, client):
        body = client.get("/api/ontology").json()
        assert body["counts"] == {
            "categories": 3,
            "entity_types": 12,
            "relations": 9,
            "edges": 68,
        }
        assert len(body["edges_detail"]) == 68
        assert {"subject": "attacker", "relation": "can_exploit", "object": "feature"} in body[
            "edges_detail"
        ]

    def test_health_reflects_index_state(self, kb_path):
        app = create_app(_app_config())
        with TestClient(app) as tc:
            before = tc.get("/api/health").json()
            assert before == {"status": "ok", "index_ready": False, "clients_reachable": True}
            tc.post("/api/ingest", json={"paths": [kb_path]})
            after = tc.get("/api/health").json()
            assert after["index_ready"] is True


class _ValidatorStub(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        self.rfile.read(length)
        body = json.dumps(
            {"choices": [{"message": {"content": "0.9\nwithin the security domain"}}]}
        ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


class TestFailClosed:
    def test_validator_death_blocks_every_subsequent_ask(self, kb_path, monkeypatch):
        monkeypatch.setattr(clients_mod, "RETRY_BACKOFF_S", 0.0)
        server = ThreadingHTTPServer(("127.0.0.1", 0), _ValidatorStub)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        port = server.server_address[1]

        config = _app_config(
            validator_client=ChatClientConfig(
                backend="http",
                endpoint_url=f"http://127.0.0.1:{port}/v1/chat/completions",
                model_id="validator-x",
                timeout_s=2.0,
            )
        )
        app = create_app(config)
        transcript = []
        try:
            with TestClient(app) as tc:
                tc.post("/api/ingest", json={"paths": [kb_path]})
                live = tc.post("/api/ask", json={"question": IN_DOMAIN_Q})
                assert live.status_code == 200
                assert live.json()["blocked"] is False
                answer_text = live.json()["answer_text"]

                server.shutdown()
                server.server_close()
                thread.join(timeout=5)

                for _ in range(3):
                    resp = tc.post("/api/ask", json={"question": IN_DOMAIN_Q})
                    transcript.append((resp.status_code, resp.text))
        finally:
            server.server_close()

        assert transcript, "no post-shutdown requests captured"
        for status, text in transcript:
            assert status == 503
            body = json.loads(text)
            assert body["blocked"] is True
            assert "answer_text" not in body
            assert answer_text not in text  # zero answer leakage


class TestBoundsAndTimeout:
    def test_k_and_sigma_clamped_at_api_boundary(self, client):
        resp = client.post(
            "/api/ask", json={"question": IN_DOMAIN_Q, "k": 999, "sigma": -3.0}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["sigma"] == 0.0
        assert body["blocked"] is False  # judge 0.9 >= clamped sigma 0
        assert len(body["hits"]) <= 10

    def test_stage_timeout_returns_blocked_504(self, kb_path):
        import time as _time

        class SlowValidator:
            model_id = "slow"

            def complete(self, messages, temperature=None):
                _time.sleep(0.5)
                return "0.9\nok"

        app = create_app(_app_config(request_timeout_s=0.05))
        with TestClient(app) as tc:
            tc.post("/api/ingest", json={"paths": [kb_path]})
            app.state.service.validator_client = SlowValidator()
            resp = tc.post("/api/ask", json={"question": IN_DOMAIN_Q})
            assert resp.status_code == 504
            body = resp.json()
            assert body["blocked"] is True
            assert "answer_text" not in body

    def test_concurrent_asks_complete(self, client):
        import concurrent.futures

        def one_ask(i):
            question = IN_DOMAIN_Q if i % 2 == 0 else OFF_DOMAIN_Q
            return client.post("/api/ask", json={"question": question})

        with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
            responses = list(pool.map(one_ask, range(16)))
        assert all(r.status_code == 200 for r in responses)
        passed = [r for r in responses if not r.json()["blocked"]]
        blocked = [r for r in responses if r.json()["blocked"]]
        assert len(passed) == 8 and len(blocked) == 8
        assert all("answer_text" not in r.json() for r in blocked)
