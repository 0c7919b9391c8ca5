"""Capture the live /api/ontology response as a frontend test fixture."""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from ontorag.service import create_app


def main() -> None:
    client = TestClient(create_app())
    body = client.get("/api/ontology").json()
    out = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"
    out.mkdir(parents=True, exist_ok=True)
    target = out / "ontology.json"
    target.write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {target} ({body['counts']})")


if __name__ == "__main__":
    main()
