import json
from pathlib import Path

import pytest

from ontorag.corpus import QAPair
from ontorag.embed import EmbedderConfig
from ontorag.ontology import load_ontology

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def offline_embedder() -> EmbedderConfig:
    return EmbedderConfig(backend="offline-hash", dims=256)


@pytest.fixture(scope="session")
def bundled_schema():
    return load_ontology()


@pytest.fixture
def write_jsonl(tmp_path):
    def _write(records: list[dict], name: str = "data.jsonl") -> Path:
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec) + "\n")
        return path

    return _write


def synthetic_qa(n: int, tag: str = "synthetic") -> list[QAPair]:
    """QA pairs with pairwise-disjoint coined vocabulary: each question embeds
    its own answer's tokens, so its nearest chunk under the hash embedder is
    its own reference answer and cross-pair lexical overlap is zero."""
    pairs = []
    for i in range(n):
        answer = f"zq{i}av zq{i}bw zq{i}cx zq{i}dy zq{i}ez"
        question = f"what explains zq{i}av zq{i}bw zq{i}cx zq{i}dy zq{i}ez"
        pairs.append(
            QAPair(id=f"qa-{i:04d}", question=question, reference_answer=answer, dataset_tag=tag)
        )
    return pairs


def read_golden(name: str) -> str:
    return (GOLDEN_DIR / name).read_text(encoding="utf-8")
