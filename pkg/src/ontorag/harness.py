"""Evaluation harness: scenario runs, coverage/mix sweeps, fits, reports.

Reports are deterministic: fixed 6-decimal formatting, sorted keys, no
timestamps or latency fields, and a config fingerprint in every artifact.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import random
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from ontorag.clients import ChatClientConfig, make_chat_client
from ontorag.corpus import Document, QAPair, chunk_document, partition_in_kb
from ontorag.embed import EmbedderConfig
from ontorag.errors import EvalError, ValidationUnavailableError
from ontorag.generate import PromptStrategy, answer_question
from ontorag.metrics import meteor_lite, rouge_n, semantic_score
from ontorag.ontology import gate, judge_alignment, load_ontology, render_ontology
from ontorag.retrieve import build_index

SCENARIOS = ("in_kb", "out_of_kb", "zero_shot")
SCENARIO_LABELS = {"in_kb": "In KB", "out_of_kb": "Out of KB", "zero_shot": "Zero Shot"}
ANSWER_METRICS = ("rouge_1_f1", "rouge_2_f1", "meteor_lite", "semantic_score")
DEFAULT_RUNS = 10


@dataclass(frozen=True)
class PipelineConfig:
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    answer_client: ChatClientConfig = field(default_factory=lambda: ChatClientConfig(backend="echo"))
    validator_client: ChatClientConfig | None = None
    strategy: PromptStrategy = field(default_factory=PromptStrategy)
    top_k: int = 4
    chunk_max_tokens: int = 256
    chunk_overlap: int = 32
    sigma: float = 0.5
    judge_samples: int = 3
    runs: int = DEFAULT_RUNS
    ontology_path: str | None = None


@dataclass(frozen=True)
class MetricStat:
    mean: float
    stddev: float


@dataclass(frozen=True)
class MetricReport:
    scenario: str
    dataset_tag: str
    metrics: dict[str, MetricStat]
    run_count: int
    config_fingerprint: str
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class SweepPoint:
    ratio: float
    metrics: dict[str, float | None]


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def config_fingerprint(cfg: PipelineConfig) -> str:
    payload = json.dumps(asdict(cfg), sort_keys=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def _docs_from_references(qas: Sequence[QAPair], prefix: str = "kb") -> list[Document]:
    return [
        Document(id=f"{prefix}-{qa.id}", title=qa.id, text=qa.reference_answer, source="inline")
        for qa in qas
    ]


def _build_kb(docs: Sequence[Document], cfg: PipelineConfig):
    chunks = []
    for doc in docs:
        chunks.extend(chunk_document(doc, cfg.chunk_max_tokens, cfg.chunk_overlap))
    index = build_index(chunks, cfg.embedder)
    return index, {chunk.id: chunk for chunk in chunks}


def _score_answer(answer: str, reference: str, embedder: EmbedderConfig) -> dict[str, float]:
    return {
        "rouge_1_f1": rouge_n(answer, reference, 1).f1,
        "rouge_2_f1": rouge_n(answer, reference, 2).f1,
        "meteor_lite": meteor_lite(answer, reference),
        "semantic_score": semantic_score(answer, reference, embedder),
    }


def run_scenario(
    qas: Sequence[QAPair],
    scenario: str,
    cfg: PipelineConfig,
    runs: int | None = None,
    decoy_texts: Sequence[str] | None = None,
) -> MetricReport:
    """Answer every pair under one scenario for `runs` repetitions.

    in_kb ingests the pairs' reference answers; out_of_kb ingests only the
    provided decoy texts; zero_shot skips retrieval entirely. Reported stats
    are the mean and population stddev of the per-run means.
    """
    if scenario not in SCENARIOS:
        raise EvalError(f"unknown scenario: {scenario!r}")
    if not qas:
        raise EvalError("no QA pairs to evaluate")
    runs = cfg.runs if runs is None else runs
    if runs < 1:
        raise EvalError("runs must be >= 1")

    index = chunk_store = None
    if scenario == "in_kb":
        index, chunk_store = _build_kb(_docs_from_references(qas), cfg)
    elif scenario == "out_of_kb":
        if not decoy_texts:
            raise EvalError("out_of_kb scenario requires non-empty decoy_texts")
        docs = [
            Document(id=f"decoy-{i}", title=f"decoy-{i}", text=text, source="inline")
            for i, text in enumerate(decoy_texts)
        ]
        index, chunk_store = _build_kb(docs, cfg)

    run_means: dict[str, list[float]] = {name: [] for name in ANSWER_METRICS}
    for _ in range(runs):
        client = make_chat_client(cfg.answer_client)
        totals = {name: 0.0 for name in ANSWER_METRICS}
        for qa in qas:
            record = answer_question(
                qa.question,
                cfg.strategy,
                client,
                cfg.embedder,
                index=index,
                chunk_store=chunk_store,
                k=cfg.top_k,
                zero_shot=(scenario == "zero_shot"),
            )
            for name, value in _score_answer(
                record.answer_text, qa.reference_answer, cfg.embedder
            ).items():
                totals[name] += value
        for name in ANSWER_METRICS:
            run_means[name].append(totals[name] / len(qas))

    tags = {qa.dataset_tag for qa in qas}
    return MetricReport(
        scenario=scenario,
        dataset_tag=tags.pop() if len(tags) == 1 else "mixed",
        metrics={
            name: MetricStat(
                mean=statistics.fmean(values), stddev=statistics.pstdev(values)
            )
            for name, values in run_means.items()
        },
        run_count=runs,
        config_fingerprint=config_fingerprint(cfg),
    )


def sweep_kb_ratio(
    qas: Sequence[QAPair],
    ratios: Sequence[float],
    cfg: PipelineConfig,
    seed: int = 0,
) -> list[SweepPoint]:
    """For each coverage ratio, ingest only the in-KB pairs' supporting texts
    and answer every question, recording the four answer metrics."""
    if any(not 0.0 <= r <= 1.0 for r in ratios):
        raise EvalError("ratios must lie in [0, 1]")
    if list(ratios) != sorted(ratios):
        raise EvalError("ratios must be sorted ascending")

    points = []
    for ratio in ratios:
        in_kb, _ = partition_in_kb(list(qas), ratio, seed)
        index = chunk_store = None
        if in_kb:
            index, chunk_store = _build_kb(_docs_from_references(in_kb), cfg)
        client = make_chat_client(cfg.answer_client)
        totals = {name: 0.0 for name in ANSWER_METRICS}
        for qa in qas:
            record = answer_question(
                qa.question,
                cfg.strategy,
                client,
                cfg.embedder,
                index=index,
                chunk_store=chunk_store,
                k=cfg.top_k,
            )
            for name, value in _score_answer(
                record.answer_text, qa.reference_answer, cfg.embedder
            ).items():
                totals[name] += value
        points.append(
            SweepPoint(
                ratio=float(ratio),
                metrics={name: totals[name] / len(qas) for name in ANSWER_METRICS},
            )
        )
    return points


def sweep_domain_mix(
    in_domain: Sequence[QAPair],
    out_of_domain: Sequence[QAPair],
    ratios: Sequence[float],
    cfg: PipelineConfig,
    pool_size: int = 1000,
    seed: int = 0,
) -> list[SweepPoint]:
    """Mix (1-r)*pool in-domain with r*pool out-of-domain questions per ratio
    and record pass_rate, judge_score_mean (passing answers only), and
    uncertainty_mean. Validator unavailability counts as a block."""
    if cfg.validator_client is None:
        raise EvalError("sweep_domain_mix requires a validator_client")
    if any(not 0.0 <= r <= 1.0 for r in ratios):
        raise EvalError("ratios must lie in [0, 1]")
    if list(ratios) != sorted(ratios):
        raise EvalError("ratios must be sorted ascending")
    for ratio in ratios:
        n_ood = round(ratio * pool_size)
        if n_ood > len(out_of_domain) or pool_size - n_ood > len(in_domain):
            raise EvalError(
                f"pool of {pool_size} at ratio {ratio} exceeds dataset sizes "
                f"({len(in_domain)} in-domain, {len(out_of_domain)} OOD)"
            )

    schema = load_ontology(cfg.ontology_path)
    ontology_text = render_ontology(schema)
    index, chunk_store = _build_kb(_docs_from_references(in_domain), cfg)
    rng = random.Random(seed)

    points = []
    for ratio in ratios:
        n_ood = round(ratio * pool_size)
        pool = rng.sample(list(in_domain), pool_size - n_ood) + rng.sample(
            list(out_of_domain), n_ood
        )
        answer_client = make_chat_client(cfg.answer_client)
        validator = make_chat_client(cfg.validator_client)

        passed = 0
        passing_scores: list[float] = []
        uncertainties: list[float] = []
        for qa in pool:
            record = answer_question(
                qa.question,
                cfg.strategy,
                answer_client,
                cfg.embedder,
                index=index,
                chunk_store=chunk_store,
                k=cfg.top_k,
            )
            try:
                result = judge_alignment(
                    validator,
                    qa.question,
                    record.answer_text,
                    schema,
                    m=cfg.judge_samples,
                    sigma=cfg.sigma,
                    ontology_text=ontology_text,
                )
            except ValidationUnavailableError:
                continue  # fail closed: blocked, no uncertainty sample
            uncertainties.append(result.uncertainty)
            if gate(result).accepted:
                passed += 1
                passing_scores.append(result.judge_score)

        points.append(
            SweepPoint(
                ratio=float(ratio),
                metrics={
                    "pass_rate": passed / pool_size,
                    "judge_score_mean": (
                        statistics.fmean(passing_scores) if passing_scores else None
                    ),
                    "uncertainty_mean": (
                        statistics.fmean(uncertainties) if uncertainties else 0.0
                    ),
                },
            )
        )
    return points


def linear_fit(points: Sequence[tuple[float, float]]) -> LinearFit:
    """Ordinary least squares; constant-y input fits perfectly (R^2 = 1)."""
    if len(points) < 2:
        raise EvalError("linear fit needs at least 2 points")
    xs = [float(x) for x, _ in points]
    ys = [float(y) for _, y in points]
    if len(set(xs)) == 1:
        raise EvalError("linear fit needs non-constant x values")
    if len(set(ys)) == 1:
        return LinearFit(slope=0.0, intercept=ys[0], r_squared=1.0)

    n = len(points)
    x_mean = math.fsum(xs) / n
    y_mean = math.fsum(ys) / n
    sxy = math.fsum((x - x_mean) * (y - y_mean) for x, y in zip(xs, ys))
    sxx = math.fsum((x - x_mean) ** 2 for x in xs)
    slope = sxy / sxx
    intercept = y_mean - slope * x_mean
    ss_res = math.fsum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    ss_tot = math.fsum((y - y_mean) ** 2 for y in ys)
    return LinearFit(
        slope=slope,
        intercept=intercept,
        r_squared=max(0.0, min(1.0, 1.0 - ss_res / ss_tot)),
    )


def _round6(value):
    if isinstance(value, float):
        return round(value, 6)
    if isinstance(value, dict):
        return {k: _round6(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round6(v) for v in value]
    return value


def _to_payload(report) -> dict | list:
    if isinstance(report, MetricReport):
        return {
            "scenario": report.scenario,
            "scenario_label": SCENARIO_LABELS[report.scenario],
            "dataset_tag": report.dataset_tag,
            "metrics": {
                name: {"mean": stat.mean, "stddev": stat.stddev}
                for name, stat in sorted(report.metrics.items())
            },
            "run_count": report.run_count,
            "config_fingerprint": report.config_fingerprint,
            "notes": list(report.notes),
        }
    if isinstance(report, LinearFit):
        return asdict(report)
    if isinstance(report, SweepPoint):
        return {"ratio": report.ratio, "metrics": dict(sorted(report.metrics.items()))}
    if isinstance(report, (list, tuple)):
        return [_to_payload(item) for item in report]
    if isinstance(report, dict):
        return report
    raise EvalError(f"cannot serialize report of type {type(report).__name__}")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _sweep_rows(points: list[dict]) -> tuple[list[str], list[list[str]]]:
    names = sorted({name for point in points for name in point["metrics"]})
    header = ["ratio"] + names
    rows = [
        [_fmt(point["ratio"])] + [_fmt(point["metrics"].get(name)) for name in names]
        for point in points
    ]
    return header, rows


def _report_rows(payload: dict) -> tuple[list[str], list[list[str]]]:
    header = ["metric", "mean", "stddev"]
    rows = [
        [name, _fmt(stat["mean"]), _fmt(stat["stddev"])]
        for name, stat in payload["metrics"].items()
    ]
    return header, rows


def emit_report(report, path: str | Path, format: str = "json") -> None:
    """Serialize a report deterministically; identical inputs yield identical bytes."""
    payload = _round6(_to_payload(report))
    path = Path(path)

    if format == "json":
        path.write_text(
            json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        return

    if isinstance(payload, list):
        header, rows = _sweep_rows(payload)
    elif isinstance(payload, dict) and "metrics" in payload and "scenario" in payload:
        header, rows = _report_rows(payload)
    else:
        raise EvalError(f"{format} output is only defined for reports and sweeps")

    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        path.write_text(buf.getvalue(), encoding="utf-8")
    elif format == "markdown-table":
        lines = [
            "| " + " | ".join(header) + " |",
            "| " + " | ".join("---" for _ in header) + " |",
        ]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        raise EvalError(f"unknown report format: {format!r}")
