"""Command-line interface: ingest, ask, serve, validate, and eval subcommands."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from ontorag.clients import make_chat_client
from ontorag.config import AppConfig, load_config
from ontorag.corpus import chunk_document, load_documents, load_qa_dataset
from ontorag.errors import OntoRagError, StageError, ValidationUnavailableError
from ontorag.generate import PromptStrategy, answer_question
from ontorag.harness import (
    PipelineConfig,
    emit_report,
    run_scenario,
    sweep_domain_mix,
    sweep_kb_ratio,
)
from ontorag.ontology import gate, judge_alignment, load_ontology, render_ontology
from ontorag.retrieve import build_index, save_index


def _fail(message: str) -> None:
    raise click.ClickException(message)


def _load_kb(config: AppConfig, paths: tuple[str, ...]):
    documents = []
    for path in paths or config.kb_paths:
        documents.extend(load_documents(path))
    if not documents:
        return None, None
    chunks = []
    for doc in documents:
        chunks.extend(chunk_document(doc))
    index = build_index(chunks, config.embedder)
    return index, {chunk.id: chunk for chunk in chunks}


def _pipeline_config(config: AppConfig, runs: int | None = None) -> PipelineConfig:
    kwargs = dict(
        embedder=config.embedder,
        answer_client=config.answer_client,
        validator_client=config.validator_client,
        strategy=config.strategy,
        top_k=config.top_k,
        sigma=config.sigma,
        judge_samples=config.judge_samples,
        ontology_path=config.ontology_path,
    )
    if runs is not None:
        kwargs["runs"] = runs
    return PipelineConfig(**kwargs)


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="YAML config file.")
@click.pass_context
def main(ctx, config_path):
    """Ontology-gated retrieval-augmented QA for cybersecurity coursework."""
    try:
        ctx.obj = load_config(config_path)
    except OntoRagError as exc:
        _fail(str(exc))


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path())
@click.option("--out", "out_path", type=click.Path(), default=None, help="Index cache file.")
@click.pass_obj
def ingest(config: AppConfig, paths, out_path):
    """Load, chunk, and index one or more corpora (JSONL files or text dirs)."""
    try:
        documents = []
        for path in paths:
            documents.extend(load_documents(path))
        chunks = []
        for doc in documents:
            chunks.extend(chunk_document(doc))
        index = build_index(chunks, config.embedder)
    except OntoRagError as exc:
        _fail(f"[ingest] {exc}")
    cache = out_path or config.index_cache_path
    if cache:
        Path(cache).parent.mkdir(parents=True, exist_ok=True)
        save_index(index, cache)
        click.echo(f"index cached at {cache}")
    click.echo(
        f"documents={len(documents)} chunks={len(chunks)} "
        f"fingerprint={index.build_fingerprint[:12]}"
    )


@main.command()
@click.argument("question")
@click.option("--top-k", "top_k", type=int, default=None, help="Retrieved chunks per question.")
@click.option("--sigma", type=float, default=None, help="Gate threshold override.")
@click.option("--strategy", "strategy_kind", default=None, help="Prompting strategy kind.")
@click.option("--samples", type=int, default=None, help="Self-consistency sample count.")
@click.option("--branches", type=int, default=None, help="Tree-of-thought branch count.")
@click.option("--judge-samples", "judge_samples", type=int, default=None,
              help="Validator calls per question.")
@click.option("--zero-shot", is_flag=True, help="Skip retrieval entirely.")
@click.pass_obj
def ask(config: AppConfig, question, top_k, sigma, strategy_kind, samples, branches,
        judge_samples, zero_shot):
    """Answer one question through the gated pipeline."""
    sigma = config.sigma if sigma is None else min(1.0, max(0.0, sigma))
    try:
        strategy = PromptStrategy(
            kind=strategy_kind or config.strategy.kind,
            samples=samples or config.strategy.samples,
            branches=branches or config.strategy.branches,
            exemplar_source=config.strategy.exemplar_source,
        )
    except ValueError as exc:
        _fail(str(exc))

    index = chunk_store = None
    if not zero_shot:
        try:
            index, chunk_store = _load_kb(config, ())
        except OntoRagError as exc:
            _fail(f"[ingest] {exc}")

    try:
        schema = load_ontology(config.ontology_path)
        answer_client = make_chat_client(config.answer_client)
        validator_client = make_chat_client(config.validator_client)
        record = answer_question(
            question,
            strategy,
            answer_client,
            config.embedder,
            index=index,
            chunk_store=chunk_store,
            k=top_k or config.top_k,
            zero_shot=zero_shot,
        )
        result = judge_alignment(
            validator_client,
            question,
            record.answer_text,
            schema,
            m=judge_samples or config.judge_samples,
            sigma=sigma,
        )
    except ValidationUnavailableError as exc:
        _fail(f"[validate] answer withheld, validator unavailable: {exc}")
    except StageError as exc:
        _fail(str(exc))
    except OntoRagError as exc:
        _fail(f"[pipeline] {exc}")

    decision = gate(result)
    verdict = "pass" if decision.accepted else "block"
    if decision.accepted:
        click.echo(record.answer_text)
    else:
        click.echo(f"[answer withheld] {decision.reason}")
    click.echo(
        f"judge={result.judge_score:.2f} {verdict} "
        f"(sigma={sigma:.2f}, uncertainty={result.uncertainty:.2f})"
    )
    if not decision.accepted:
        sys.exit(0)


@main.command()
@click.option("--host", default=None, help="Bind host (overrides config).")
@click.option("--port", type=int, default=None, help="Bind port (overrides config).")
@click.pass_obj
def serve(config: AppConfig, host, port):
    """Run the HTTP service (ingests config kb_paths at startup)."""
    import uvicorn

    from ontorag.service import create_app

    app = create_app(config)
    if config.kb_paths:
        app.state.service.ingest(list(config.kb_paths))
    cfg_host, _, cfg_port = config.listen_address.partition(":")
    uvicorn.run(app, host=host or cfg_host or "127.0.0.1", port=port or int(cfg_port or 8080))


@main.command()
@click.argument("qa_path", type=click.Path(exists=True))
@click.pass_obj
def validate(config: AppConfig, qa_path):
    """Stream gate verdicts for each question/answer record in a QA JSONL file."""
    try:
        qas = load_qa_dataset(qa_path)
        schema = load_ontology(config.ontology_path)
        ontology_text = render_ontology(schema)
        validator_client = make_chat_client(config.validator_client)
    except OntoRagError as exc:
        _fail(f"[validate] {exc}")

    passed = 0
    for qa in qas:
        try:
            result = judge_alignment(
                validator_client,
                qa.question,
                qa.reference_answer,
                schema,
                m=config.judge_samples,
                sigma=config.sigma,
                ontology_text=ontology_text,
            )
        except ValidationUnavailableError:
            click.echo(json.dumps({"id": qa.id, "passed": False, "error": "validator unavailable"}))
            continue
        if result.passed:
            passed += 1
        click.echo(
            json.dumps(
                {
                    "id": qa.id,
                    "judge_score": round(result.judge_score, 6),
                    "uncertainty": round(result.uncertainty, 6),
                    "passed": result.passed,
                }
            )
        )
    click.echo(f"pass_rate={passed / len(qas):.6f}" if qas else "pass_rate=")


@main.group("eval")
def eval_group():
    """Evaluation harness subcommands."""


@eval_group.command("run")
@click.option("--qa", "qa_path", type=click.Path(exists=True), required=True)
@click.option("--scenario", type=click.Choice(["in_kb", "out_of_kb", "zero_shot"]), required=True)
@click.option("--runs", type=int, default=None)
@click.option("--decoy", "decoy_path", type=click.Path(exists=True), default=None,
              help="Corpus for the out_of_kb scenario KB.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "markdown-table"]),
              default="json")
@click.pass_obj
def eval_run(config: AppConfig, qa_path, scenario, runs, decoy_path, out_path, fmt):
    """Score a QA set under one scenario and write a metric report."""
    try:
        qas = load_qa_dataset(qa_path)
        decoys = None
        if decoy_path:
            decoys = [doc.text for doc in load_documents(decoy_path)]
        report = run_scenario(qas, scenario, _pipeline_config(config, runs), decoy_texts=decoys)
        emit_report(report, out_path, fmt)
    except OntoRagError as exc:
        _fail(f"[eval] {exc}")
    click.echo(f"wrote {out_path}")


def _parse_ratios(raw: str) -> list[float]:
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        _fail(f"bad ratio list: {raw!r}")


@eval_group.command("sweep-kb")
@click.option("--qa", "qa_path", type=click.Path(exists=True), required=True)
@click.option("--ratios", default="0,0.2,0.4,0.6,0.8,1.0", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "markdown-table"]),
              default="json")
@click.pass_obj
def eval_sweep_kb(config: AppConfig, qa_path, ratios, seed, out_path, fmt):
    """Sweep knowledge-base coverage and record the four answer metrics."""
    try:
        qas = load_qa_dataset(qa_path)
        points = sweep_kb_ratio(qas, _parse_ratios(ratios), _pipeline_config(config), seed=seed)
        emit_report(points, out_path, fmt)
    except OntoRagError as exc:
        _fail(f"[eval] {exc}")
    click.echo(f"wrote {out_path}")


@eval_group.command("sweep-mix")
@click.option("--in-qa", "in_path", type=click.Path(exists=True), required=True)
@click.option("--ood-qa", "ood_path", type=click.Path(exists=True), required=True)
@click.option("--ratios", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0", show_default=True)
@click.option("--pool", "pool_size", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "markdown-table"]),
              default="json")
@click.pass_obj
def eval_sweep_mix(config: AppConfig, in_path, ood_path, ratios, pool_size, seed, out_path, fmt):
    """Sweep in-domain/out-of-domain mixture and record gate statistics."""
    try:
        in_qas = load_qa_dataset(in_path)
        ood_qas = load_qa_dataset(ood_path)
        points = sweep_domain_mix(
            in_qas, ood_qas, _parse_ratios(ratios), _pipeline_config(config),
            pool_size=pool_size, seed=seed,
        )
        emit_report(points, out_path, fmt)
    except OntoRagError as exc:
        _fail(f"[eval] {exc}")
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
