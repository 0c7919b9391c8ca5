"""Application configuration: a YAML key/value tree with dataclass defaults.

Secrets never live in the file; client sections name the environment
variable that holds their API key (api_key_env).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from ontorag.clients import ChatClientConfig
from ontorag.embed import EmbedderConfig
from ontorag.errors import OntoRagError
from ontorag.generate import PromptStrategy
from ontorag.ontology import DEFAULT_JUDGE_SAMPLES, DEFAULT_SIGMA


class ConfigError(OntoRagError):
    pass


@dataclass(frozen=True)
class AppConfig:
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    answer_client: ChatClientConfig = field(default_factory=lambda: ChatClientConfig(backend="echo"))
    validator_client: ChatClientConfig = field(
        default_factory=lambda: ChatClientConfig(backend="keyword-judge")
    )
    sigma: float = DEFAULT_SIGMA
    top_k: int = 4
    max_top_k: int = 10
    judge_samples: int = DEFAULT_JUDGE_SAMPLES
    strategy: PromptStrategy = field(default_factory=PromptStrategy)
    ontology_path: str | None = None
    kb_paths: tuple[str, ...] = ()
    index_cache_path: str | None = None
    listen_address: str = "127.0.0.1:8080"
    request_timeout_s: float = 60.0
    max_concurrent_requests: int = 16
    ui_dir: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.sigma <= 1.0:
            raise ConfigError("sigma must be in [0, 1]")
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")

    def fingerprint(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def _build(section: dict | None, cls, label: str):
    section = section or {}
    if not isinstance(section, dict):
        raise ConfigError(f"config section {label!r} must be a mapping")
    try:
        return cls(**section)
    except TypeError as exc:
        raise ConfigError(f"bad config section {label!r}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad config section {label!r}: {exc}") from exc


def config_from_dict(raw: dict) -> AppConfig:
    raw = dict(raw or {})
    kwargs = {}
    kwargs["embedder"] = _build(raw.pop("embedder", None), EmbedderConfig, "embedder")
    answer = raw.pop("answer_client", None) or {"backend": "echo"}
    kwargs["answer_client"] = _build(answer, ChatClientConfig, "answer_client")
    validator = raw.pop("validator_client", None) or {"backend": "keyword-judge"}
    kwargs["validator_client"] = _build(validator, ChatClientConfig, "validator_client")
    kwargs["strategy"] = _build(raw.pop("strategy", None), PromptStrategy, "strategy")
    if "kb_paths" in raw:
        kwargs["kb_paths"] = tuple(raw.pop("kb_paths") or ())
    known = {
        "sigma",
        "top_k",
        "max_top_k",
        "judge_samples",
        "ontology_path",
        "index_cache_path",
        "listen_address",
        "request_timeout_s",
        "max_concurrent_requests",
        "ui_dir",
    }
    for key in list(raw):
        if key in known:
            kwargs[key] = raw.pop(key)
        else:
            raise ConfigError(f"unknown config key: {key!r}")
    return AppConfig(**kwargs)


def load_config(path: str | Path | None = None) -> AppConfig:
    """Load AppConfig from a YAML file; None means all defaults."""
    if path is None:
        return AppConfig()
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"no such config file: {p}")
    with open(p, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{p}: config root must be a mapping")
    return config_from_dict(raw)
