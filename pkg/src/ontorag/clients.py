"""Chat-model clients: an OpenAI-compatible HTTP client plus deterministic
test doubles (canned map, echo, keyword judge, scripted) used everywhere the
real models' outputs are not reproducible.
"""

from __future__ import annotations

import hashlib
import os
import re
import time
from dataclasses import dataclass, field

import httpx

from ontorag.errors import GenerationError, TransportError

RETRY_ATTEMPTS = 3
RETRY_BACKOFF_S = 0.25
_RETRIABLE_STATUSES = {429, 500, 502, 503, 504}

DEFAULT_EMPTY_CONTEXT_REPLY = (
    "No supporting course material was retrieved, so a grounded reply cannot be composed."
)

DEFAULT_SECURITY_KEYWORDS = (
    "security",
    "cybersecurity",
    "vulnerability",
    "vulnerabilities",
    "attack",
    "attacker",
    "exploit",
    "exploitability",
    "malware",
    "firewall",
    "encryption",
    "phishing",
    "intrusion",
    "authentication",
    "severity",
    "threat",
    "penetration",
    "patch",
    "incident",
    "forensics",
)


@dataclass(frozen=True)
class ChatClientConfig:
    backend: str = "http"
    endpoint_url: str | None = None
    model_id: str = "unspecified"
    max_context_tokens: int = 1024
    num_beams: int = 4
    temperature: float = 0.0
    timeout_s: float = 30.0
    api_key_env: str = "ONTORAG_API_KEY"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.max_context_tokens < 1:
            raise ValueError("max_context_tokens must be >= 1")
        if self.num_beams < 1:
            raise ValueError("num_beams must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be nonnegative")
        if self.backend == "http" and not self.endpoint_url:
            raise ValueError("http chat backend requires endpoint_url")


class ChatClient:
    """Interface: complete(messages, temperature=None) -> assistant text."""

    model_id: str = "unspecified"

    def complete(self, messages: list[dict], temperature: float | None = None) -> str:
        raise NotImplementedError


def _last_user_content(messages: list[dict]) -> str:
    for message in reversed(messages):
        if message.get("role") == "user":
            return message.get("content", "")
    return ""


def _section(prompt: str, header: str) -> str | None:
    """Body of a HEADER:\\n... section, up to the next blank-line-delimited header."""
    marker = f"{header}:\n"
    start = prompt.find(marker)
    if start < 0:
        return None
    body_start = start + len(marker)
    match = re.search(r"\n\n[A-Z][A-Z ]*:\n", prompt[body_start:])
    return prompt[body_start : body_start + match.start()] if match else prompt[body_start:]


def prompt_key(prompt: str) -> str:
    """Stable key for the canned-map double: sha256 of the prompt text."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class HttpChatClient(ChatClient):
    """OpenAI-compatible chat completions client with retry and backoff."""

    def __init__(self, cfg: ChatClientConfig, transport: httpx.BaseTransport | None = None):
        self.cfg = cfg
        self.model_id = cfg.model_id
        self._transport = transport

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.cfg.api_key_env, "")
        return {"Authorization": f"Bearer {key}"} if key else {}

    def complete(self, messages: list[dict], temperature: float | None = None) -> str:
        if not messages:
            raise GenerationError("messages must be non-empty")
        payload = {
            "model": self.cfg.model_id,
            "messages": messages,
            "temperature": self.cfg.temperature if temperature is None else temperature,
            "num_beams": self.cfg.num_beams,
            "max_context_tokens": self.cfg.max_context_tokens,
        }
        last_exc: Exception | None = None
        for attempt in range(RETRY_ATTEMPTS):
            try:
                with httpx.Client(transport=self._transport, timeout=self.cfg.timeout_s) as client:
                    resp = client.post(
                        self.cfg.endpoint_url, json=payload, headers=self._headers()
                    )
            except httpx.HTTPError as exc:
                last_exc = TransportError(
                    f"transport failure calling {self.cfg.endpoint_url}: {exc}"
                )
            else:
                if resp.status_code == 200:
                    return self._extract(resp.json())
                last_exc = TransportError(
                    f"{self.cfg.endpoint_url} returned {resp.status_code}: {resp.text[:200]}",
                    status=resp.status_code,
                )
                if resp.status_code not in _RETRIABLE_STATUSES:
                    raise last_exc
            if attempt < RETRY_ATTEMPTS - 1 and RETRY_BACKOFF_S > 0:
                time.sleep(RETRY_BACKOFF_S * (2**attempt))
        raise last_exc  # type: ignore[misc]

    @staticmethod
    def _extract(body: dict) -> str:
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise GenerationError(f"malformed chat completion response: {exc}") from exc
        if not content or not content.strip():
            raise GenerationError("endpoint returned an empty completion")
        return content


class CannedMapChatClient(ChatClient):
    """Replies from a {prompt_key(prompt): reply} map; optional default reply."""

    def __init__(self, replies: dict[str, str], default: str | None = None, model_id="canned"):
        self.replies = dict(replies)
        self.default = default
        self.model_id = model_id
        self.calls: list[list[dict]] = []

    def complete(self, messages: list[dict], temperature: float | None = None) -> str:
        self.calls.append(messages)
        key = prompt_key(_last_user_content(messages))
        if key in self.replies:
            return self.replies[key]
        if self.default is not None:
            return self.default
        raise GenerationError(f"canned client has no reply for prompt key {key[:12]}...")


class EchoChatClient(ChatClient):
    """Returns the first DOCUMENT block's text (minus its source header), or a
    fixed string when no documents were retrieved."""

    def __init__(self, empty_reply: str = DEFAULT_EMPTY_CONTEXT_REPLY, model_id="echo"):
        self.empty_reply = empty_reply
        self.model_id = model_id
        self.calls: list[list[dict]] = []

    def complete(self, messages: list[dict], temperature: float | None = None) -> str:
        self.calls.append(messages)
        document = _section(_last_user_content(messages), "DOCUMENT")
        if document is None or document.strip() in ("", "(no documents retrieved)"):
            return self.empty_reply
        first_block = document.split("\n\n", 1)[0]
        lines = first_block.split("\n")
        if lines and lines[0].startswith("[source: "):
            lines = lines[1:]
        text = "\n".join(lines).strip()
        return text if text else self.empty_reply


class KeywordJudgeClient(ChatClient):
    """Deterministic validator double: scores hi when the QUESTION section
    mentions any domain keyword, lo otherwise."""

    def __init__(
        self,
        keywords: tuple[str, ...] = DEFAULT_SECURITY_KEYWORDS,
        hi: float = 0.9,
        lo: float = 0.1,
        model_id="keyword-judge",
    ):
        self.keywords = tuple(k.lower() for k in keywords)
        self.hi = hi
        self.lo = lo
        self.model_id = model_id
        self.calls: list[list[dict]] = []

    def complete(self, messages: list[dict], temperature: float | None = None) -> str:
        self.calls.append(messages)
        prompt = _last_user_content(messages)
        question = _section(prompt, "QUESTION") or prompt
        tokens = set(re.findall(r"[a-z]+", question.lower()))
        if tokens & set(self.keywords):
            return f"{self.hi}\nThe question and answer stay within the covered security domain."
        return f"{self.lo}\nThe question falls outside the covered security domain."


class ScriptedChatClient(ChatClient):
    """Returns scripted replies in order; optionally cycles when exhausted."""

    def __init__(self, replies: list[str], cycle: bool = False, model_id="scripted"):
        if not replies:
            raise ValueError("scripted client needs at least one reply")
        self.replies = list(replies)
        self.cycle = cycle
        self.model_id = model_id
        self.calls: list[list[dict]] = []

    def complete(self, messages: list[dict], temperature: float | None = None) -> str:
        self.calls.append(messages)
        i = len(self.calls) - 1
        if i >= len(self.replies):
            if not self.cycle:
                raise GenerationError("scripted client ran out of replies")
            i %= len(self.replies)
        return self.replies[i]


def chat_complete(
    cfg: ChatClientConfig,
    messages: list[dict],
    temperature: float | None = None,
    transport: httpx.BaseTransport | None = None,
) -> str:
    """One-shot completion against the client named by cfg.backend."""
    return make_chat_client(cfg, transport=transport).complete(messages, temperature=temperature)


def make_chat_client(
    cfg: ChatClientConfig, transport: httpx.BaseTransport | None = None
) -> ChatClient:
    """Construct the client named by cfg.backend; mock knobs come from cfg.options."""
    if cfg.backend == "http":
        return HttpChatClient(cfg, transport=transport)
    if cfg.backend == "echo":
        return EchoChatClient(
            empty_reply=cfg.options.get("empty_reply", DEFAULT_EMPTY_CONTEXT_REPLY),
            model_id=cfg.model_id,
        )
    if cfg.backend == "canned":
        return CannedMapChatClient(
            replies=cfg.options.get("replies", {}),
            default=cfg.options.get("default"),
            model_id=cfg.model_id,
        )
    if cfg.backend == "keyword-judge":
        return KeywordJudgeClient(
            keywords=tuple(cfg.options.get("keywords", DEFAULT_SECURITY_KEYWORDS)),
            hi=float(cfg.options.get("hi", 0.9)),
            lo=float(cfg.options.get("lo", 0.1)),
            model_id=cfg.model_id,
        )
    if cfg.backend == "scripted":
        return ScriptedChatClient(
            replies=list(cfg.options.get("replies", [])),
            cycle=bool(cfg.options.get("cycle", False)),
            model_id=cfg.model_id,
        )
    raise ValueError(f"unknown chat backend: {cfg.backend!r}")
