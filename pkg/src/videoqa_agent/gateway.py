"""Uniform conversation interface over remote chat backends and scripted test doubles.

A Conversation is an append-only turn log confined to one session. Backends
produce an assistant reply from the turns; the gateway owns retry/backoff for
transient transport faults and appends both sides of each exchange.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

import httpx

logger = logging.getLogger(__name__)


class GatewayError(Exception):
    pass


class TransportError(GatewayError):
    """Retryable remote failure (network, HTTP 5xx, timeout)."""


class ScriptExhaustedError(GatewayError):
    """An ordered scripted backend ran out of replies; the test scenario is
    shorter than the session that consumed it."""


@dataclass(frozen=True)
class Turn:
    role: str  # system | user | assistant
    text: str


@dataclass
class Conversation:
    session_id: str
    turns: list[Turn] = field(default_factory=list)

    def append(self, role: str, text: str) -> None:
        self.turns.append(Turn(role, text))

    def user_texts(self) -> list[str]:
        return [t.text for t in self.turns if t.role == "user"]

    def assistant_texts(self) -> list[str]:
        return [t.text for t in self.turns if t.role == "assistant"]


@dataclass(frozen=True)
class GatewayConfig:
    """Backend selection and transport knobs.

    ``endpoint`` is a chat-completions URL for the remote backend or a
    fixture path for the scripted one. The API key is read from the
    environment, never stored; VIDEOQA_ENDPOINT overrides the endpoint.
    """

    backend: str = "scripted"  # scripted | remote
    endpoint: str = ""
    model: str = "gpt-4o"
    temperature: float = 0.0
    max_retries: int = 3
    timeout_s: float = 60.0
    api_key_env: str = "VIDEOQA_API_KEY"

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise GatewayError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.timeout_s <= 0:
            raise GatewayError(f"timeout_s must be > 0, got {self.timeout_s}")


class ChatBackend(Protocol):
    def reply(self, turns: Sequence[Turn]) -> str: ...


class ScriptedBackend:
    """Deterministic backend replaying ordered replies and substring rules.

    Matcher rules are checked against the latest user turn and take
    precedence over the ordered queue; ordered entries are consumed exactly
    once and exhaustion fails loudly so a test scenario can never silently
    outrun its script.
    """

    def __init__(
        self,
        replies: Sequence[str] = (),
        rules: Sequence[tuple[str, str]] = (),
    ):
        self._replies = list(replies)
        self._cursor = 0
        self._rules = list(rules)

    def reply(self, turns: Sequence[Turn]) -> str:
        last_user = ""
        for turn in reversed(turns):
            if turn.role == "user":
                last_user = turn.text
                break
        for needle, scripted in self._rules:
            if needle in last_user:
                return scripted
        if self._cursor < len(self._replies):
            text = self._replies[self._cursor]
            self._cursor += 1
            return text
        raise ScriptExhaustedError(
            f"scripted backend exhausted after {len(self._replies)} ordered replies"
        )


def script_from_fixture(path: str | Path) -> ScriptedBackend:
    """Load a scripted backend from a plain-text fixture.

    Format: blocks introduced by a header line, body runs to the next header::

        === reply
        first ordered reply, any number of lines
        === match: some substring
        reply returned whenever the latest user turn contains the substring

    '#' lines outside blocks are comments.
    """
    replies: list[str] = []
    rules: list[tuple[str, str]] = []
    current: list[str] | None = None
    sink: Callable[[str], None] | None = None

    def flush() -> None:
        nonlocal current, sink
        if current is not None and sink is not None:
            sink("\n".join(current).strip("\n"))
        current, sink = None, None

    for line in Path(path).read_text().splitlines():
        if line.startswith("=== reply"):
            flush()
            current = []
            sink = replies.append
        elif line.startswith("=== match:"):
            flush()
            needle = line[len("=== match:") :].strip()
            current = []
            sink = lambda text, n=needle: rules.append((n, text))
        elif current is not None:
            current.append(line)
        elif line.strip() and not line.lstrip().startswith("#"):
            raise GatewayError(f"{path}: text outside any block: {line!r}")
    flush()
    return ScriptedBackend(replies, rules)


class RemoteBackend:
    """Chat-completions client. The HTTP send is injectable for tests."""

    def __init__(
        self,
        cfg: GatewayConfig,
        send: Callable[[str, dict, dict, float], dict] | None = None,
    ):
        self._cfg = cfg
        self._send = send or self._http_send

    @staticmethod
    def _http_send(url: str, headers: dict, payload: dict, timeout: float) -> dict:
        try:
            response = httpx.post(url, headers=headers, json=payload, timeout=timeout)
            response.raise_for_status()
            return response.json()
        except httpx.HTTPError as e:
            raise TransportError(str(e)) from e

    def reply(self, turns: Sequence[Turn]) -> str:
        cfg = self._cfg
        endpoint = os.environ.get("VIDEOQA_ENDPOINT", cfg.endpoint)
        if not endpoint:
            raise GatewayError("remote backend needs an endpoint (config or VIDEOQA_ENDPOINT)")
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(cfg.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": cfg.model,
            "temperature": cfg.temperature,
            "messages": [{"role": t.role, "content": t.text} for t in turns],
        }
        data = self._send(endpoint, headers, payload, cfg.timeout_s)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise GatewayError(f"malformed chat response: {data!r}") from e


class LlmGateway:
    """Retry wrapper binding a backend to the conversation contract.

    Each successful complete() appends exactly two turns: the user prompt and
    the assistant reply. Transport faults are retried with exponential
    backoff up to ``max_retries`` additional attempts; script errors are
    never retried.
    """

    def __init__(
        self,
        backend: ChatBackend,
        max_retries: int = 3,
        backoff_base_s: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._backend = backend
        self._max_retries = max_retries
        self._backoff_base_s = backoff_base_s
        self._sleep = sleep

    def complete(self, conv: Conversation, new_user_turn: str) -> str:
        conv.append("user", new_user_turn)
        last_error: TransportError | None = None
        for attempt in range(self._max_retries + 1):
            try:
                text = self._backend.reply(conv.turns)
                conv.append("assistant", text)
                return text
            except TransportError as e:
                last_error = e
                if attempt < self._max_retries:
                    delay = self._backoff_base_s * (2**attempt)
                    logger.warning(
                        "transport fault (%s), retrying in %.1fs (attempt %d/%d)",
                        e,
                        delay,
                        attempt + 1,
                        self._max_retries,
                    )
                    self._sleep(delay)
        raise GatewayError(
            f"gateway gave up after {self._max_retries + 1} attempts"
        ) from last_error


def build_gateway(cfg: GatewayConfig, sleep: Callable[[float], None] = time.sleep) -> LlmGateway:
    if cfg.backend == "scripted":
        if not cfg.endpoint:
            raise GatewayError("scripted backend needs a fixture path in 'endpoint'")
        backend: ChatBackend = script_from_fixture(cfg.endpoint)
    elif cfg.backend == "remote":
        backend = RemoteBackend(cfg)
    else:
        raise GatewayError(f"unknown gateway backend {cfg.backend!r}")
    return LlmGateway(backend, max_retries=cfg.max_retries, sleep=sleep)
