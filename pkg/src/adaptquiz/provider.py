"""Chat-completion backends: a remote OpenAI-compatible endpoint and a
deterministic scripted mock, behind one ``complete(messages) -> text`` surface.

Every exchange is appended to a JSON-lines transcript before the reply is
returned, so sessions and experiments can be audited and replayed.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .errors import AuthError, ScriptExhausted, TransportError, ValidationError
from .prompting import ChatMessage

DEFAULT_API_KEY_ENV = "ADAPTQUIZ_API_KEY"


@dataclass(frozen=True)
class ProviderConfig:
    backend: str  # "remote" | "mock"
    model: str = "mock"
    endpoint: str = ""
    temperature: float = 0.0
    max_retries: int = 3
    timeout: float = 30.0
    retry_base_delay: float = 0.5
    script_path: str = ""
    transcript_path: str = ""
    api_key_env: str = DEFAULT_API_KEY_ENV
    in_flight: int = 1

    def __post_init__(self):
        if self.backend not in ("remote", "mock"):
            raise ValidationError(f"unknown backend {self.backend!r}")
        if self.backend == "remote" and (not self.endpoint or not self.model):
            raise ValidationError("remote backend requires endpoint and model")
        if self.backend == "mock" and not self.script_path:
            raise ValidationError("mock backend requires a script path")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")

    @classmethod
    def from_dict(cls, doc: dict, default_temperature: float = 0.0,
                  transcript_path: str = "") -> "ProviderConfig":
        return cls(
            backend=doc.get("backend", "mock"),
            model=doc.get("model", "mock"),
            endpoint=doc.get("endpoint", ""),
            temperature=doc.get("temperature", default_temperature),
            max_retries=doc.get("max_retries", 3),
            timeout=doc.get("timeout", 30.0),
            retry_base_delay=doc.get("retry_base_delay", 0.5),
            script_path=doc.get("script", doc.get("script_path", "")),
            transcript_path=doc.get("transcript", transcript_path),
            api_key_env=doc.get("api_key_env", DEFAULT_API_KEY_ENV),
            in_flight=doc.get("in_flight", 1),
        )


@dataclass
class ScriptEntry:
    reply: str
    match: str = "*"
    index: int | None = None
    remaining: int = 1


def load_script(path: str | Path) -> list[ScriptEntry]:
    """Load a mock script: a JSON list of {match | index, reply[, repeat]}."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"mock script {path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(doc, list):
        raise ValidationError(f"mock script {path}: expected a JSON list")
    entries = []
    for i, raw in enumerate(doc):
        if not isinstance(raw, dict) or "reply" not in raw:
            raise ValidationError(f"mock script {path}: entry {i} needs a 'reply'")
        repeat = raw.get("repeat", 1)
        if not isinstance(repeat, int) or repeat < 1:
            raise ValidationError(f"mock script {path}: entry {i} repeat must be >= 1")
        entries.append(ScriptEntry(
            reply=str(raw["reply"]),
            match=str(raw.get("match", "*")),
            index=raw.get("index"),
            remaining=repeat,
        ))
    return entries


class _Transcript:
    """Append-only JSONL log of request/reply exchanges, one lock per file."""

    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        if self.path is None:
            return
        line = json.dumps(record, ensure_ascii=False, sort_keys=True)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")


class Provider:
    """Base handle; subclasses implement ``_reply``. ``complete`` serializes
    transcript appends and (for the mock) playback ordering."""

    def __init__(self, cfg: ProviderConfig):
        self.cfg = cfg
        self._transcript = _Transcript(cfg.transcript_path or None)
        self._lock = threading.Lock()

    def complete(self, messages: list[ChatMessage]) -> str:
        if not messages:
            raise ValidationError("messages must be non-empty")
        with self._lock:
            try:
                reply = self._reply(messages)
            except Exception as exc:
                self._transcript.append(self._record(messages, None, error=str(exc)))
                raise
            self._transcript.append(self._record(messages, reply))
            return reply

    def _record(self, messages: list[ChatMessage], reply: str | None,
                error: str | None = None) -> dict:
        rec = {
            "ts": self._timestamp(),
            "backend": self.cfg.backend,
            "model": self.cfg.model,
            "messages": [m.to_dict() for m in messages],
            "reply": reply,
        }
        if error is not None:
            rec["error"] = error
        return rec

    def _timestamp(self) -> float:
        return time.time()

    def _reply(self, messages: list[ChatMessage]) -> str:
        raise NotImplementedError


class MockProvider(Provider):
    """Deterministic playback of a scripted reply sequence.

    Each call consumes the first unconsumed entry that matches the request
    (``index`` pins a call number, ``match`` is a substring, ``*`` matches
    anything). Transcript timestamps are the logical call counter so replays
    are byte-identical.
    """

    def __init__(self, cfg: ProviderConfig):
        super().__init__(cfg)
        self._entries = load_script(cfg.script_path)
        self._calls = 0

    def _timestamp(self) -> int:
        return self._calls

    def _reply(self, messages: list[ChatMessage]) -> str:
        request_text = "\n".join(m.content for m in messages)
        call_index = self._calls
        self._calls += 1
        for entry in self._entries:
            if entry.remaining <= 0:
                continue
            if entry.index is not None:
                if entry.index != call_index:
                    continue
            elif entry.match != "*" and entry.match not in request_text:
                continue
            entry.remaining -= 1
            return entry.reply
        raise ScriptExhausted(f"no scripted reply for request #{call_index}")


class RemoteProvider(Provider):
    """OpenAI-compatible ``/chat/completions`` client with bounded retries.

    Transient failures (connection errors, 408/429/5xx) back off
    exponentially; auth rejections fail immediately and the key is never
    logged.
    """

    _RETRY_STATUSES = {408, 429, 500, 502, 503, 504}

    def __init__(self, cfg: ProviderConfig):
        super().__init__(cfg)
        self._client = httpx.Client(timeout=cfg.timeout)

    def _reply(self, messages: list[ChatMessage]) -> str:
        url = self.cfg.endpoint.rstrip("/") + "/chat/completions"
        body = {
            "model": self.cfg.model,
            "messages": [m.to_dict() for m in messages],
            "temperature": self.cfg.temperature,
        }
        headers = {}
        api_key = os.environ.get(self.cfg.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        last_error: Exception | None = None
        for attempt in range(self.cfg.max_retries + 1):
            if attempt:
                time.sleep(self.cfg.retry_base_delay * 2 ** (attempt - 1))
            try:
                resp = self._client.post(url, json=body, headers=headers)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials ({resp.status_code})")
            if resp.status_code in self._RETRY_STATUSES:
                last_error = TransportError(f"status {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise TransportError(f"unexpected status {resp.status_code}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError, json.JSONDecodeError) as exc:
                raise TransportError(f"malformed completion payload: {exc}") from exc
        raise TransportError(
            f"request failed after {self.cfg.max_retries + 1} attempts: {last_error}"
        )

    def close(self) -> None:
        self._client.close()


def create_provider(cfg: ProviderConfig) -> Provider:
    if cfg.backend == "mock":
        return MockProvider(cfg)
    return RemoteProvider(cfg)
