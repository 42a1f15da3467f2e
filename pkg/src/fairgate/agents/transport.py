"""Chat-completion transport with deterministic caching.

A :class:`ChatClient` wraps any transport (real HTTP or a scripted fake)
behind a file cache keyed by the canonicalized request, so a fully
populated cache replays a corpus run byte-identically with zero network
calls. The usage ledger is only touched on cache misses.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping, Protocol

import httpx

from ..errors import TransportError
from .parsing import extract_json
from .prompts import AgentKind, kind_of_system_prompt
from .usage import Pricing, UsageLedger, UsageRecord

log = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "OPENAI_API_KEY"


@dataclass(frozen=True)
class ChatRequest:
    """One deterministic chat-completion request (temperature pinned to 0)."""

    model: str
    system: str
    user: str
    temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self):
        if self.temperature != 0.0:
            raise ValueError("decoding is deterministic: temperature must be 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")

    def canonical(self) -> str:
        return json.dumps(
            {
                "model": self.model,
                "system": self.system,
                "user": self.user,
                "temperature": self.temperature,
                "max_output_tokens": self.max_output_tokens,
            },
            sort_keys=True,
            ensure_ascii=False,
            separators=(",", ":"),
        )


def request_key(request: ChatRequest) -> str:
    """Lowercase hex digest of the canonicalized request."""
    return hashlib.sha256(request.canonical().encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class AgentResponse:
    """A transport result: raw text, extracted JSON (None if unparseable),
    the usage charged for it, and whether it came from cache."""

    raw_text: str
    parsed: Any
    usage: UsageRecord
    cache_hit: bool


def wrap_completion(text: str, input_tokens: int = 0, output_tokens: int = 0) -> dict:
    """Build a minimal chat-completions response body around ``text``."""
    return {
        "choices": [{"message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": input_tokens, "completion_tokens": output_tokens},
    }


def _body_text(body: dict) -> str:
    try:
        content = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise TransportError(f"malformed chat-completions body: {exc}") from exc
    return content or ""


def _body_tokens(body: dict) -> tuple[int, int]:
    usage = body.get("usage") or {}
    return int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0))


class Transport(Protocol):
    def complete(self, request: ChatRequest) -> dict:
        """Return a full chat-completions response body."""
        ...


class HttpTransport:
    """OpenAI-compatible chat-completions client.

    Retries transport failures and 5xx with exponential backoff; any 4xx
    is treated as non-retryable. A semaphore bounds in-flight requests.
    """

    def __init__(
        self,
        base_url: str,
        *,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff_base: float = 1.0,
        max_inflight: int = 8,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self._sleep = sleep
        self._semaphore = threading.Semaphore(max(1, max_inflight))
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, request: ChatRequest) -> dict:
        payload = {
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        url = f"{self.base_url}/chat/completions"
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                with self._semaphore:
                    response = self._client.post(url, json=payload, headers=self._headers())
            except httpx.HTTPError as exc:
                last_error = exc
                log.warning("transport error (attempt %d): %s", attempt + 1, exc)
                continue
            if response.status_code == 200:
                try:
                    return response.json()
                except json.JSONDecodeError as exc:
                    raise TransportError(f"non-JSON response from {url}: {exc}") from exc
            if 400 <= response.status_code < 500:
                raise TransportError(
                    f"chat endpoint rejected request ({response.status_code}): "
                    f"{response.text[:500]}"
                )
            last_error = TransportError(f"server error {response.status_code}")
            log.warning("server error %d (attempt %d)", response.status_code, attempt + 1)
        raise TransportError(f"transport failed after {self.max_retries + 1} attempts: {last_error}")


class CannedTransport:
    """Scripted stand-in for the chat endpoint, used by all offline tests.

    Responses are resolved by exact request key first, then by a default
    response per agent kind (identified by the system prompt). Every call
    is recorded so tests can assert which agents went to the "network".
    """

    def __init__(
        self,
        responses: Mapping[str, str] | None = None,
        defaults: Mapping[AgentKind | str, str] | None = None,
    ):
        self.responses = dict(responses or {})
        self.defaults: dict[AgentKind, str] = {}
        for kind, text in (defaults or {}).items():
            key = kind if isinstance(kind, AgentKind) else AgentKind(str(kind))
            self.defaults[key] = text
        self.calls: list[ChatRequest] = []
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> "CannedTransport":
        payload = json.loads(Path(path).read_text("utf-8"))
        return cls(payload.get("responses"), payload.get("defaults"))

    def _resolve(self, request: ChatRequest) -> str:
        key = request_key(request)
        if key in self.responses:
            return self.responses[key]
        kind = kind_of_system_prompt(request.system)
        if kind is not None and kind in self.defaults:
            return self.defaults[kind]
        raise TransportError(f"no scripted response for request key {key}")

    def complete(self, request: ChatRequest) -> dict:
        with self._lock:
            self.calls.append(request)
        text = self._resolve(request)
        # Deterministic synthetic token counts keep reports stable.
        input_tokens = (len(request.system) + len(request.user)) // 4
        output_tokens = max(1, len(text) // 4)
        return wrap_completion(text, input_tokens, output_tokens)


class ResponseCache:
    """One JSON file per request key under a cache directory."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text("utf-8"))
        except (OSError, json.JSONDecodeError):
            log.warning("discarding unreadable cache entry %s", path.name)
            return None

    def put(self, key: str, body: dict) -> None:
        serialized = json.dumps(body, ensure_ascii=False, sort_keys=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(serialized)
            os.replace(tmp, self._path(key))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def stats(self) -> dict:
        files = list(self.directory.glob("*.json"))
        return {
            "directory": str(self.directory),
            "entries": len(files),
            "bytes": sum(f.stat().st_size for f in files),
        }


class ChatClient:
    """Cache-aware front door for agent calls.

    ``refresh=True`` bypasses the cache read (used for JSON re-asks where
    a cached malformed response would otherwise be returned forever).
    """

    def __init__(
        self,
        transport: Transport,
        *,
        cache: ResponseCache | None = None,
        ledger: UsageLedger | None = None,
        pricing: Pricing | None = None,
    ):
        self.transport = transport
        self.cache = cache
        self.ledger = ledger if ledger is not None else UsageLedger()
        self.pricing = pricing

    def complete(self, request: ChatRequest, *, tag: str | None = None, refresh: bool = False) -> AgentResponse:
        key = request_key(request)
        if self.cache is not None and not refresh:
            body = self.cache.get(key)
            if body is not None:
                text = _body_text(body)
                input_tokens, output_tokens = _body_tokens(body)
                usage = UsageRecord.from_tokens(
                    input_tokens, output_tokens, pricing=self.pricing, agent=tag
                )
                return AgentResponse(text, extract_json(text), usage, cache_hit=True)

        body = self.transport.complete(request)
        text = _body_text(body)
        if self.cache is not None:
            self.cache.put(key, body)
        input_tokens, output_tokens = _body_tokens(body)
        usage = UsageRecord.from_tokens(input_tokens, output_tokens, pricing=self.pricing, agent=tag)
        self.ledger.add(usage)
        return AgentResponse(text, extract_json(text), usage, cache_hit=False)
