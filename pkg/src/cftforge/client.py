"""Client for OpenAI-compatible chat-completions endpoints.

One protocol covers teacher and student models alike: POST
``{base_url}/chat/completions`` with a messages array, read back
``choices[0].message.content``. Responses are cached on disk keyed by a
request fingerprint over (model, system, user, temperature, seed), because
teacher calls are the expensive resource and 50K-scale corpus runs must be
resumable. Caching is the only reproducibility mechanism: a seed is passed
through when supplied, but responses are treated as nondeterministic.

Transient failures (HTTP 429/5xx, timeouts, connection errors) retry with
exponential backoff; other 4xx statuses fail immediately. The parallelism
bound of ``complete_batch`` is a hard contract enforced by the worker pool.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

import requests

from .errors import ProtocolError, RequestError, TransportError, ValidationError
from .types import utc_now_iso

DEFAULT_API_KEY_ENV = "CFT_FORGE_API_KEY"

# transport(url, headers, payload, timeout) -> (status_code, body_text).
# Network-level failures raise TransportFailure; injectable for tests.
Transport = Callable[[str, Mapping[str, str], Mapping[str, Any], float], "tuple[int, str]"]


class TransportFailure(Exception):
    """Timeout or connection failure before any HTTP status was received."""


@dataclass(frozen=True)
class EndpointConfig:
    """Connection settings for one endpoint; the API key stays in the
    environment and is never serialized or logged."""

    base_url: str
    model: str
    api_key_env: str = DEFAULT_API_KEY_ENV
    max_parallel: int = 4
    timeout: float = 120.0
    max_retries: int = 3
    retry_base_delay: float = 0.5

    def __post_init__(self) -> None:
        if self.max_parallel < 1:
            raise ValidationError("max_parallel must be at least 1")
        if self.max_retries < 0:
            raise ValidationError("max_retries must be nonnegative")
        if self.timeout <= 0:
            raise ValidationError("timeout must be positive")
        if self.retry_base_delay < 0:
            raise ValidationError("retry_base_delay must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "base_url": self.base_url,
            "model": self.model,
            "api_key_env": self.api_key_env,
            "max_parallel": self.max_parallel,
            "timeout": self.timeout,
            "max_retries": self.max_retries,
            "retry_base_delay": self.retry_base_delay,
        }


@dataclass(frozen=True)
class ChatRequest:
    user: str
    system: str | None = None
    temperature: float = 0.0
    max_output_tokens: int | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        if not self.user:
            raise ValidationError("ChatRequest.user must be nonempty")
        if self.max_output_tokens is not None and self.max_output_tokens < 1:
            raise ValidationError("max_output_tokens must be positive")


@dataclass(frozen=True)
class CachedResponse:
    request_fingerprint: str
    content: str
    usage: dict | None
    fetched_at: str

    def to_dict(self) -> dict:
        return {
            "request_fingerprint": self.request_fingerprint,
            "content": self.content,
            "usage": self.usage,
            "fetched_at": self.fetched_at,
        }

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> "CachedResponse":
        return cls(
            request_fingerprint=record["request_fingerprint"],
            content=record["content"],
            usage=record.get("usage"),
            fetched_at=record["fetched_at"],
        )


def request_fingerprint(model: str, req: ChatRequest) -> str:
    """Cache key: requests differing only in temperature or seed never collide."""
    payload = json.dumps(
        [model, req.system, req.user, req.temperature, req.seed],
        ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """Append-only on-disk response store, sharded by fingerprint prefix.

    Layout: one JSONL file per two-hex-digit prefix shard. Shards load
    lazily into memory; appends are serialized under a lock, reads are safe
    from any thread.
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._shards: dict[str, dict[str, CachedResponse]] = {}

    def _shard(self, fingerprint: str) -> dict[str, CachedResponse]:
        prefix = fingerprint[:2]
        with self._lock:
            if prefix not in self._shards:
                entries: dict[str, CachedResponse] = {}
                path = self.root / f"{prefix}.jsonl"
                if path.exists():
                    with open(path, "r", encoding="utf-8") as fh:
                        for line in fh:
                            line = line.strip()
                            if line:
                                entry = CachedResponse.from_dict(json.loads(line))
                                entries[entry.request_fingerprint] = entry
                self._shards[prefix] = entries
            return self._shards[prefix]

    def get(self, fingerprint: str) -> CachedResponse | None:
        return self._shard(fingerprint).get(fingerprint)

    def put(self, response: CachedResponse) -> None:
        shard = self._shard(response.request_fingerprint)
        path = self.root / f"{response.request_fingerprint[:2]}.jsonl"
        with self._lock:
            shard[response.request_fingerprint] = response
            with open(path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(json.dumps(response.to_dict(), ensure_ascii=False))
                fh.write("\n")


def http_transport(url: str, headers: Mapping[str, str],
                   payload: Mapping[str, Any], timeout: float) -> tuple[int, str]:
    try:
        resp = requests.post(url, headers=dict(headers), json=dict(payload),
                             timeout=timeout)
    except requests.RequestException as exc:
        raise TransportFailure(str(exc)) from exc
    return resp.status_code, resp.text


class TeacherClient:
    """Shareable across threads; holds the endpoint config and the cache."""

    def __init__(self, config: EndpointConfig,
                 cache: ResponseCache | None = None,
                 transport: Transport | None = None,
                 sleep: Callable[[float], None] = time.sleep) -> None:
        self.config = config
        self.cache = cache
        self._transport = transport or http_transport
        self._sleep = sleep

    # -- single request -------------------------------------------------

    def complete(self, req: ChatRequest) -> str:
        return self.complete_with_meta(req).content

    def complete_with_meta(self, req: ChatRequest) -> CachedResponse:
        """Assistant message plus cache metadata; zero network on cache hit."""
        fingerprint = request_fingerprint(self.config.model, req)
        if self.cache is not None:
            hit = self.cache.get(fingerprint)
            if hit is not None:
                return hit
        response = self._fetch(req, fingerprint)
        if self.cache is not None:
            self.cache.put(response)
        return response

    def _fetch(self, req: ChatRequest, fingerprint: str) -> CachedResponse:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.config.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        messages = []
        if req.system is not None:
            messages.append({"role": "system", "content": req.system})
        messages.append({"role": "user", "content": req.user})
        payload: dict[str, Any] = {
            "model": self.config.model,
            "messages": messages,
            "temperature": req.temperature,
        }
        if req.max_output_tokens is not None:
            payload["max_tokens"] = req.max_output_tokens
        if req.seed is not None:
            payload["seed"] = req.seed

        last_status: int | None = None
        last_detail = ""
        attempts = self.config.max_retries + 1
        for attempt in range(attempts):
            try:
                status, body = self._transport(url, headers, payload,
                                               self.config.timeout)
            except TransportFailure as exc:
                last_status, last_detail = None, str(exc)
            else:
                if status == 200:
                    return CachedResponse(
                        request_fingerprint=fingerprint,
                        content=_parse_content(body),
                        usage=_parse_usage(body),
                        fetched_at=utc_now_iso(),
                    )
                if status == 429 or 500 <= status < 600:
                    last_status, last_detail = status, body[:200]
                else:
                    raise RequestError(
                        f"endpoint rejected request with status {status}", status)
            if attempt < attempts - 1:
                self._sleep(self.config.retry_base_delay * (2 ** attempt))
        raise TransportError(
            f"retries exhausted after {attempts} attempts "
            f"(last status {last_status}): {last_detail}",
            last_status=last_status)

    # -- batched requests -------------------------------------------------

    def complete_batch(
        self,
        reqs: list[ChatRequest],
        on_progress: Callable[[int, int], None] | None = None,
    ) -> list[tuple[int, str | Exception]]:
        """Results aligned by index; per-item errors never abort the batch.

        At most ``max_parallel`` requests are in flight at once. Identical
        requests within one batch collapse to a single network call.
        """
        by_fingerprint: dict[str, list[int]] = {}
        order: list[tuple[str, ChatRequest]] = []
        for index, req in enumerate(reqs):
            fp = request_fingerprint(self.config.model, req)
            if fp not in by_fingerprint:
                by_fingerprint[fp] = []
                order.append((fp, req))
            by_fingerprint[fp].append(index)

        results: list[str | Exception | None] = [None] * len(reqs)
        done = 0
        lock = threading.Lock()

        def work(req: ChatRequest) -> str | Exception:
            try:
                return self.complete(req)
            except Exception as exc:  # noqa: BLE001 - isolated per item
                return exc

        if order:
            with ThreadPoolExecutor(max_workers=self.config.max_parallel) as pool:
                for (fp, _), outcome in zip(order,
                                            pool.map(work, [r for _, r in order])):
                    for index in by_fingerprint[fp]:
                        results[index] = outcome
                        if on_progress is not None:
                            with lock:
                                done += 1
                                on_progress(done, len(reqs))
        return [(i, r) for i, r in enumerate(results)]  # type: ignore[list-item]


def _parse_content(body: str) -> str:
    try:
        data = json.loads(body)
        content = data["choices"][0]["message"]["content"]
    except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
        raise ProtocolError(f"malformed chat completion body: {exc}") from exc
    if not isinstance(content, str):
        raise ProtocolError("message content is not a string")
    return content


def _parse_usage(body: str) -> dict | None:
    try:
        usage = json.loads(body).get("usage")
    except json.JSONDecodeError:
        return None
    return usage if isinstance(usage, dict) else None
