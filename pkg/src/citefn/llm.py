"""Chat-completions client: rate limited, retrying, and mockable.

The wire protocol is the common hosted-model chat shape: request
``{model, messages[{role, content}], temperature, max_tokens}``, response
with an assistant message under ``choices`` and token counts under
``usage``. Disabled sampling maps to temperature 0, the closest portable
equivalent of greedy decoding.

Transports are pluggable. ``HttpTransport`` posts to a real endpoint;
``MockTransport`` replays a script of (status, body) entries, which is how
the entire pipeline runs deterministically in tests and demos.
"""

from __future__ import annotations

import json
import math
import os
import random
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import requests

RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})

Message = tuple[str, str]


class LlmError(Exception):
    pass


class RequestError(LlmError):
    """Non-retryable problem: bad request shape or a hard 4xx from the endpoint."""

    def __init__(self, message: str, status: Optional[int] = None):
        self.status = status
        super().__init__(message)


class TransportError(LlmError):
    """Retries exhausted; carries the last status seen."""

    def __init__(self, message: str, status: Optional[int] = None, retries: int = 0):
        self.status = status
        self.retries = retries
        super().__init__(message)


class TransportTimeout(LlmError):
    pass


class MockScriptExhausted(LlmError):
    pass


@dataclass(frozen=True)
class GenerationConfig:
    model_name: str = "local-model"
    sampling_enabled: bool = False
    max_output_tokens: int = 1024
    request_timeout: float = 120.0


@dataclass(frozen=True)
class ChatResponse:
    content: str
    input_tokens: int
    output_tokens: int

    def __post_init__(self):
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be >= 0")


def heuristic_token_count(text: str) -> int:
    """Approximate fallback counter: ceil(chars / 4). Use a real tokenizer
    via the ``counter`` argument of count_tokens wherever accuracy matters."""
    return math.ceil(len(text) / 4)


def count_tokens(text: str, counter: Optional[Callable[[str], int]] = None) -> int:
    if counter is None:
        counter = heuristic_token_count
    n = counter(text)
    if n < 0:
        raise ValueError("token counter returned a negative count")
    return n


class RateLimiter:
    """Sliding-window limiter: at most max_requests per interval seconds.

    Clock and sleep are injectable so tests drive it with a mock clock.
    A shared instance is the single synchronization point for concurrent
    workers hitting one endpoint.
    """

    def __init__(
        self,
        max_requests: int,
        interval: float = 60.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if max_requests < 1:
            raise ValueError("max_requests must be >= 1")
        self.max_requests = max_requests
        self.interval = interval
        self._clock = clock
        self._sleep = sleep
        self._sent: deque[float] = deque()

    def acquire(self) -> None:
        while True:
            now = self._clock()
            while self._sent and self._sent[0] <= now - self.interval:
                self._sent.popleft()
            if len(self._sent) < self.max_requests:
                self._sent.append(now)
                return
            self._sleep(self._sent[0] + self.interval - now)


@dataclass(frozen=True)
class RetryPolicy:
    max_retries: int = 4
    base_delay: float = 1.0
    max_delay: float = 30.0
    jitter: bool = True

    def delay(self, attempt: int, rng: Optional[random.Random] = None) -> float:
        d = min(self.base_delay * (2**attempt), self.max_delay)
        if self.jitter and rng is not None:
            d *= 0.5 + rng.random() / 2
        return d


class HttpTransport:
    def __init__(self, url: str, api_key: str = "", session: Optional[requests.Session] = None):
        self.url = url
        self.api_key = api_key
        self._session = session or requests.Session()

    def send(self, payload: dict, timeout: float) -> tuple[int, dict]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self._session.post(self.url, json=payload, headers=headers, timeout=timeout)
        except requests.Timeout as exc:
            raise TransportTimeout(str(exc)) from exc
        except requests.RequestException as exc:
            raise TransportTimeout(f"connection failure: {exc}") from exc
        try:
            body = resp.json()
        except ValueError:
            body = {}
        return resp.status_code, body


class MockTransport:
    """Replays scripted (status, body) entries in order.

    Script entries may be full response bodies or the shorthand
    ``{"status": 200, "content": "TRUE"}``, which is expanded to the
    standard chat response shape without usage counts.
    """

    def __init__(self, entries: list[tuple[int, dict]]):
        self._entries = list(entries)
        self.requests: list[dict] = []

    @classmethod
    def from_script(cls, path) -> "MockTransport":
        entries = []
        with open(Path(path), encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                status = int(obj.get("status", 200))
                if "body" in obj:
                    body = obj["body"]
                elif "content" in obj:
                    body = {"choices": [{"message": {"role": "assistant", "content": obj["content"]}}]}
                else:
                    body = {}
                entries.append((status, body))
        return cls(entries)

    @classmethod
    def from_contents(cls, contents: list[str]) -> "MockTransport":
        return cls(
            [
                (200, {"choices": [{"message": {"role": "assistant", "content": c}}]})
                for c in contents
            ]
        )

    def send(self, payload: dict, timeout: float) -> tuple[int, dict]:
        self.requests.append(payload)
        if not self._entries:
            raise MockScriptExhausted(
                f"mock script exhausted after {len(self.requests) - 1} responses"
            )
        return self._entries.pop(0)


class ChatClient:
    """Issues chat calls through a transport with rate limiting and
    exponential-backoff retries on 429/5xx/timeouts."""

    def __init__(
        self,
        transport,
        rate_limiter: Optional[RateLimiter] = None,
        retry_policy: Optional[RetryPolicy] = None,
        token_counter: Optional[Callable[[str], int]] = None,
        sleep: Callable[[float], None] = time.sleep,
        rng: Optional[random.Random] = None,
    ):
        self.transport = transport
        self.rate_limiter = rate_limiter
        self.retry_policy = retry_policy or RetryPolicy()
        self.token_counter = token_counter
        self._sleep = sleep
        self._rng = rng if rng is not None else random.Random()
        self.last_retry_count = 0
        self.total_requests = 0

    def chat(self, messages: list[Message], cfg: GenerationConfig) -> ChatResponse:
        if not messages:
            raise RequestError("messages must be non-empty")
        if messages[-1][0] != "user":
            raise RequestError(f"last turn must be from the user, got {messages[-1][0]!r}")

        payload = {
            "model": cfg.model_name,
            "messages": [{"role": r, "content": c} for r, c in messages],
            "temperature": 1.0 if cfg.sampling_enabled else 0.0,
            "max_tokens": cfg.max_output_tokens,
        }

        self.last_retry_count = 0
        last_status: Optional[int] = None
        attempts = self.retry_policy.max_retries + 1
        for attempt in range(attempts):
            if self.rate_limiter is not None:
                self.rate_limiter.acquire()
            self.total_requests += 1
            try:
                status, body = self.transport.send(payload, cfg.request_timeout)
            except TransportTimeout:
                status, body = None, None
            if status is not None and status == 200:
                return self._parse_response(messages, body)
            if status is not None and 400 <= status < 500 and status not in RETRYABLE_STATUSES:
                raise RequestError(f"endpoint rejected request with status {status}", status=status)
            last_status = status
            if attempt < attempts - 1:
                self.last_retry_count += 1
                self._sleep(self.retry_policy.delay(attempt, self._rng if self.retry_policy.jitter else None))
        raise TransportError(
            f"retries exhausted after {self.last_retry_count} retries "
            f"(last status: {last_status})",
            status=last_status,
            retries=self.last_retry_count,
        )

    def _parse_response(self, messages: list[Message], body: dict) -> ChatResponse:
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise RequestError(f"malformed response body: {body!r}") from exc
        usage = body.get("usage") or {}
        if "prompt_tokens" in usage and "completion_tokens" in usage:
            input_tokens = int(usage["prompt_tokens"])
            output_tokens = int(usage["completion_tokens"])
        else:
            input_tokens = count_tokens("\n".join(c for _, c in messages), self.token_counter)
            output_tokens = count_tokens(content, self.token_counter)
        return ChatResponse(content=content, input_tokens=input_tokens, output_tokens=output_tokens)


def client_from_env(env: Optional[dict] = None) -> ChatClient:
    """Build a client from CITEFN_ENDPOINT, CITEFN_API_KEY and CITEFN_RPM."""
    env = os.environ if env is None else env
    url = env.get("CITEFN_ENDPOINT", "")
    if not url:
        raise RequestError("CITEFN_ENDPOINT is not set")
    limiter = RateLimiter(max_requests=int(env.get("CITEFN_RPM", "60")), interval=60.0)
    return ChatClient(HttpTransport(url, env.get("CITEFN_API_KEY", "")), rate_limiter=limiter)
