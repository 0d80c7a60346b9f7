"""Text-completion access with per-token top-k log-probabilities.

Two provider implementations: an HTTP client with retry/backoff and a
fixture provider for deterministic replay.  A recording wrapper captures
live traffic into a JSON Lines store that the fixture provider can replay.
No other module constructs network calls.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Protocol


class GatewayError(Exception):
    pass


class FixtureMiss(GatewayError):
    def __init__(self, key: str):
        super().__init__(f"no fixture recorded for request key {key}")
        self.key = key


class RetriesExhausted(GatewayError):
    pass


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float = 0.7
    top_p: float = 0.95
    max_tokens: int = 256
    want_logprobs: int = 0  # top-k candidates per token, k <= 5
    salt: int = 0  # distinguishes resamples of an otherwise identical request

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if not 0 <= self.want_logprobs <= 5:
            raise ValueError("want_logprobs must be in [0, 5]")

    def resampled(self, attempt: int) -> "CompletionRequest":
        return replace(self, salt=attempt)


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    # one dict per generated token: candidate token -> log-probability
    token_logprobs: tuple[dict[str, float], ...] = ()


def request_key(req: CompletionRequest) -> str:
    payload = json.dumps(
        [req.prompt, req.temperature, req.top_p, req.max_tokens, req.want_logprobs, req.salt],
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class Provider(Protocol):
    def complete(self, req: CompletionRequest) -> CompletionResponse: ...


def _request_to_dict(req: CompletionRequest) -> dict:
    return {
        "prompt": req.prompt,
        "temperature": req.temperature,
        "top_p": req.top_p,
        "max_tokens": req.max_tokens,
        "want_logprobs": req.want_logprobs,
        "salt": req.salt,
    }


def _response_to_dict(resp: CompletionResponse) -> dict:
    return {"text": resp.text, "token_logprobs": [dict(t) for t in resp.token_logprobs]}


def _response_from_dict(raw: dict) -> CompletionResponse:
    return CompletionResponse(
        text=raw["text"],
        token_logprobs=tuple(dict(t) for t in raw.get("token_logprobs", [])),
    )


class FixtureProvider:
    """Replays recorded responses keyed by request hash.  Bit-deterministic."""

    def __init__(self, store: str | Path | None = None):
        self._responses: dict[str, CompletionResponse] = {}
        if store is not None:
            self.load(store)

    def load(self, store: str | Path) -> None:
        for line in Path(store).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            self._responses[rec["key"]] = _response_from_dict(rec["response"])

    def put(self, req: CompletionRequest, resp: CompletionResponse) -> None:
        self._responses[request_key(req)] = resp

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        key = request_key(req)
        if key not in self._responses:
            raise FixtureMiss(key)
        return self._responses[key]

    def __len__(self) -> int:
        return len(self._responses)


class RecordingProvider:
    """Passes requests through and appends (key, request, response) records."""

    def __init__(self, inner: Provider, store: str | Path):
        self.inner = inner
        self.store = Path(store)
        self.store.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        resp = self.inner.complete(req)
        rec = {
            "key": request_key(req),
            "request": _request_to_dict(req),
            "response": _response_to_dict(resp),
        }
        line = json.dumps(rec, ensure_ascii=False)
        with self._lock:
            with self.store.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        return resp


class RateLimiter:
    """Simple requests-per-minute limiter shared across threads."""

    def __init__(self, rpm: Optional[int], clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.rpm = rpm
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._stamps: list[float] = []

    def acquire(self) -> None:
        if not self.rpm:
            return
        while True:
            with self._lock:
                now = self._clock()
                self._stamps = [t for t in self._stamps if now - t < 60.0]
                if len(self._stamps) < self.rpm:
                    self._stamps.append(now)
                    return
                wait = 60.0 - (now - self._stamps[0])
            self._sleep(max(wait, 0.01))


class HttpProvider:
    """OpenAI-style completions endpoint client.

    Retries transient failures (429 and 5xx, connection errors) with
    exponential backoff, up to ``max_attempts`` tries.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = "SCHEMAKIT_API_KEY",
        max_attempts: int = 5,
        rpm: Optional[int] = None,
        timeout: float = 60.0,
        sleep: Callable[[float], None] = time.sleep,
        session=None,
    ):
        import requests

        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = os.environ.get(api_key_env, "")
        self.max_attempts = max_attempts
        self.timeout = timeout
        self._sleep = sleep
        self._session = session or requests.Session()
        self._limiter = RateLimiter(rpm, sleep=sleep)

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        import requests

        body = {
            "model": self.model,
            "prompt": req.prompt,
            "temperature": req.temperature,
            "top_p": req.top_p,
            "max_tokens": req.max_tokens,
        }
        if req.want_logprobs:
            body["logprobs"] = req.want_logprobs
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_error: Optional[str] = None
        for attempt in range(self.max_attempts):
            if attempt:
                self._sleep(min(2.0 ** attempt, 30.0))
            self._limiter.acquire()
            try:
                resp = self._session.post(
                    f"{self.base_url}/completions",
                    json=body,
                    headers=headers,
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_error = str(exc)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = f"http {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise GatewayError(f"http {resp.status_code}: {resp.text[:200]}")
            return self._parse(resp.json())
        raise RetriesExhausted(
            f"gave up after {self.max_attempts} attempts (last error: {last_error})"
        )

    @staticmethod
    def _parse(payload: dict) -> CompletionResponse:
        choice = payload["choices"][0]
        logprobs = choice.get("logprobs") or {}
        top = logprobs.get("top_logprobs") or []
        return CompletionResponse(
            text=choice.get("text", ""),
            token_logprobs=tuple(dict(t or {}) for t in top),
        )
