"""Uniform access to completion and continuation-scoring backends.

A backend speaks a completions-style HTTP protocol (text plus optional
per-token log-probabilities).  The gateway wraps any backend with retry
handling for transport failures and a concurrency bound so shared rate
limits are respected.
"""

from __future__ import annotations

import enum
import os
import threading
import time
from dataclasses import dataclass
from typing import Protocol

import httpx


class GatewayError(Exception):
    pass


class TransportError(GatewayError):
    """Retryable failure reaching the backend."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class ProtocolError(GatewayError):
    """The backend replied, but the reply is malformed.  Never retried."""


class CapabilityError(GatewayError):
    """The backend lacks a required capability (e.g. token log-probabilities)."""


class FinishReason(str, enum.Enum):
    STOP = "Stop"
    LENGTH_LIMIT = "LengthLimit"


@dataclass(frozen=True, slots=True)
class GenerationRequest:
    prompt: str
    max_tokens: int
    temperature: float
    model_id: str
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True, slots=True)
class ScoreRequest:
    prompt: str
    continuation: str
    model_id: str

    def __post_init__(self) -> None:
        if not self.continuation:
            raise ValueError("continuation must be non-empty")


@dataclass(frozen=True, slots=True)
class Completion:
    text: str
    finish_reason: FinishReason


class Backend(Protocol):
    def complete(self, req: GenerationRequest) -> Completion: ...

    def score_continuation(self, req: ScoreRequest) -> float: ...


@dataclass(frozen=True)
class GatewayConfig:
    endpoint_url: str = ""
    api_key_env: str | None = None
    model_id: str = "default"
    max_concurrency: int = 4
    retry_count: int = 3
    retry_backoff_ms: int = 250
    timeout_s: float = 60.0


class HttpCompletionsBackend:
    """Client for a completions endpoint returning text and token log-probs.

    Scoring echoes prompt+continuation with logprobs enabled and sums the
    log-probabilities of the tokens that start at or after the prompt/
    continuation boundary.
    """

    def __init__(self, config: GatewayConfig, client: httpx.Client | None = None):
        self._config = config
        headers = {}
        if config.api_key_env:
            key = os.environ.get(config.api_key_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        self._client = client or httpx.Client(
            timeout=config.timeout_s, headers=headers
        )

    def _post(self, payload: dict) -> dict:
        try:
            response = self._client.post(self._config.endpoint_url, json=payload)
        except httpx.HTTPError as exc:
            raise TransportError(f"backend unreachable: {exc}") from exc
        if response.status_code >= 500:
            raise TransportError(f"backend error {response.status_code}")
        if response.status_code != 200:
            raise ProtocolError(
                f"backend rejected request: {response.status_code} {response.text[:200]}"
            )
        try:
            return response.json()
        except ValueError as exc:
            raise ProtocolError(f"backend reply is not JSON: {exc}") from exc

    def complete(self, req: GenerationRequest) -> Completion:
        payload = {
            "model": req.model_id,
            "prompt": req.prompt,
            "max_tokens": req.max_tokens,
            "temperature": req.temperature,
        }
        if req.seed is not None:
            payload["seed"] = req.seed
        data = self._post(payload)
        try:
            choice = data["choices"][0]
            text = choice["text"]
            finish = choice.get("finish_reason", "stop")
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed completion reply: {exc}") from exc
        reason = (
            FinishReason.LENGTH_LIMIT if finish == "length" else FinishReason.STOP
        )
        return Completion(text=text, finish_reason=reason)

    def score_continuation(self, req: ScoreRequest) -> float:
        payload = {
            "model": req.model_id,
            "prompt": req.prompt + req.continuation,
            "max_tokens": 0,
            "temperature": 0.0,
            "echo": True,
            "logprobs": 0,
        }
        data = self._post(payload)
        try:
            choice = data["choices"][0]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed scoring reply: {exc}") from exc
        logprobs = choice.get("logprobs")
        if not logprobs or "token_logprobs" not in logprobs:
            raise CapabilityError(
                f"backend for {req.model_id} does not return token log-probabilities"
            )
        offsets = logprobs.get("text_offset")
        token_lps = logprobs["token_logprobs"]
        if offsets is None or len(offsets) != len(token_lps):
            raise ProtocolError("scoring reply lacks usable text offsets")
        boundary = len(req.prompt)
        total = 0.0
        for offset, lp in zip(offsets, token_lps):
            if offset >= boundary:
                if lp is None:
                    raise ProtocolError("missing log-probability for scored token")
                total += lp
        return total


class LlmGateway:
    """Retry and concurrency wrapper around a backend.

    Stateless apart from the semaphore; safe for concurrent use.  Transport
    errors are retried up to retry_count times with linear backoff; protocol
    and capability errors are never retried.
    """

    def __init__(
        self,
        backend: Backend,
        max_concurrency: int = 4,
        retry_count: int = 3,
        retry_backoff_ms: int = 250,
    ):
        self._backend = backend
        self._semaphore = threading.Semaphore(max_concurrency)
        self._retry_count = retry_count
        self._retry_backoff_ms = retry_backoff_ms

    def _with_retries(self, call):
        attempts = 0
        while True:
            attempts += 1
            try:
                with self._semaphore:
                    return call()
            except TransportError as exc:
                if attempts > self._retry_count:
                    raise TransportError(
                        f"{exc} (gave up after {attempts} attempts)", attempts=attempts
                    ) from exc
                time.sleep(self._retry_backoff_ms * attempts / 1000.0)

    def complete(self, req: GenerationRequest) -> Completion:
        return self._with_retries(lambda: self._backend.complete(req))

    def score_continuation(self, req: ScoreRequest) -> float:
        score = self._with_retries(lambda: self._backend.score_continuation(req))
        if score > 0:
            raise ProtocolError(f"backend returned positive log-probability {score}")
        return score


def gateway_from_config(config: GatewayConfig) -> LlmGateway:
    return LlmGateway(
        HttpCompletionsBackend(config),
        max_concurrency=config.max_concurrency,
        retry_count=config.retry_count,
        retry_backoff_ms=config.retry_backoff_ms,
    )
