"""Deterministic mock backend used by the test suite and fixture studies.

Rules are keyed lookup entries matched in registration order, either on the
exact prompt or on a substring.  A rule can be limited to a number of uses
(scripted response sequences) or can raise an injected failure, which lets
tests drive retry and repair paths deterministically.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .client import (
    Completion,
    FinishReason,
    GenerationRequest,
    ProtocolError,
    ScoreRequest,
    TransportError,
)


class MockLookupError(ProtocolError):
    """No mock rule matches a request; a test fixture is incomplete."""


@dataclass
class _CompletionRule:
    key: str
    text: str
    match: str = "exact"  # exact | contains
    finish: FinishReason = FinishReason.STOP
    uses: int | None = None
    fail: str | None = None  # transport | protocol

    def matches(self, prompt: str) -> bool:
        if self.uses is not None and self.uses <= 0:
            return False
        return prompt == self.key if self.match == "exact" else self.key in prompt


@dataclass
class _ScoreRule:
    continuation: str
    logprob: float | None = None
    prompt: str | None = None
    prompt_contains: str | None = None
    token_logprobs: dict[str, float] | None = None
    uses: int | None = None
    fail: str | None = None

    def matches(self, req: ScoreRequest) -> bool:
        if self.uses is not None and self.uses <= 0:
            return False
        if self.continuation != req.continuation:
            return False
        if self.prompt is not None and req.prompt != self.prompt:
            return False
        if self.prompt_contains is not None and self.prompt_contains not in req.prompt:
            return False
        return True


@dataclass
class MockBackend:
    """Keyed lookup backend; identical requests always get identical replies."""

    hashed_fallback: bool = False
    completion_rules: list[_CompletionRule] = field(default_factory=list)
    score_rules: list[_ScoreRule] = field(default_factory=list)
    complete_calls: int = 0
    score_calls: int = 0

    def add_completion(
        self,
        key: str,
        text: str,
        match: str = "exact",
        finish: FinishReason = FinishReason.STOP,
        uses: int | None = None,
        fail: str | None = None,
    ) -> None:
        self.completion_rules.append(
            _CompletionRule(key=key, text=text, match=match, finish=finish, uses=uses, fail=fail)
        )

    def add_score(
        self,
        continuation: str,
        logprob: float,
        prompt: str | None = None,
        prompt_contains: str | None = None,
        uses: int | None = None,
        fail: str | None = None,
    ) -> None:
        self.score_rules.append(
            _ScoreRule(
                continuation=continuation,
                logprob=logprob,
                prompt=prompt,
                prompt_contains=prompt_contains,
                uses=uses,
                fail=fail,
            )
        )

    def add_token_scores(self, prompt: str, continuation: str, token_logprobs: dict[str, float]) -> None:
        """Score a continuation as the sum of per-token log-probabilities."""
        self.score_rules.append(
            _ScoreRule(continuation=continuation, prompt=prompt, token_logprobs=token_logprobs)
        )

    @staticmethod
    def _raise(fail: str) -> None:
        if fail == "transport":
            raise TransportError("injected transport failure")
        raise ProtocolError("injected protocol failure")

    def complete(self, req: GenerationRequest) -> Completion:
        self.complete_calls += 1
        for rule in self.completion_rules:
            if rule.matches(req.prompt):
                if rule.uses is not None:
                    rule.uses -= 1
                if rule.fail:
                    self._raise(rule.fail)
                tokens = rule.text.split(" ")
                if len(tokens) > req.max_tokens:
                    return Completion(
                        text=" ".join(tokens[: req.max_tokens]),
                        finish_reason=FinishReason.LENGTH_LIMIT,
                    )
                return Completion(text=rule.text, finish_reason=rule.finish)
        raise MockLookupError(f"no mock completion for prompt: {req.prompt[:120]!r}")

    def score_continuation(self, req: ScoreRequest) -> float:
        self.score_calls += 1
        for rule in self.score_rules:
            if rule.matches(req):
                if rule.uses is not None:
                    rule.uses -= 1
                if rule.fail:
                    self._raise(rule.fail)
                if rule.token_logprobs is not None:
                    return sum(
                        rule.token_logprobs[tok] for tok in req.continuation.split()
                    )
                assert rule.logprob is not None
                return rule.logprob
        if self.hashed_fallback:
            return _hashed_logprob(req.prompt, req.continuation)
        raise MockLookupError(
            f"no mock score for continuation {req.continuation!r} "
            f"under prompt {req.prompt[:120]!r}"
        )


def _hashed_logprob(prompt: str, continuation: str) -> float:
    """Deterministic pseudo-score in [-5, -1] derived from the request bytes."""
    digest = hashlib.sha256(
        prompt.encode("utf-8") + b"\x00" + continuation.encode("utf-8")
    ).digest()
    bucket = int.from_bytes(digest[:4], "big") % 4000
    return -(1.0 + bucket / 1000.0)


def load_mock_fixture(path: str | Path, hashed_fallback: bool = False) -> MockBackend:
    """Build a mock backend from a canonical-notation fixture file.

    Each line is a flat JSON object: {"op": "complete", "key": ..., "text": ...,
    "match": "exact"|"contains", "finish": "stop"|"length", "uses": N,
    "fail": "transport"|"protocol"} or {"op": "score", "continuation": ...,
    "logprob": ..., "prompt": ...?, "prompt_contains": ...?}.
    """
    backend = MockBackend(hashed_fallback=hashed_fallback)
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        row = json.loads(line)
        op = row.get("op")
        if op == "complete":
            backend.add_completion(
                key=row["key"],
                text=row.get("text", ""),
                match=row.get("match", "exact"),
                finish=(
                    FinishReason.LENGTH_LIMIT
                    if row.get("finish") == "length"
                    else FinishReason.STOP
                ),
                uses=row.get("uses"),
                fail=row.get("fail"),
            )
        elif op == "score":
            backend.add_score(
                continuation=row["continuation"],
                logprob=float(row.get("logprob", 0.0)),
                prompt=row.get("prompt"),
                prompt_contains=row.get("prompt_contains"),
                uses=row.get("uses"),
                fail=row.get("fail"),
            )
        else:
            raise ValueError(f"unknown mock fixture op: {op!r}")
    return backend
