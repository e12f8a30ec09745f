"""Provider abstraction for token-level completions with usage accounting.

Two provider roles exist: a completion provider that returns per-token
probabilities with top-k alternatives (used for goal retrieval and repair),
and a plain-text selector used to pick among numbered candidates.  A
scripted provider replays recorded fixtures byte-for-byte; a live provider
talks to an OpenAI-compatible endpoint.
"""

from __future__ import annotations

import json
import math
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

PURPOSES = ("initial", "recursive", "repair", "repair-recurse", "selection")


class GatewayError(RuntimeError):
    pass


class FixtureMissError(GatewayError):
    """A scripted provider has no entry for the requested prompt."""


class FixtureConflictError(GatewayError):
    """Recording would silently overwrite an existing entry with a different payload."""


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 64
    stop: tuple[str, ...] = ()
    alternatives_per_token: int = 5
    purpose: str = "initial"

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.alternatives_per_token < 1:
            raise ValueError("alternatives_per_token must be >= 1")
        if self.purpose not in PURPOSES:
            raise ValueError(f"unknown purpose {self.purpose!r}")


@dataclass(frozen=True)
class TokenAlternative:
    text: str
    logprob: float

    @property
    def prob(self) -> float:
        return math.exp(self.logprob)


@dataclass(frozen=True)
class CompletionToken:
    text: str
    logprob: float
    alternatives: tuple[TokenAlternative, ...] = ()

    @property
    def prob(self) -> float:
        return math.exp(self.logprob)


@dataclass(frozen=True)
class Completion:
    tokens: tuple[CompletionToken, ...]
    prompt_token_count: int
    completion_token_count: int

    @property
    def full_text(self) -> str:
        return "".join(t.text for t in self.tokens)


@dataclass
class UsageBucket:
    prompts: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass
class UsageLedger:
    """Per-purpose accounting of prompts sent and tokens exchanged."""

    buckets: dict[str, UsageBucket] = field(default_factory=dict)

    def add(self, purpose: str, prompt_tokens: int, completion_tokens: int) -> None:
        if prompt_tokens < 0 or completion_tokens < 0:
            raise ValueError("token counts must be nonnegative")
        bucket = self.buckets.setdefault(purpose, UsageBucket())
        bucket.prompts += 1
        bucket.prompt_tokens += prompt_tokens
        bucket.completion_tokens += completion_tokens

    @property
    def total_prompt_tokens(self) -> int:
        return sum(b.prompt_tokens for b in self.buckets.values())

    @property
    def total_completion_tokens(self) -> int:
        return sum(b.completion_tokens for b in self.buckets.values())

    @property
    def total_tokens(self) -> int:
        return self.total_prompt_tokens + self.total_completion_tokens

    def snapshot(self) -> dict:
        return {
            purpose: {
                "prompts": b.prompts,
                "prompt_tokens": b.prompt_tokens,
                "completion_tokens": b.completion_tokens,
            }
            for purpose, b in sorted(self.buckets.items())
        }


class CompletionProvider(Protocol):
    def complete(self, request: CompletionRequest) -> Completion: ...


class SelectorProvider(Protocol):
    def answer(self, prompt: str, system: str | None = None) -> tuple[str, int, int]: ...


def canonical_prompt(text: str) -> str:
    """Newline normalization used for fixture keys."""
    return text.replace("\r\n", "\n")


def estimate_tokens(text: str) -> int:
    """Deterministic token estimate used when recording synthetic fixtures."""
    return len(re.findall(r"\S+", text))


def _truncate_at_stop(tokens: tuple[CompletionToken, ...], stop: tuple[str, ...]) -> tuple[CompletionToken, ...]:
    """Cut the output at the first token that completes a stop sequence."""
    if not stop:
        return tokens
    text = ""
    for i, token in enumerate(tokens):
        text += token.text
        if any(seq in text for seq in stop):
            return tokens[:i]
    return tokens


class Gateway:
    """Routes requests to providers and keeps the usage ledger."""

    def __init__(
        self,
        provider: CompletionProvider,
        selector: SelectorProvider | None = None,
        ledger: UsageLedger | None = None,
    ) -> None:
        self.provider = provider
        self.selector = selector
        self.ledger = ledger if ledger is not None else UsageLedger()

    def complete(self, request: CompletionRequest) -> Completion:
        completion = self.provider.complete(request)
        tokens = _truncate_at_stop(completion.tokens, request.stop)
        if len(tokens) != len(completion.tokens):
            completion = Completion(
                tokens=tokens,
                prompt_token_count=completion.prompt_token_count,
                completion_token_count=len(tokens),
            )
        self.ledger.add(request.purpose, completion.prompt_token_count, completion.completion_token_count)
        return completion

    def select(self, prompt: str, system: str | None = None) -> str:
        if self.selector is None:
            raise GatewayError("no selector provider configured")
        reply, prompt_tokens, completion_tokens = self.selector.answer(prompt, system=system)
        self.ledger.add("selection", prompt_tokens, completion_tokens)
        return reply


# ---------------------------------------------------------------------------
# Scripted provider (record/replay fixtures)


def _completion_key(prompt: str, temperature: float) -> str:
    return f"{temperature:g}\x1f{canonical_prompt(prompt)}"


def _selection_key(prompt: str, system: str | None) -> str:
    return f"{canonical_prompt(system or '')}\x1f{canonical_prompt(prompt)}"


def _completion_to_entry(request: CompletionRequest, completion: Completion) -> dict:
    return {
        "prompt": canonical_prompt(request.prompt),
        "temperature": request.temperature,
        "prompt_tokens": completion.prompt_token_count,
        "tokens": [
            {
                "text": t.text,
                "logprob": t.logprob,
                "alternatives": [[a.text, a.logprob] for a in t.alternatives],
            }
            for t in completion.tokens
        ],
    }


def _entry_to_completion(entry: dict) -> Completion:
    tokens = tuple(
        CompletionToken(
            text=t["text"],
            logprob=t["logprob"],
            alternatives=tuple(TokenAlternative(a[0], a[1]) for a in t.get("alternatives", [])),
        )
        for t in entry["tokens"]
    )
    return Completion(
        tokens=tokens,
        prompt_token_count=entry["prompt_tokens"],
        completion_token_count=len(tokens),
    )


class Fixture:
    """An on-disk set of recorded completions and selection replies."""

    def __init__(self, data: dict | None = None) -> None:
        data = data or {}
        self.completions: dict[str, dict] = {}
        self.selections: dict[str, dict] = {}
        for entry in data.get("completions", []):
            self.completions[_completion_key(entry["prompt"], entry["temperature"])] = entry
        for entry in data.get("selections", []):
            self.selections[_selection_key(entry["prompt"], entry.get("system"))] = entry

    @staticmethod
    def load(path: str | Path) -> "Fixture":
        return Fixture(json.loads(Path(path).read_text(encoding="utf-8")))

    def save(self, path: str | Path) -> None:
        data = {
            "completions": list(self.completions.values()),
            "selections": list(self.selections.values()),
        }
        Path(path).write_text(json.dumps(data, indent=1, sort_keys=False) + "\n", encoding="utf-8")

    def record_completion(self, request: CompletionRequest, completion: Completion) -> dict:
        """Add a replayable entry; refuses to overwrite with a different payload."""
        entry = _completion_to_entry(request, completion)
        key = _completion_key(request.prompt, request.temperature)
        existing = self.completions.get(key)
        if existing is not None:
            if existing != entry:
                raise FixtureConflictError(
                    f"fixture already has a different completion for this prompt/temperature: "
                    f"{request.prompt[:60]!r}..."
                )
            return existing
        self.completions[key] = entry
        return entry

    def record_selection(
        self, prompt: str, system: str | None, answer: str, prompt_tokens: int, completion_tokens: int
    ) -> dict:
        entry = {
            "prompt": canonical_prompt(prompt),
            "system": canonical_prompt(system) if system else None,
            "answer": answer,
            "prompt_tokens": prompt_tokens,
            "completion_tokens": completion_tokens,
        }
        key = _selection_key(prompt, system)
        existing = self.selections.get(key)
        if existing is not None:
            if existing != entry:
                raise FixtureConflictError("fixture already has a different selection reply")
            return existing
        self.selections[key] = entry
        return entry


class ScriptedProvider:
    """Replays a fixture deterministically; a miss is fatal in replay mode."""

    def __init__(self, fixture: Fixture) -> None:
        self.fixture = fixture

    def complete(self, request: CompletionRequest) -> Completion:
        key = _completion_key(request.prompt, request.temperature)
        entry = self.fixture.completions.get(key)
        if entry is None:
            head = canonical_prompt(request.prompt)[-120:]
            raise FixtureMissError(
                f"no recorded completion for temperature {request.temperature:g}, "
                f"prompt ending ...{head!r}"
            )
        return _entry_to_completion(entry)

    def answer(self, prompt: str, system: str | None = None) -> tuple[str, int, int]:
        entry = self.fixture.selections.get(_selection_key(prompt, system))
        if entry is None:
            head = canonical_prompt(prompt)[-120:]
            raise FixtureMissError(f"no recorded selection reply for prompt ending ...{head!r}")
        return entry["answer"], entry["prompt_tokens"], entry["completion_tokens"]


class RecordingProvider:
    """Wraps live providers and records every exchange into a fixture."""

    def __init__(
        self,
        provider: CompletionProvider,
        fixture: Fixture,
        selector: SelectorProvider | None = None,
    ) -> None:
        self._provider = provider
        self._selector = selector
        self.fixture = fixture

    def complete(self, request: CompletionRequest) -> Completion:
        completion = self._provider.complete(request)
        self.fixture.record_completion(request, completion)
        return completion

    def answer(self, prompt: str, system: str | None = None) -> tuple[str, int, int]:
        if self._selector is None:
            raise GatewayError("no selector provider configured for recording")
        reply, prompt_tokens, completion_tokens = self._selector.answer(prompt, system=system)
        self.fixture.record_selection(prompt, system, reply, prompt_tokens, completion_tokens)
        return reply, prompt_tokens, completion_tokens


# ---------------------------------------------------------------------------
# Live provider (OpenAI-compatible endpoints)


class LiveProvider:
    """Completions + chat against an OpenAI-compatible server.

    The API key comes from the environment (LLM_API_KEY, falling back to
    OPENAI_API_KEY); the base URL is configurable.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        selector_model: str | None = None,
        api_key: str | None = None,
        timeout: float = 60.0,
        retries: int = 3,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.selector_model = selector_model or model
        self.api_key = api_key or os.environ.get("LLM_API_KEY") or os.environ.get("OPENAI_API_KEY")
        self.timeout = timeout
        self.retries = retries

    def _post(self, path: str, payload: dict) -> dict:
        import httpx

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.retries):
            try:
                response = httpx.post(
                    f"{self.base_url}{path}", json=payload, headers=headers, timeout=self.timeout
                )
                response.raise_for_status()
                return response.json()
            except Exception as exc:  # network or HTTP error: bounded retry
                last_error = exc
                time.sleep(min(2.0**attempt, 8.0))
        raise GatewayError(f"provider request failed after {self.retries} attempts: {last_error}")

    def complete(self, request: CompletionRequest) -> Completion:
        payload = {
            "model": self.model,
            "prompt": request.prompt,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "logprobs": request.alternatives_per_token,
        }
        if request.stop:
            payload["stop"] = list(request.stop)
        data = self._post("/completions", payload)
        choice = data["choices"][0]
        logprobs = choice.get("logprobs") or {}
        texts = logprobs.get("tokens", [])
        token_lps = logprobs.get("token_logprobs", [])
        top = logprobs.get("top_logprobs") or [{} for _ in texts]
        tokens = []
        for text, logprob, alts in zip(texts, token_lps, top):
            ranked = sorted((alts or {}).items(), key=lambda kv: -kv[1])
            alternatives = tuple(
                TokenAlternative(alt_text, alt_lp) for alt_text, alt_lp in ranked if alt_text != text
            )
            tokens.append(CompletionToken(text=text, logprob=logprob or 0.0, alternatives=alternatives))
        usage = data.get("usage", {})
        return Completion(
            tokens=tuple(tokens),
            prompt_token_count=usage.get("prompt_tokens", estimate_tokens(request.prompt)),
            completion_token_count=usage.get("completion_tokens", len(tokens)),
        )

    def answer(self, prompt: str, system: str | None = None) -> tuple[str, int, int]:
        messages = []
        if system:
            messages.append({"role": "system", "content": system})
        messages.append({"role": "user", "content": prompt})
        data = self._post(
            "/chat/completions",
            {"model": self.selector_model, "messages": messages, "temperature": 0.0},
        )
        usage = data.get("usage", {})
        reply = data["choices"][0]["message"]["content"]
        return (
            reply,
            usage.get("prompt_tokens", estimate_tokens(prompt)),
            usage.get("completion_tokens", estimate_tokens(reply)),
        )
