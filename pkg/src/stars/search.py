"""Threshold-driven recursive expansion of a completion into a breadth of responses.

Starting from the temperature-0 completion, every token whose probability
falls below the expand threshold is branched on: each sufficiently probable
alternative either terminates the sentence (it contains a period, so the
prefix is harvested as a finished response) or seeds a re-prompt whose
completion is expanded recursively.  Deeper recursion is additionally gated
on the running mean probability of the prefix, and everything stops at a
fixed depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .gateway import Completion, CompletionRequest, Gateway

# Completions end at the start of the next prompt-template section.
GOAL_STOP_SEQUENCES = ("(END RESULT)", "\n")
GOAL_MAX_TOKENS = 64


class SearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    expand_threshold: float = 0.90
    alt_threshold: float = 0.05
    max_depth: int = 3
    prefix_mean_threshold: float = 0.85
    alternatives_per_token: int = 5
    max_completions: int | None = None  # optional hard cap on provider calls

    def __post_init__(self) -> None:
        if not (0 < self.alt_threshold < self.expand_threshold <= 1):
            raise ValueError("need 0 < alt_threshold < expand_threshold <= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


@dataclass(frozen=True)
class Lineage:
    kind: str = "initial"  # "initial" | "repair"
    parent_text: str | None = None
    mismatch: str | None = None
    repair_round: int = 0


@dataclass(frozen=True)
class ResponseCandidate:
    text: str  # normalized
    mean_probability: float
    token_count: int
    depth_of_origin: int
    lineage: Lineage = field(default_factory=Lineage)

    def sort_key(self) -> tuple[float, str]:
        return (self.mean_probability, self.text)


def normalize(text: str) -> str:
    """Lowercase, collapse whitespace, strip one trailing period.  Idempotent."""
    out = " ".join(text.lower().split())
    if out.endswith("."):
        out = out[:-1].rstrip()
    return out


def mean_probability(logprobs: Sequence[float]) -> float:
    """Average token probability over a generation path."""
    if not logprobs:
        raise ValueError("mean_probability needs at least one token")
    return sum(math.exp(lp) for lp in logprobs) / len(logprobs)


@dataclass
class SearchStats:
    completions_requested: int = 0
    cap_hit: bool = False


def search(
    prompt: str,
    gateway: Gateway,
    cfg: SearchConfig | None = None,
    root_purpose: str = "initial",
    recurse_purpose: str = "recursive",
    lineage: Lineage | None = None,
    stats: SearchStats | None = None,
) -> list[ResponseCandidate]:
    """Expand one prompt into a deduplicated candidate list, sorted by
    ascending mean probability (ties by text)."""
    cfg = cfg or SearchConfig()
    lineage = lineage or Lineage()
    stats = stats if stats is not None else SearchStats()
    found: dict[str, ResponseCandidate] = {}

    def request(text: str, purpose: str) -> Completion | None:
        if cfg.max_completions is not None and stats.completions_requested >= cfg.max_completions:
            stats.cap_hit = True
            return None
        stats.completions_requested += 1
        return gateway.complete(
            CompletionRequest(
                prompt=text,
                temperature=0.0,
                max_tokens=GOAL_MAX_TOKENS,
                stop=GOAL_STOP_SEQUENCES,
                alternatives_per_token=cfg.alternatives_per_token,
                purpose=purpose,
            )
        )

    def harvest(path: list[tuple[str, float]], depth: int) -> None:
        if not path:
            return
        text = normalize("".join(t for t, _ in path))
        if not text or text in found:
            return
        found[text] = ResponseCandidate(
            text=text,
            mean_probability=sum(p for _, p in path) / len(path),
            token_count=len(path),
            depth_of_origin=depth,
            lineage=lineage,
        )

    def prefix_mean(path: list[tuple[str, float]]) -> float:
        return sum(p for _, p in path) / len(path)

    def expand(prefix: list[tuple[str, float]], completion: Completion, depth: int) -> None:
        tokens = completion.tokens
        full = prefix + [(t.text, t.prob) for t in tokens]
        harvest(full, depth)
        for i, token in enumerate(tokens):
            if token.prob >= cfg.expand_threshold:
                continue
            for alt in token.alternatives:
                if alt.prob <= cfg.alt_threshold:
                    continue
                branch = prefix + [(t.text, t.prob) for t in tokens[:i]]
                if "." in alt.text:
                    # The alternative ends the sentence: keep text up to the
                    # period and record the finished response.
                    cut = alt.text[: alt.text.index(".") + 1]
                    harvest(branch + [(cut, alt.prob)], depth)
                    continue
                branch.append((alt.text, alt.prob))
                if depth >= cfg.max_depth:
                    continue
                if depth >= 2 and prefix_mean(branch) < cfg.prefix_mean_threshold:
                    continue
                sub = request(prompt + "".join(t for t, _ in branch), recurse_purpose)
                if sub is None:
                    continue
                expand(branch, sub, depth + 1)

    root = request(prompt, root_purpose)
    if root is None or not root.tokens:
        return []
    expand([], root, 1)
    return sorted(found.values(), key=ResponseCandidate.sort_key)
