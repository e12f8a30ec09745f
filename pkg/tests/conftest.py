from __future__ import annotations

import hashlib
import math
import random

import pytest

from stars.assets import fixture_path, lexicon_path, scenario_path
from stars.gateway import (
    Completion,
    CompletionRequest,
    CompletionToken,
    Fixture,
    Gateway,
    ScriptedProvider,
    TokenAlternative,
)
from stars.language import load_lexicon
from stars.world import WorldState, load_scenario


@pytest.fixture(scope="session")
def kitchen():
    return load_scenario(scenario_path("kitchen"))


@pytest.fixture(scope="session")
def groceries():
    return load_scenario(scenario_path("groceries"))


@pytest.fixture(scope="session")
def office():
    return load_scenario(scenario_path("office"))


@pytest.fixture(scope="session")
def mini():
    return load_scenario(scenario_path("mini"))


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon(lexicon_path())


@pytest.fixture(scope="session")
def kitchen_world(kitchen):
    return WorldState.initial(kitchen)


@pytest.fixture(scope="session")
def mini_world(mini):
    return WorldState.initial(mini)


@pytest.fixture
def walkthrough_provider():
    return ScriptedProvider(Fixture.load(fixture_path("walkthrough")))


@pytest.fixture
def mini_provider():
    return ScriptedProvider(Fixture.load(fixture_path("mini")))


@pytest.fixture
def kitchen_provider():
    return ScriptedProvider(Fixture.load(fixture_path("kitchen")))


@pytest.fixture
def walkthrough_gateway(walkthrough_provider):
    return Gateway(walkthrough_provider, selector=walkthrough_provider)


# ---------------------------------------------------------------------------
# Procedurally generated completion trees for property tests


_VOCAB = ["mug", "cup", "bowl", "sink", "rack", "shelf", "box", "jar", "lid", "tray"]


class ProceduralProvider:
    """Deterministic pseudo-random completions keyed by (seed, prompt).

    Every prompt gets an answer, so recursive expansion always finds a
    continuation; trees stay finite because the search depth is capped.
    """

    def __init__(self, seed: int, max_tokens: int = 5) -> None:
        self.seed = seed
        self.max_tokens = max_tokens
        self.calls = 0

    def _rng(self, prompt: str) -> random.Random:
        digest = hashlib.sha256(f"{self.seed}|{prompt}".encode("utf-8")).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))

    def complete(self, request: CompletionRequest) -> Completion:
        self.calls += 1
        rnd = self._rng(request.prompt)
        count = rnd.randint(0, self.max_tokens)
        tokens = []
        for _ in range(count):
            word = rnd.choice(_VOCAB)
            if rnd.random() < 0.55:
                prob = rnd.uniform(0.91, 0.999)
            else:
                prob = rnd.uniform(0.15, 0.89)
            alternatives = []
            remaining = min(1.0 - prob, 0.8)
            for _ in range(rnd.randint(0, 3)):
                alt_prob = rnd.uniform(0.001, max(remaining, 0.002))
                remaining = max(remaining - alt_prob, 0.001)
                alt_word = rnd.choice(_VOCAB)
                if rnd.random() < 0.25:
                    alt_word += "."
                alternatives.append((f" {alt_word}", alt_prob))
            alternatives.sort(key=lambda kv: -kv[1])
            tokens.append(
                CompletionToken(
                    text=f" {word}",
                    logprob=math.log(prob),
                    alternatives=tuple(
                        TokenAlternative(t, math.log(p)) for t, p in alternatives
                    ),
                )
            )
        return Completion(
            tokens=tuple(tokens),
            prompt_token_count=len(request.prompt.split()),
            completion_token_count=len(tokens),
        )


@pytest.fixture
def procedural_provider_factory():
    return ProceduralProvider


# ---------------------------------------------------------------------------
# Independent audit of the expansion rules (shared by the property suites)


def enumerate_expected_search(provider, prompt, cfg):
    """Breadth-first re-implementation of the expansion rules, independent of
    the production search.  Returns (requested prompts, text -> set of means)."""
    from stars.search import normalize

    requested: set[str] = set()
    means: dict[str, set[float]] = {}

    def note(path):
        if not path:
            return
        text = normalize("".join(t for t, _ in path))
        if not text:
            return
        means.setdefault(text, set()).add(sum(p for _, p in path) / len(path))

    work = [([], prompt, 1)]
    while work:
        prefix, full_prompt, depth = work.pop(0)
        requested.add(full_prompt)
        completion = provider.complete(CompletionRequest(prompt=full_prompt))
        tokens = [(t.text, t.prob, t.alternatives) for t in completion.tokens]
        if depth == 1 and not tokens:
            return requested, {}
        note(prefix + [(t, p) for t, p, _ in tokens])
        for i, (_, prob, alternatives) in enumerate(tokens):
            if prob >= cfg.expand_threshold:
                continue
            for alt in alternatives:
                if alt.prob <= cfg.alt_threshold:
                    continue
                branch = prefix + [(t, p) for t, p, _ in tokens[:i]]
                if "." in alt.text:
                    note(branch + [(alt.text[: alt.text.index(".") + 1], alt.prob)])
                    continue
                branch = branch + [(alt.text, alt.prob)]
                if depth >= cfg.max_depth:
                    continue
                if depth >= 2:
                    mean = sum(p for _, p in branch) / len(branch)
                    if mean < cfg.prefix_mean_threshold:
                        continue
                work.append((branch, prompt + "".join(t for t, _ in branch), depth + 1))
    return requested, means


class SpyGateway(Gateway):
    """Gateway that records every prompt it was asked to complete."""

    def __init__(self, provider):
        super().__init__(provider)
        self.prompts: set[str] = set()

    def complete(self, request):
        self.prompts.add(request.prompt)
        return super().complete(request)
