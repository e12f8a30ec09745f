"""Synthetic replay fixtures: one well-formed goal response per task object.

Useful for exercising the full toolchain offline: each object's goal prompt
is answered with its designed goal sentence at uniform high token
probability, so retrieval yields exactly one viable candidate and no
repairs are needed.
"""

from __future__ import annotations

import math

from .gateway import Completion, CompletionRequest, CompletionToken, Fixture, estimate_tokens
from .pipeline import ground_truth_sentence, task_context_for
from .prompts import build_goal_prompt
from .world import Scenario, WorldState


def sentence_tokens(sentence: str, probability: float) -> tuple[CompletionToken, ...]:
    """Word-level tokens: the first bare, the rest with a leading space."""
    words = sentence.split()
    logprob = math.log(probability)
    tokens = [CompletionToken(text=words[0], logprob=logprob)]
    tokens.extend(CompletionToken(text=f" {w}", logprob=logprob) for w in words[1:])
    return tuple(tokens)


def completion_for(prompt: str, sentence: str, probability: float = 0.97) -> Completion:
    return Completion(
        tokens=sentence_tokens(sentence, probability),
        prompt_token_count=estimate_tokens(prompt),
        completion_token_count=len(sentence.split()),
    )


def goal_sentence(scenario: Scenario, object_id: str) -> str:
    text = ground_truth_sentence(scenario, object_id)
    return "The" + text[len("the"):]


def make_fixture(
    scenario: Scenario,
    temperatures: tuple[float, ...] = (0.0, 0.5, 1.0),
    probability: float = 0.97,
) -> Fixture:
    """Fixture answering every object's goal prompt with its designed goal."""
    fixture = Fixture()
    world = WorldState.initial(scenario)
    for object_id in scenario.task_objects:
        ctx = task_context_for(scenario, world, object_id)
        prompt = build_goal_prompt(ctx)
        sentence = goal_sentence(scenario, object_id)
        for temperature in temperatures:
            request = CompletionRequest(prompt=prompt, temperature=temperature, purpose="initial")
            fixture.record_completion(request, completion_for(prompt, sentence, probability))
    return fixture
