"""Construction of the five prompt families and parsing of selection answers.

Templates are shipped as text files so golden tests can diff them directly.
All builders are pure: the same inputs always render the same bytes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from .assets import TEMPLATE_DIR
from .language import MismatchKind
from .search import ResponseCandidate

REPAIR_TEMPLATES = {
    "ungrounded-object": "repair_ungrounded.txt",
    "unknown-word": "repair_unknown_word.txt",
    "affordance-mismatch": "repair_affordance.txt",
}


@dataclass(frozen=True)
class TaskContext:
    """Everything a prompt needs about the current task and object."""

    task_name: str
    location: str  # e.g. "kitchen"
    object_phrase: str  # e.g. "mug in dish rack"
    focus_id: str | None = None  # instance id used to resolve grounding ambiguity

    def __post_init__(self) -> None:
        if not (self.task_name and self.location and self.object_phrase):
            raise ValueError("task context fields must be non-empty")

    def spoken_object_phrase(self) -> str:
        """Article-bearing form for dialogue: 'mug in dish rack' -> 'a mug in the dish rack'."""
        for rel in (" in ", " on "):
            if rel in self.object_phrase:
                noun, loc = self.object_phrase.split(rel, 1)
                return f"a {noun}{rel}the {loc}"
        return f"a {self.object_phrase}"


@lru_cache(maxsize=None)
def _template(name: str) -> str:
    text = (TEMPLATE_DIR / name).read_text(encoding="utf-8")
    # Template files end with a newline; rendered prompts must not.
    return text[:-1] if text.endswith("\n") else text


def build_goal_prompt(ctx: TaskContext) -> str:
    return _template("goal.txt").format(
        task_name=ctx.task_name, location=ctx.location, object_phrase=ctx.object_phrase
    )


def repair_reason(mismatch: MismatchKind) -> str:
    if mismatch.kind == "ungrounded-object":
        return f"Cannot see a {mismatch.noun}"
    if mismatch.kind == "unknown-word":
        return f"Unknown word {mismatch.word}"
    if mismatch.kind == "affordance-mismatch":
        return f"{(mismatch.object or '').capitalize()} is not {mismatch.violated}"
    raise ValueError(f"mismatch kind {mismatch.kind!r} is not repairable")


def build_repair_prompt(ctx: TaskContext, bad_response: str, mismatch: MismatchKind) -> str:
    template = REPAIR_TEMPLATES.get(mismatch.kind)
    if template is None:
        raise ValueError(f"mismatch kind {mismatch.kind!r} is not repairable")
    return _template(template).format(
        task_name=ctx.task_name,
        location=ctx.location,
        object_phrase=ctx.object_phrase,
        bad_response=bad_response,
        reason=repair_reason(mismatch),
    )


def _option_line(index: int, text: str) -> str:
    sentence = text[0].upper() + text[1:] if text else text
    return f"{index}. {sentence}."


def build_selection_prompt(
    ctx: TaskContext,
    candidates: list[ResponseCandidate],
    context_note: str | None = None,
) -> tuple[str | None, str]:
    """Render the numbered-choice prompt over candidates ordered lowest to
    highest mean probability.  Returns (system preamble, prompt)."""
    if len(candidates) < 2:
        raise ValueError("selection needs at least two candidates")
    ordered = sorted(candidates, key=ResponseCandidate.sort_key)
    options = "\n".join(_option_line(i + 1, c.text) for i, c in enumerate(ordered))
    prompt = _template("selection.txt").format(
        task_name=ctx.task_name,
        location=ctx.location,
        object_phrase=ctx.object_phrase,
        options=options,
    )
    return (context_note, prompt)


def parse_selection_answer(text: str, n: int) -> int | None:
    """First integer anywhere in the reply, if it is a valid 1-based index."""
    match = re.search(r"-?\d+", text)
    if match is None:
        return None
    value = int(match.group())
    if 1 <= value <= n:
        return value
    return None
