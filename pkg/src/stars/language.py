"""Restricted goal grammar: parsing, grounding, affordance checks, analysis.

A goal sentence is an optional "the goal is that" prefix followed by one or
more clauses joined by "and".  A clause is either a placement ("<NP> is
in/on <NP>") or a predicate ("<NP> is <predicate>").  Analysis composes
interpretability, grounding, and affordance checks in that fixed order and
reports the first mismatch, mirroring what would go wrong if the agent
actually tried to use the sentence.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .world import GoalAssertion, Percept, WorldState, observable_objects

# Words the grammar itself consumes; always considered known.
STRUCTURE_WORDS = frozenset({"the", "a", "an", "goal", "is", "that", "and", "in", "on"})

ARTICLES = ("the", "a", "an")

GOAL_PREFIX = ("the", "goal", "is", "that")


@dataclass(frozen=True)
class Predicate:
    surface: str
    affordance: str
    door_state: str | None = None  # open/closed map to a door assertion


@dataclass(frozen=True)
class Lexicon:
    nouns: dict[str, str]  # surface form -> class name
    predicates: dict[str, Predicate]
    semanticless: frozenset[str]

    @property
    def vocabulary(self) -> frozenset[str]:
        words = set(STRUCTURE_WORDS) | set(self.semanticless) | set(self.predicates)
        for surface in self.nouns:
            words.update(surface.split())
        return frozenset(words)

    def noun_starting_at(self, tokens: list[str], start: int) -> str | None:
        """Longest noun surface form matching tokens[start:], or None."""
        best = None
        for surface in self.nouns:
            words = surface.split()
            if tokens[start : start + len(words)] == words:
                if best is None or len(words) > len(best.split()):
                    best = surface
        return best


def load_lexicon(path: str | Path) -> Lexicon:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    predicates = {}
    for surface, entry in data["predicates"].items():
        predicates[surface] = Predicate(
            surface=surface,
            affordance=entry["affordance"],
            door_state=entry.get("door_state"),
        )
    return Lexicon(
        nouns=dict(data["nouns"]),
        predicates=predicates,
        semanticless=frozenset(data["semanticless"]),
    )


# ---------------------------------------------------------------------------
# Parsing


@dataclass(frozen=True)
class Clause:
    """One parsed clause: a placement relation or a predicate application."""

    subject: str  # noun surface form
    relation: str | None = None  # "in" | "on" for placements
    target: str | None = None  # noun surface form for placements
    predicate: str | None = None

    def render(self) -> str:
        if self.predicate is not None:
            return f"the {self.subject} is {self.predicate}"
        return f"the {self.subject} is {self.relation} the {self.target}"


@dataclass(frozen=True)
class ParseOutcome:
    status: str  # "parsed" | "unknown-words" | "uninterpretable"
    clauses: tuple[Clause, ...] = ()
    unknown_words: tuple[str, ...] = ()


def normalize(text: str) -> str:
    """Lowercase, collapse whitespace, strip one trailing period.  Idempotent."""
    out = " ".join(text.lower().split())
    if out.endswith("."):
        out = out[:-1].rstrip()
    return out


def _tokenize(text: str) -> list[str]:
    return [t for t in re.split(r"[\s]+", normalize(text)) if t]


def _parse_np(tokens: list[str], pos: int, lex: Lexicon) -> tuple[str, int] | None:
    if pos < len(tokens) and tokens[pos] in ARTICLES:
        pos += 1
    noun = lex.noun_starting_at(tokens, pos)
    if noun is None:
        return None
    return noun, pos + len(noun.split())


def _parse_clause(tokens: list[str], pos: int, lex: Lexicon) -> tuple[Clause, int] | None:
    np = _parse_np(tokens, pos, lex)
    if np is None:
        return None
    subject, pos = np
    if pos >= len(tokens) or tokens[pos] != "is":
        return None
    pos += 1
    if pos >= len(tokens):
        return None
    word = tokens[pos]
    if word in ("in", "on"):
        target = _parse_np(tokens, pos + 1, lex)
        if target is not None:
            noun, end = target
            return Clause(subject=subject, relation=word, target=noun), end
    if word in lex.predicates:
        return Clause(subject=subject, predicate=word), pos + 1
    return None


def parse(text: str, lex: Lexicon) -> ParseOutcome:
    """Parse a goal sentence.  Failures are encoded in the outcome, never raised."""
    tokens = _tokenize(text)
    if not tokens:
        return ParseOutcome(status="uninterpretable")
    vocabulary = lex.vocabulary
    unknown = [t for t in tokens if t not in vocabulary]
    if unknown:
        seen: list[str] = []
        for word in unknown:
            if word not in seen:
                seen.append(word)
        return ParseOutcome(status="unknown-words", unknown_words=tuple(seen))
    if tuple(tokens[: len(GOAL_PREFIX)]) == GOAL_PREFIX:
        tokens = tokens[len(GOAL_PREFIX):]
    clauses: list[Clause] = []
    pos = 0
    while True:
        parsed = _parse_clause(tokens, pos, lex)
        if parsed is None:
            return ParseOutcome(status="uninterpretable")
        clause, pos = parsed
        clauses.append(clause)
        if pos == len(tokens):
            break
        if tokens[pos] != "and":
            return ParseOutcome(status="uninterpretable")
        pos += 1
    return ParseOutcome(status="parsed", clauses=tuple(clauses))


def render_clauses(clauses: tuple[Clause, ...] | list[Clause]) -> str:
    return "the goal is that " + " and ".join(c.render() for c in clauses)


# ---------------------------------------------------------------------------
# Grounding and affordances


@dataclass(frozen=True)
class MismatchKind:
    """Classification of why a candidate cannot be used, with stable detail strings."""

    kind: str  # "unknown-word" | "ungrounded-object" | "uninterpretable" | "affordance-mismatch"
    word: str | None = None
    noun: str | None = None
    object: str | None = None  # head word of the offending noun phrase
    violated: str | None = None  # property name for affordance mismatches

    def render(self) -> str:
        if self.kind == "unknown-word":
            return f"unknown word {self.word}"
        if self.kind == "ungrounded-object":
            return f"ungrounded object {self.noun}"
        if self.kind == "affordance-mismatch":
            return f"{self.object} is not {self.violated}"
        return "uninterpretable"


REPAIRABLE_KINDS = frozenset({"unknown-word", "ungrounded-object", "affordance-mismatch"})


@dataclass(frozen=True)
class GroundedClause:
    clause: Clause
    subject_id: str
    target_id: str | None = None


def _head(noun: str) -> str:
    return noun.split()[-1]


def ground(
    clauses: tuple[Clause, ...] | list[Clause],
    percepts: list[Percept],
    lex: Lexicon,
    focus_id: str | None = None,
) -> list[GroundedClause] | MismatchKind:
    """Resolve each noun phrase to a perceived instance; first failure wins.

    Ambiguity between same-class instances prefers the task-context object,
    then the lowest instance id.
    """
    by_class: dict[str, list[str]] = {}
    for percept in percepts:
        by_class.setdefault(percept.class_name, []).append(percept.id)

    def resolve(noun: str) -> str | None:
        class_name = lex.nouns[noun]
        matches = by_class.get(class_name, [])
        if not matches:
            return None
        if focus_id is not None and focus_id in matches:
            return focus_id
        return sorted(matches)[0]

    grounded: list[GroundedClause] = []
    for clause in clauses:
        subject_id = resolve(clause.subject)
        if subject_id is None:
            return MismatchKind(kind="ungrounded-object", noun=clause.subject)
        target_id = None
        if clause.target is not None:
            target_id = resolve(clause.target)
            if target_id is None:
                return MismatchKind(kind="ungrounded-object", noun=clause.target)
        grounded.append(GroundedClause(clause=clause, subject_id=subject_id, target_id=target_id))
    return grounded


def check_affordances(
    grounded: list[GroundedClause],
    world: WorldState,
    lex: Lexicon,
) -> MismatchKind | None:
    """Verify each clause is achievable given object properties; first failure wins."""
    scenario = world.scenario
    for item in grounded:
        clause = item.clause
        if clause.relation is not None:
            if not scenario.class_of(item.subject_id).has("grabbable"):
                return MismatchKind(
                    kind="affordance-mismatch", object=_head(clause.subject), violated="grabbable"
                )
            needed = "receptacle" if clause.relation == "in" else "surface"
            assert item.target_id is not None
            if not scenario.class_of(item.target_id).has(needed):
                return MismatchKind(
                    kind="affordance-mismatch", object=_head(clause.target or ""), violated=needed
                )
        else:
            assert clause.predicate is not None
            predicate = lex.predicates[clause.predicate]
            if not scenario.class_of(item.subject_id).has(predicate.affordance):
                return MismatchKind(
                    kind="affordance-mismatch",
                    object=_head(clause.subject),
                    violated=predicate.affordance,
                )
    return None


# ---------------------------------------------------------------------------
# Analysis


@dataclass(frozen=True)
class AnalysisReport:
    text: str
    viable: bool
    assertions: tuple[GoalAssertion, ...] = ()
    mismatch: MismatchKind | None = None

    @property
    def mismatch_kind(self) -> str | None:
        return self.mismatch.kind if self.mismatch else None


def _assertions_for(grounded: list[GroundedClause], lex: Lexicon) -> tuple[GoalAssertion, ...]:
    assertions = []
    for item in grounded:
        clause = item.clause
        if clause.relation is not None:
            assertions.append(
                GoalAssertion(subject=item.subject_id, kind=clause.relation, target=item.target_id)
            )
        else:
            predicate = lex.predicates[clause.predicate or ""]
            if predicate.door_state is None:
                # Only door predicates map to a world assertion; no shipped
                # scenario grants the affordance that would lead here.
                raise ValueError(f"predicate {clause.predicate!r} has no executable assertion")
            assertions.append(
                GoalAssertion(subject=item.subject_id, kind="door", door_state=predicate.door_state)
            )
    return tuple(assertions)


def analyze(
    text: str,
    world: WorldState,
    lex: Lexicon,
    focus_id: str | None = None,
) -> AnalysisReport:
    """Classify one candidate: parse, then ground, then check affordances."""
    canonical = normalize(text)
    outcome = parse(canonical, lex)
    if outcome.status == "unknown-words":
        mismatch = MismatchKind(kind="unknown-word", word=outcome.unknown_words[0])
        return AnalysisReport(text=canonical, viable=False, mismatch=mismatch)
    if outcome.status == "uninterpretable":
        return AnalysisReport(
            text=canonical, viable=False, mismatch=MismatchKind(kind="uninterpretable")
        )
    grounded = ground(outcome.clauses, observable_objects(world), lex, focus_id=focus_id)
    if isinstance(grounded, MismatchKind):
        return AnalysisReport(text=canonical, viable=False, mismatch=grounded)
    mismatch = check_affordances(grounded, world, lex)
    if mismatch is not None:
        return AnalysisReport(text=canonical, viable=False, mismatch=mismatch)
    return AnalysisReport(text=canonical, viable=True, assertions=_assertions_for(grounded, lex))
