"""Goal elicitation per condition: retrieval, analyze-and-repair, selection, oversight.

A Condition names which stages run.  Retrieval produces candidates (either
the temperature-sweep baseline or the recursive token-tree search), the
analyze-and-repair loop vets and re-prompts them, selection picks what to
use or propose, and the oversight protocol asks the user to confirm up to
five proposals before falling back to a free-text goal description.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .gateway import CompletionRequest, Gateway, GatewayError
from .language import REPAIRABLE_KINDS, AnalysisReport, Lexicon, analyze, normalize
from .prompts import (
    TaskContext,
    build_goal_prompt,
    build_repair_prompt,
    build_selection_prompt,
    parse_selection_answer,
)
from .search import (
    GOAL_MAX_TOKENS,
    GOAL_STOP_SEQUENCES,
    Lineage,
    ResponseCandidate,
    SearchConfig,
    SearchStats,
    search,
)
from .world import GoalAssertion, Scenario, WorldState, observable_objects

MAX_PROPOSALS = 5
MAX_DESCRIBE_ATTEMPTS = 5

DEFAULT_TBP_TEMPERATURES = (0.0, 0.5, 1.0)


@dataclass(frozen=True)
class Condition:
    name: str
    retrieval: str  # "tbp" | "search-tree"
    analysis_repair: bool
    selection: str  # "mean-logprob" | "llm"
    oversight: bool
    context_note: str | None = None


_CONDITION_TABLE = {
    "tbp": ("tbp", False, "mean-logprob", False),
    "tbp+o": ("tbp", False, "mean-logprob", True),
    "st": ("search-tree", False, "mean-logprob", False),
    "sts": ("search-tree", False, "llm", False),
    "star": ("search-tree", True, "mean-logprob", False),
    "stars": ("search-tree", True, "llm", False),
    "stars+o": ("search-tree", True, "llm", True),
    "stars*": ("search-tree", True, "llm", False),
}

CONDITION_NAMES = tuple(_CONDITION_TABLE)


def condition(name: str, context_note: str | None = None) -> Condition:
    key = name.lower()
    if key not in _CONDITION_TABLE:
        raise ValueError(f"unknown condition {name!r}; expected one of {CONDITION_NAMES}")
    retrieval, ar, selection, oversight = _CONDITION_TABLE[key]
    return Condition(key, retrieval, ar, selection, oversight, context_note)


@dataclass
class RetrievedRecord:
    object_id: str
    candidate: ResponseCandidate
    report: AnalysisReport | None = None
    duplicate: bool = False


@dataclass
class ElicitationTrace:
    object_id: str
    retrieved: list[RetrievedRecord] = field(default_factory=list)
    proposed: list[str] = field(default_factory=list)
    sourced_text: str | None = None
    sourced_from_llm: bool = False
    user_goal_text: str | None = None
    repair_searches: int = 0
    failure: str | None = None

    def validate(self) -> None:
        assert len(self.retrieved) >= 0
        for record in self.retrieved:
            assert record.candidate.lineage.repair_round <= 2, "repair chain exceeded two rounds"


@dataclass
class ElicitationOutcome:
    assertions: tuple[GoalAssertion, ...] | None
    trace: ElicitationTrace


class InteractionLog:
    """Counts user turns: every turn is one instruction; words are whitespace tokens."""

    def __init__(self) -> None:
        self.instructions = 0
        self.yes_no = 0
        self.words = 0
        self.turns: list[str] = []

    def record(self, text: str, yes_no: bool = False) -> None:
        self.instructions += 1
        if yes_no:
            self.yes_no += 1
        self.words += len(text.split())
        self.turns.append(text)


def answered_yes(text: str) -> bool:
    return normalize(text).startswith("yes")


@dataclass(frozen=True)
class OversightQuestion:
    kind: str  # "confirm" | "describe"
    text: str
    goal_text: str | None = None


class UserModel:
    """Answers oversight questions.  Returned strings are raw user turns."""

    def confirm(self, question: OversightQuestion) -> str:
        raise NotImplementedError

    def describe(self, question: OversightQuestion) -> str:
        raise NotImplementedError

    def answer(self, question: OversightQuestion) -> str:
        if question.kind == "confirm":
            return self.confirm(question)
        return self.describe(question)


def ground_truth_sentence(scenario: Scenario, object_id: str) -> str:
    """Canonical goal description for an object's designed outcome."""
    goal = scenario.object_goals[object_id][0]
    subject = scenario.instances[object_id].class_name
    target = scenario.instances[goal.target or ""].class_name
    text = f"the goal is that the {subject} is {goal.kind} the {target}"
    if goal.target in scenario.door_goals:
        text += f" and the {target} is {scenario.door_goals[goal.target]}"
    return text


def achieves_ground_truth(
    assertions: tuple[GoalAssertion, ...], scenario: Scenario, object_id: str
) -> bool:
    """True when the assertions are within the designed outcome for the object:
    at least one placement of the object matching a ground-truth destination,
    and nothing outside the allowed placement/door set."""
    allowed = set(scenario.object_goals.get(object_id, ()))
    doors = {
        GoalAssertion(subject=fid, kind="door", door_state=state)
        for fid, state in scenario.door_goals.items()
    }
    placements = [a for a in assertions if a.kind in ("in", "on") and a.subject == object_id]
    if not placements:
        return False
    if not any(a in allowed for a in placements):
        return False
    return all(a in allowed or a in doors for a in assertions)


class OracleUser(UserModel):
    """Scripted user answering from the scenario's ground truth."""

    def __init__(self, scenario: Scenario, world: WorldState, lexicon: Lexicon) -> None:
        self.scenario = scenario
        self.world = world
        self.lexicon = lexicon
        self.current_object: str | None = None

    def confirm(self, question: OversightQuestion) -> str:
        assert question.goal_text is not None and self.current_object is not None
        report = analyze(question.goal_text, self.world, self.lexicon, focus_id=self.current_object)
        if report.viable and achieves_ground_truth(
            report.assertions, self.scenario, self.current_object
        ):
            return "Yes."
        return "No."

    def describe(self, question: OversightQuestion) -> str:
        assert self.current_object is not None
        return ground_truth_sentence(self.scenario, self.current_object)


class RejectAllUser(UserModel):
    """Rejects every proposal, then supplies the designed goal when asked."""

    def __init__(self, scenario: Scenario) -> None:
        self.scenario = scenario
        self.current_object: str | None = None

    def confirm(self, question: OversightQuestion) -> str:
        return "No."

    def describe(self, question: OversightQuestion) -> str:
        assert self.current_object is not None
        return ground_truth_sentence(self.scenario, self.current_object)


class InteractiveUser(UserModel):
    """Terminal prompt/response user."""

    def confirm(self, question: OversightQuestion) -> str:
        return input(f"{question.text} (yes/no) ")

    def describe(self, question: OversightQuestion) -> str:
        return input(f"{question.text} ")


def task_context_for(scenario: Scenario, world: WorldState, object_id: str) -> TaskContext:
    percept = next(p for p in observable_objects(world) if p.id == object_id)
    return TaskContext(
        task_name=scenario.task_name,
        location=scenario.location,
        object_phrase=percept.phrase,
        focus_id=object_id,
    )


class OversightSession:
    """Live proposal/answer state machine between the pipeline and the human.

    At most MAX_PROPOSALS confirm questions are asked; afterwards (or when
    candidates run out) exactly one goal-description request is issued.
    Rejected texts are never proposed again.
    """

    def __init__(self, spoken_phrase: str, proposer, analyzer, trace: ElicitationTrace) -> None:
        self._spoken = spoken_phrase
        self._proposer = proposer  # callable(rejected: set[str]) -> ResponseCandidate | None
        self._analyzer = analyzer  # callable(text: str) -> AnalysisReport
        self._trace = trace
        self.rejected: set[str] = set()
        self.proposals_made: list[str] = []
        self.describe_attempts = 0
        self.question: OversightQuestion | None = None
        self.finished = False
        self.result: ElicitationOutcome | None = None
        self._current: ResponseCandidate | None = None
        self._advance()

    def _strip_prefix(self, text: str) -> str:
        prefix = "the goal is that "
        return text[len(prefix):] if text.startswith(prefix) else text

    def _advance(self) -> None:
        if len(self.proposals_made) < MAX_PROPOSALS:
            candidate = self._proposer(self.rejected)
            if candidate is not None:
                self._current = candidate
                self.proposals_made.append(candidate.text)
                self._trace.proposed.append(candidate.text)
                self.question = OversightQuestion(
                    kind="confirm",
                    text=(
                        f"For {self._spoken} is the goal that "
                        f"{self._strip_prefix(candidate.text)}?"
                    ),
                    goal_text=candidate.text,
                )
                return
        self._current = None
        self.question = OversightQuestion(
            kind="describe",
            text=f"Please describe the goal for {self._spoken}.",
        )

    def _finalize(self, assertions, text: str, from_llm: bool) -> None:
        self._trace.sourced_text = text
        self._trace.sourced_from_llm = from_llm
        if not from_llm:
            self._trace.user_goal_text = text
        self.finished = True
        self.result = ElicitationOutcome(assertions=assertions, trace=self._trace)

    def step(self, answer: str) -> None:
        """Consume one user answer; updates question or finishes the session."""
        if self.finished or self.question is None:
            raise RuntimeError("oversight session is not waiting for an answer")
        if self.question.kind == "confirm":
            assert self._current is not None
            if answered_yes(answer):
                report = self._analyzer(self._current.text)
                if report.viable:
                    self._finalize(report.assertions, self._current.text, from_llm=True)
                else:
                    self._trace.failure = "confirmed response is not viable"
                    self.finished = True
                    self.result = ElicitationOutcome(assertions=None, trace=self._trace)
                return
            self.rejected.add(self._current.text)
            self._advance()
            return
        # Free-text goal description.
        report = self._analyzer(answer)
        if report.viable:
            self._finalize(report.assertions, report.text, from_llm=False)
            return
        self.describe_attempts += 1
        if self.describe_attempts >= MAX_DESCRIBE_ATTEMPTS:
            self._trace.failure = "no viable goal description provided"
            self.finished = True
            self.result = ElicitationOutcome(assertions=None, trace=self._trace)
            return
        self.question = OversightQuestion(
            kind="describe",
            text=f"That goal cannot be used. Please describe the goal for {self._spoken}.",
        )


class Pipeline:
    """Bundles the provider gateway, lexicon, and search settings for one run."""

    def __init__(
        self,
        gateway: Gateway,
        lexicon: Lexicon,
        search_config: SearchConfig | None = None,
        tbp_temperatures: tuple[float, ...] = DEFAULT_TBP_TEMPERATURES,
        observer=None,
    ) -> None:
        self.gateway = gateway
        self.lexicon = lexicon
        self.search_config = search_config or SearchConfig()
        self.tbp_temperatures = tbp_temperatures
        self.observer = observer
        self.stats = SearchStats()

    # -- retrieval ---------------------------------------------------------

    def retrieve_tbp(self, ctx: TaskContext) -> list[ResponseCandidate]:
        """One completion per temperature, deduplicated by normalized text."""
        prompt = build_goal_prompt(ctx)
        found: dict[str, ResponseCandidate] = {}
        for temperature in self.tbp_temperatures:
            try:
                completion = self.gateway.complete(
                    CompletionRequest(
                        prompt=prompt,
                        temperature=temperature,
                        max_tokens=GOAL_MAX_TOKENS,
                        stop=GOAL_STOP_SEQUENCES,
                        alternatives_per_token=self.search_config.alternatives_per_token,
                        purpose="initial",
                    )
                )
            except GatewayError:
                continue
            if not completion.tokens:
                continue
            text = normalize(completion.full_text)
            if text and text not in found:
                probs = [t.prob for t in completion.tokens]
                found[text] = ResponseCandidate(
                    text=text,
                    mean_probability=sum(probs) / len(probs),
                    token_count=len(probs),
                    depth_of_origin=1,
                )
        return sorted(found.values(), key=ResponseCandidate.sort_key)

    def retrieve_tree(self, ctx: TaskContext) -> list[ResponseCandidate]:
        return search(
            build_goal_prompt(ctx),
            self.gateway,
            self.search_config,
            root_purpose="initial",
            recurse_purpose="recursive",
            stats=self.stats,
        )

    # -- analysis and repair -------------------------------------------------

    def _analyze(self, text: str, world: WorldState, ctx: TaskContext) -> AnalysisReport:
        return analyze(text, world, self.lexicon, focus_id=ctx.focus_id)

    def analyze_and_repair(
        self,
        candidates: list[ResponseCandidate],
        world: WorldState,
        ctx: TaskContext,
        trace: ElicitationTrace,
    ) -> list[ResponseCandidate]:
        """Analyze every candidate; re-prompt repairable mismatches (at most
        twice per lineage), merging new responses into the pool.  Returns the
        viable candidates."""
        pool: dict[str, tuple[ResponseCandidate, AnalysisReport]] = {}

        def admit(candidate: ResponseCandidate) -> bool:
            duplicate = candidate.text in pool
            if duplicate:
                report = pool[candidate.text][1]
            else:
                report = self._analyze(candidate.text, world, ctx)
                pool[candidate.text] = (candidate, report)
            trace.retrieved.append(
                RetrievedRecord(trace.object_id, candidate, report, duplicate=duplicate)
            )
            return not duplicate

        worklist = [c for c in candidates if admit(c)]
        while worklist:
            next_work: list[ResponseCandidate] = []
            aborted = False
            for candidate in sorted(worklist, key=ResponseCandidate.sort_key):
                report = pool[candidate.text][1]
                if report.viable or report.mismatch is None:
                    continue
                if report.mismatch.kind not in REPAIRABLE_KINDS:
                    continue  # uninterpretable responses are discarded, not repaired
                if candidate.lineage.repair_round >= 2:
                    continue  # never repair the same lineage a third time
                prompt = build_repair_prompt(ctx, candidate.text, report.mismatch)
                lineage = Lineage(
                    kind="repair",
                    parent_text=candidate.text,
                    mismatch=report.mismatch.kind,
                    repair_round=candidate.lineage.repair_round + 1,
                )
                try:
                    produced = search(
                        prompt,
                        self.gateway,
                        self.search_config,
                        root_purpose="repair",
                        recurse_purpose="repair-recurse",
                        lineage=lineage,
                        stats=self.stats,
                    )
                except GatewayError as exc:
                    trace.failure = f"repair aborted: {exc}"
                    aborted = True
                    break
                trace.repair_searches += 1
                for new_candidate in produced:
                    if admit(new_candidate):
                        next_work.append(new_candidate)
            if aborted:
                break
            worklist = next_work
        return [c for c, report in pool.values() if report.viable]

    # -- selection -----------------------------------------------------------

    def next_choice(
        self,
        ctx: TaskContext,
        cond: Condition,
        candidates: list[ResponseCandidate],
        exclusions: set[str],
    ) -> ResponseCandidate | None:
        """Next candidate to use or propose, honoring the condition's mode.

        llm mode sends the ascending numbered list and follows the integer
        reply (falling back to the mean-probability argmax on a parse
        failure); a single remaining candidate never costs a provider call.
        mean-logprob mode proposes by descending mean probability.
        """
        remaining = sorted(
            (c for c in candidates if c.text not in exclusions), key=ResponseCandidate.sort_key
        )
        if not remaining:
            return None
        if len(remaining) == 1:
            return remaining[0]
        if cond.selection == "llm":
            system, prompt = build_selection_prompt(ctx, remaining, cond.context_note)
            reply = self.gateway.select(prompt, system)
            index = parse_selection_answer(reply, len(remaining))
            if index is None:
                return remaining[-1]
            return remaining[index - 1]
        return remaining[-1]

    # -- end-to-end elicitation ----------------------------------------------

    def elicit(
        self,
        ctx: TaskContext,
        world: WorldState,
        cond: Condition,
        user: UserModel | None,
        log: InteractionLog | None = None,
    ) -> ElicitationOutcome:
        assert ctx.focus_id is not None
        trace = ElicitationTrace(object_id=ctx.focus_id)
        if cond.retrieval == "tbp":
            candidates = self.retrieve_tbp(ctx)
        else:
            candidates = self.retrieve_tree(ctx)

        if cond.analysis_repair:
            choice_pool = self.analyze_and_repair(candidates, world, ctx, trace)
        else:
            for candidate in candidates:
                trace.retrieved.append(RetrievedRecord(trace.object_id, candidate))
            choice_pool = candidates

        if cond.oversight:
            if user is None:
                raise ValueError("oversight condition needs a user model")
            return self._elicit_with_oversight(ctx, world, cond, choice_pool, trace, user, log)

        choice = self.next_choice(ctx, cond, choice_pool, set())
        if choice is None:
            trace.failure = "no viable candidate" if cond.analysis_repair else "no candidates"
            return ElicitationOutcome(assertions=None, trace=trace)
        report = self._analyze(choice.text, world, ctx)
        if not report.viable:
            trace.failure = f"selected response not viable ({report.mismatch.render()})"
            return ElicitationOutcome(assertions=None, trace=trace)
        trace.sourced_text = choice.text
        trace.sourced_from_llm = True
        return ElicitationOutcome(assertions=report.assertions, trace=trace)

    def _elicit_with_oversight(
        self,
        ctx: TaskContext,
        world: WorldState,
        cond: Condition,
        choice_pool: list[ResponseCandidate],
        trace: ElicitationTrace,
        user: UserModel,
        log: InteractionLog | None,
    ) -> ElicitationOutcome:
        session = OversightSession(
            spoken_phrase=ctx.spoken_object_phrase(),
            proposer=lambda rejected: self.next_choice(ctx, cond, choice_pool, rejected),
            analyzer=lambda text: self._analyze(text, world, ctx),
            trace=trace,
        )
        while not session.finished:
            question = session.question
            assert question is not None
            if self.observer is not None:
                self.observer.on_question(question, trace)
            answer = user.answer(question)
            if log is not None:
                log.record(answer, yes_no=question.kind == "confirm")
            session.step(answer)
        if self.observer is not None:
            self.observer.on_question(None, trace)
        assert session.result is not None
        return session.result
