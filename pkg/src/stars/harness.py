"""Experiment runner: (scenario x condition) runs, metrics, and report files.

A run executes the full task loop over every object, sweeps leftover door
states, and collects one report: completion rate, retrieval/proposal/sourcing
counts, per-purpose token usage (identical to the gateway ledger), user
instruction and word counts, and a category record per retrieved response.
Reports are deterministic for scripted providers and users; wall-clock time
is kept out of the report payload so identical replays serialize identically.
"""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass
from pathlib import Path

from .assets import lexicon_path
from .gateway import Gateway, UsageLedger
from .language import AnalysisReport, Lexicon, analyze, load_lexicon
from .pipeline import (
    Condition,
    ElicitationTrace,
    InteractionLog,
    InteractiveUser,
    OracleUser,
    Pipeline,
    RejectAllUser,
    UserModel,
    achieves_ground_truth,
    task_context_for,
)
from .planner import PolicyStore, execute_plan, execute_task, plan
from .search import ResponseCandidate, SearchConfig
from .world import (
    GoalAssertion,
    Scenario,
    WorldState,
    completion_rate,
    observable_objects,
)

NOT_VIABLE_SUBKINDS = {
    "unknown-word": "unknown-word",
    "ungrounded-object": "ungrounded",
    "uninterpretable": "uninterpretable",
    "affordance-mismatch": "affordance",
}


class ReportInvariantError(AssertionError):
    pass


@dataclass
class CategoryRecord:
    object_id: str
    text: str
    category: str
    subcategory: str | None = None
    duplicate: bool = False

    def to_dict(self) -> dict:
        return {
            "object": self.object_id,
            "text": self.text,
            "category": self.category,
            "subcategory": self.subcategory,
            "duplicate": self.duplicate,
        }


def categorize_response(
    candidate: ResponseCandidate,
    report: AnalysisReport,
    scenario: Scenario,
    object_id: str,
) -> tuple[str, str | None]:
    """Category of one retrieved response for the given task object."""
    if not report.viable:
        assert report.mismatch is not None
        return ("not-viable", NOT_VIABLE_SUBKINDS[report.mismatch.kind])
    if achieves_ground_truth(report.assertions, scenario, object_id):
        return ("situationally-relevant", None)
    placements = [
        a for a in report.assertions if a.kind in ("in", "on") and a.subject == object_id
    ]
    for alternative in scenario.reasonable_alternatives.get(object_id, ()):
        if any(a.target == alternative.destination for a in placements):
            return ("reasonable", alternative.subcategory)
    return ("viable-not-reasonable", None)


@dataclass
class RunReport:
    label: str
    condition: str
    scenario: str
    seed: int
    trial: int
    oversight: bool
    completion_rate: float
    assertions_satisfied: int
    assertions_total: int
    retrieved: int
    proposed: int
    sourced: int
    tokens: dict
    total_prompt_tokens: int
    total_completion_tokens: int
    total_tokens: int
    instructions: int
    yes_no_instructions: int
    user_words: int
    objects: list[dict]
    categories: list[CategoryRecord]
    failures: list[dict]
    wall_clock_seconds: float = 0.0  # reported separately; not part of the payload

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "condition": self.condition,
            "scenario": self.scenario,
            "seed": self.seed,
            "trial": self.trial,
            "oversight": self.oversight,
            "completion_rate": round(self.completion_rate, 6),
            "assertions_satisfied": self.assertions_satisfied,
            "assertions_total": self.assertions_total,
            "retrieved": self.retrieved,
            "proposed": self.proposed,
            "sourced": self.sourced,
            "tokens": self.tokens,
            "total_prompt_tokens": self.total_prompt_tokens,
            "total_completion_tokens": self.total_completion_tokens,
            "total_tokens": self.total_tokens,
            "instructions": self.instructions,
            "yes_no_instructions": self.yes_no_instructions,
            "user_words": self.user_words,
            "objects": self.objects,
            "categories": [c.to_dict() for c in self.categories],
            "failures": self.failures,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def validate(self, ledger: UsageLedger | None = None) -> None:
        # Without oversight nothing is proposed to the user, so the
        # proposed >= sourced link only binds on oversight runs.
        if self.retrieved < self.proposed or self.sourced < 0:
            raise ReportInvariantError(
                f"retrieved >= proposed violated: {self.retrieved}/{self.proposed}"
            )
        if self.oversight and not (self.proposed >= self.sourced):
            raise ReportInvariantError(
                f"proposed >= sourced violated under oversight: "
                f"{self.proposed}/{self.sourced}"
            )
        if self.retrieved < self.sourced:
            raise ReportInvariantError(
                f"retrieved >= sourced violated: {self.retrieved}/{self.sourced}"
            )
        if self.total_tokens != self.total_prompt_tokens + self.total_completion_tokens:
            raise ReportInvariantError("total tokens != prompt + completion")
        if self.yes_no_instructions > self.instructions:
            raise ReportInvariantError("yes/no count exceeds instruction count")
        if len(self.categories) != self.retrieved:
            raise ReportInvariantError(
                f"category records ({len(self.categories)}) != retrieved ({self.retrieved})"
            )
        if ledger is not None:
            if self.tokens != ledger.snapshot():
                raise ReportInvariantError("token report disagrees with gateway ledger")
            if self.total_prompt_tokens != ledger.total_prompt_tokens:
                raise ReportInvariantError("prompt total disagrees with gateway ledger")
            if self.total_completion_tokens != ledger.total_completion_tokens:
                raise ReportInvariantError("completion total disagrees with gateway ledger")


def make_user(kind: str, scenario: Scenario, world: WorldState, lexicon: Lexicon, hub=None) -> UserModel:
    if kind == "oracle":
        return OracleUser(scenario, world, lexicon)
    if kind == "reject-all":
        return RejectAllUser(scenario)
    if kind == "interactive":
        return InteractiveUser()
    if kind == "ui":
        if hub is None:
            raise ValueError("ui user needs a session hub")
        return hub.make_user()
    raise ValueError(f"unknown user model {kind!r}")


def door_sweep(world: WorldState, scenario: Scenario, depth_limit: int = 8) -> WorldState:
    """Restore desired door states that the task loop left unsatisfied."""
    for fixture_id, state in sorted(scenario.door_goals.items()):
        goal = (GoalAssertion(subject=fixture_id, kind="door", door_state=state),)
        if world.door_state(fixture_id) == state:
            continue
        sweep_plan = plan(world, goal, depth_limit)
        if sweep_plan is not None:
            world = execute_plan(world, sweep_plan)
    return world


def world_to_dict(world: WorldState) -> dict:
    placements = {}
    for percept in observable_objects(world):
        placements[percept.id] = percept.phrase
    return {
        "placements": placements,
        "doors": dict(world.doors),
        "held": world.held,
    }


def run_condition(
    scenario: Scenario,
    cond: Condition,
    provider,
    selector=None,
    user_kind: str = "oracle",
    seed: int = 0,
    policy_store: PolicyStore | None = None,
    include_setup: bool = True,
    label: str | None = None,
    trial: int = 1,
    search_config: SearchConfig | None = None,
    tbp_temperatures: tuple[float, ...] | None = None,
    lexicon: Lexicon | None = None,
    hub=None,
    depth_limit: int = 8,
) -> RunReport:
    """Execute the full task once under `cond` and report every measure."""
    started = time.perf_counter()
    lexicon = lexicon or load_lexicon(lexicon_path())
    if selector is None and hasattr(provider, "answer"):
        selector = provider
    ledger = UsageLedger()
    gateway = Gateway(provider, selector, ledger)
    world = WorldState.initial(scenario)
    policy_store = policy_store if policy_store is not None else PolicyStore()

    log = InteractionLog()
    log.record(scenario.invocation)
    if include_setup:
        for line in scenario.setup_instructions:
            log.record(line)

    kwargs = {}
    if tbp_temperatures is not None:
        kwargs["tbp_temperatures"] = tbp_temperatures
    pipeline = Pipeline(gateway, lexicon, search_config, observer=hub, **kwargs)
    user = make_user(user_kind, scenario, world, lexicon, hub=hub)
    traces: list[ElicitationTrace] = []

    def publish_state(current_world: WorldState, status: str = "running") -> None:
        if hub is None:
            return
        hub.update_state(
            world=world_to_dict(current_world),
            metrics={
                "retrieved": sum(len(t.retrieved) for t in traces),
                "proposed": sum(len(t.proposed) for t in traces),
                "sourced": sum(1 for t in traces if t.sourced_text and t.sourced_from_llm),
                "instructions": log.instructions,
                "yes_no_instructions": log.yes_no,
                "user_words": log.words,
                "prompt_tokens": ledger.total_prompt_tokens,
                "completion_tokens": ledger.total_completion_tokens,
                "total_tokens": ledger.total_tokens,
                "completion_rate": completion_rate(current_world, scenario),
            },
            status=status,
        )

    def elicitor(object_id: str, current_world: WorldState):
        ctx = task_context_for(scenario, current_world, object_id)
        if hasattr(user, "current_object"):
            user.current_object = object_id
            if hasattr(user, "world"):
                user.world = current_world
        publish_state(current_world)
        outcome = pipeline.elicit(ctx, current_world, cond, user if cond.oversight else None, log)
        traces.append(outcome.trace)
        return outcome.assertions

    def on_object(object_id: str) -> None:
        if hub is not None:
            hub.on_object(object_id)

    world, object_records = execute_task(
        scenario, world, policy_store, elicitor, depth_limit=depth_limit, on_object=on_object
    )
    world = door_sweep(world, scenario, depth_limit)

    rate = completion_rate(world, scenario)
    satisfied = round(rate * scenario.assertion_total)

    initial_world = WorldState.initial(scenario)
    categories: list[CategoryRecord] = []
    for trace in traces:
        trace.validate()
        for record in trace.retrieved:
            report = record.report
            if report is None:
                report = analyze(
                    record.candidate.text, initial_world, lexicon, focus_id=record.object_id
                )
            category, sub = categorize_response(record.candidate, report, scenario, record.object_id)
            categories.append(
                CategoryRecord(
                    object_id=record.object_id,
                    text=record.candidate.text,
                    category=category,
                    subcategory=sub,
                    duplicate=record.duplicate,
                )
            )

    report = RunReport(
        label=label or cond.name,
        condition=cond.name,
        scenario=scenario.task_name,
        seed=seed,
        trial=trial,
        oversight=cond.oversight,
        completion_rate=rate,
        assertions_satisfied=satisfied,
        assertions_total=scenario.assertion_total,
        retrieved=sum(len(t.retrieved) for t in traces),
        proposed=sum(len(t.proposed) for t in traces),
        sourced=sum(1 for t in traces if t.sourced_text and t.sourced_from_llm),
        tokens=ledger.snapshot(),
        total_prompt_tokens=ledger.total_prompt_tokens,
        total_completion_tokens=ledger.total_completion_tokens,
        total_tokens=ledger.total_tokens,
        instructions=log.instructions,
        yes_no_instructions=log.yes_no,
        user_words=log.words,
        objects=[
            {
                "id": r.object_id,
                "status": r.status,
                "plan_length": r.plan_length,
                "note": r.note,
            }
            for r in object_records
        ],
        categories=categories,
        failures=[
            {"object": t.object_id, "failure": t.failure} for t in traces if t.failure
        ],
        wall_clock_seconds=time.perf_counter() - started,
    )
    report.validate(ledger)
    publish_state(world, status="done")
    if hub is not None:
        hub.on_finished(report)
    return report


# ---------------------------------------------------------------------------
# Report files


_COMPARISON_COLUMNS = [
    ("Label", "label", "s"),
    ("Comp.%", "completion_pct", ".1f"),
    ("Retrieved", "retrieved", "d"),
    ("Proposed", "proposed", "d"),
    ("Sourced", "sourced", "d"),
    ("Prompt tok", "total_prompt_tokens", "d"),
    ("Compl tok", "total_completion_tokens", "d"),
    ("Total tok", "total_tokens", "d"),
    ("Instr", "instructions", "d"),
    ("Y/N", "yes_no_instructions", "d"),
    ("Words", "user_words", "d"),
]


def _format_table(rows: list[list[str]], header: list[str]) -> str:
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    def fmt(row):
        return "  ".join(str(cell).rjust(widths[i]) for i, cell in enumerate(row))
    lines = [fmt(header), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines) + "\n"


def comparison_table(reports: list[RunReport]) -> str:
    rows = []
    for r in reports:
        values = {
            "label": r.label,
            "completion_pct": f"{r.completion_rate * 100:.1f}",
            "retrieved": r.retrieved,
            "proposed": r.proposed,
            "sourced": r.sourced,
            "total_prompt_tokens": r.total_prompt_tokens,
            "total_completion_tokens": r.total_completion_tokens,
            "total_tokens": r.total_tokens,
            "instructions": r.instructions,
            "yes_no_instructions": r.yes_no_instructions,
            "user_words": r.user_words,
        }
        rows.append([values[key] for _, key, _ in _COMPARISON_COLUMNS])
    return _format_table(rows, [name for name, _, _ in _COMPARISON_COLUMNS])


def category_table(reports: list[RunReport]) -> str:
    blocks = []
    for r in reports:
        counts: dict[str, int] = {}
        for record in r.categories:
            key = record.category + (f"/{record.subcategory}" if record.subcategory else "")
            counts[key] = counts.get(key, 0) + 1
        total = max(len(r.categories), 1)
        rows = [
            [key, str(n), f"{100 * n / total:.1f}%"]
            for key, n in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        ]
        blocks.append(f"[{r.label}] {len(r.categories)} retrieved responses\n"
                      + _format_table(rows, ["category", "count", "share"]))
    return "\n".join(blocks)


def token_purpose_table(reports: list[RunReport]) -> str:
    blocks = []
    for r in reports:
        rows = []
        for purpose, bucket in sorted(r.tokens.items()):
            rows.append(
                [purpose, str(bucket["prompts"]), str(bucket["prompt_tokens"]), str(bucket["completion_tokens"])]
            )
        blocks.append(f"[{r.label}]\n" + _format_table(rows, ["purpose", "prompts", "sent", "received"]))
    return "\n".join(blocks)


def variability_table(reports: list[RunReport]) -> str:
    by_condition: dict[str, list[RunReport]] = {}
    for r in reports:
        by_condition.setdefault(r.condition, []).append(r)
    rows = []
    for cond_name, group in sorted(by_condition.items()):
        rates = [r.completion_rate * 100 for r in group]
        totals = [r.total_tokens for r in group]
        retrieved = [r.retrieved for r in group]
        rows.append([
            cond_name,
            str(len(group)),
            f"{statistics.mean(rates):.2f}",
            f"{statistics.stdev(rates):.2f}" if len(group) > 1 else "-",
            f"{statistics.mean(retrieved):.1f}",
            f"{statistics.mean(totals):.0f}",
        ])
    return _format_table(rows, ["condition", "runs", "comp mean", "comp sd", "retrieved mean", "tokens mean"])


def emit_report(reports: list[RunReport], out_dir: str | Path) -> list[Path]:
    """Write per-run records plus the comparison, category, token, and
    variability tables."""
    if not reports:
        raise ValueError("emit_report needs at least one report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, report in enumerate(reports):
        path = out / f"run_{i:02d}_{report.label.replace('*', 'star').replace('+', '_')}.json"
        path.write_text(report.to_json(), encoding="utf-8")
        written.append(path)
    tables = {
        "comparison.txt": comparison_table(reports),
        "categories.txt": category_table(reports),
        "tokens_by_purpose.txt": token_purpose_table(reports),
        "variability.txt": variability_table(reports),
    }
    for name, text in tables.items():
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    meta = out / "meta.json"
    meta.write_text(
        json.dumps(
            {
                "runs": [
                    {"label": r.label, "wall_clock_seconds": round(r.wall_clock_seconds, 3)}
                    for r in reports
                ]
            },
            indent=1,
        )
        + "\n",
        encoding="utf-8",
    )
    written.append(meta)
    return written
