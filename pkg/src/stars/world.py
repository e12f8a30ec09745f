"""Typed scenario model, simulated world state, primitive actions, and goal checks.

A scenario file defines an object-class table, instances with initial
placements, the fixtures that serve as locations, the per-object ground-truth
goals, and annotated reasonable alternatives.  The world state is a pure
value: applying an action returns a successor state and never mutates the
input, so snapshots can be shared freely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
PROPERTY_NAMES = frozenset({"grabbable", "surface", "receptacle", "openable", "fillable"})

# Fixed enumeration order; the planner uses it as a deterministic tie-break.
ACTION_KINDS = ("open", "pick-up", "approach", "put-into", "put-onto", "close")

REASONABLE_SUBCATEGORIES = frozenset(
    {"reasonable-alternative-location", "post-completion-error", "embodiment-limitation"}
)


class ScenarioError(ValueError):
    """A scenario file is malformed; the message carries field context."""


class ActionError(RuntimeError):
    """A primitive action's preconditions do not hold in the current state."""


@dataclass(frozen=True)
class ObjectClass:
    name: str
    properties: frozenset[str] = frozenset()

    def has(self, prop: str) -> bool:
        return prop in self.properties


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    class_name: str


# Placement is ("in", target_id) | ("on", target_id) | ("floor", None) | ("held", None).
Placement = tuple[str, str | None]

FLOOR: Placement = ("floor", None)
HELD: Placement = ("held", None)


@dataclass(frozen=True)
class GoalAssertion:
    """A testable final-state condition: placement or door state."""

    subject: str
    kind: str  # "in" | "on" | "door"
    target: str | None = None
    door_state: str | None = None

    def __post_init__(self) -> None:
        if self.kind in ("in", "on"):
            if not self.target:
                raise ValueError(f"{self.kind} assertion needs a target")
        elif self.kind == "door":
            if self.door_state not in ("open", "closed"):
                raise ValueError("door assertion needs state open/closed")
        else:
            raise ValueError(f"unknown assertion kind {self.kind!r}")

    def render(self) -> str:
        if self.kind == "door":
            return f"door({self.subject})={self.door_state}"
        return f"{self.kind}({self.subject}, {self.target})"


@dataclass(frozen=True)
class PrimitiveAction:
    kind: str
    target: str

    def __post_init__(self) -> None:
        if self.kind not in ACTION_KINDS:
            raise ValueError(f"unknown action kind {self.kind!r}")

    def render(self) -> str:
        return f"{self.kind}({self.target})"


@dataclass(frozen=True)
class ReasonableAlternative:
    destination: str
    subcategory: str


@dataclass(frozen=True)
class Percept:
    id: str
    class_name: str
    phrase: str


@dataclass
class Scenario:
    """Static description of one task environment plus its ground truth."""

    task_name: str
    location: str
    invocation: str
    setup_instructions: list[str]
    subtasks: list[tuple[str, str]]  # (verb, source fixture id)
    classes: dict[str, ObjectClass]
    instances: dict[str, ObjectInstance]
    initial_placements: dict[str, Placement]
    initial_doors: dict[str, str]
    fixtures: list[str]
    object_goals: dict[str, tuple[GoalAssertion, ...]]  # alternatives per task object
    door_goals: dict[str, str]
    reasonable_alternatives: dict[str, tuple[ReasonableAlternative, ...]] = field(default_factory=dict)

    def class_of(self, instance_id: str) -> ObjectClass:
        return self.classes[self.instances[instance_id].class_name]

    def is_fixture(self, instance_id: str) -> bool:
        return instance_id in self._fixture_set

    @property
    def _fixture_set(self) -> frozenset[str]:
        return frozenset(self.fixtures)

    @property
    def task_objects(self) -> list[str]:
        """Task objects in processing order: grouped by subtask source, then id."""
        ordered: list[str] = []
        remaining = [i for i in self.instances if i not in self._fixture_set]
        for _, source in self.subtasks:
            batch = sorted(
                i for i in remaining
                if i not in ordered and self.initial_placements[i][1] == source
            )
            ordered.extend(batch)
        ordered.extend(sorted(i for i in remaining if i not in ordered))
        return ordered

    @property
    def assertion_total(self) -> int:
        return len(self.object_goals) + len(self.door_goals)

    def validate(self) -> None:
        for cid, cls in self.classes.items():
            unknown = cls.properties - PROPERTY_NAMES
            if unknown:
                raise ScenarioError(f"classes[{cid}]: unknown properties {sorted(unknown)}")
        for iid, inst in self.instances.items():
            if inst.class_name not in self.classes:
                raise ScenarioError(f"instances[{iid}]: unknown class {inst.class_name!r}")
            rel, target = self.initial_placements.get(iid, FLOOR)
            if rel in ("in", "on"):
                if target not in self.instances:
                    raise ScenarioError(f"instances[{iid}]: placement target {target!r} does not exist")
            elif rel != "floor":
                raise ScenarioError(f"instances[{iid}]: bad initial placement {rel!r}")
        for iid, state in self.initial_doors.items():
            if iid not in self.instances:
                raise ScenarioError(f"doors[{iid}]: unknown instance")
            if not self.class_of(iid).has("openable"):
                raise ScenarioError(f"doors[{iid}]: door state on non-openable instance")
            if state not in ("open", "closed"):
                raise ScenarioError(f"doors[{iid}]: bad state {state!r}")
        for fid in self.fixtures:
            if fid not in self.instances:
                raise ScenarioError(f"fixtures: dangling reference {fid!r}")
        for oid, goals in self.object_goals.items():
            if oid not in self.instances:
                raise ScenarioError(f"ground_truth[{oid}]: unknown instance")
            for goal in goals:
                if goal.kind in ("in", "on") and goal.target not in self._fixture_set:
                    raise ScenarioError(
                        f"ground_truth[{oid}]: destination {goal.target!r} is not a fixture"
                    )
        for fid, state in self.door_goals.items():
            if fid not in self._fixture_set:
                raise ScenarioError(f"door_goals[{fid}]: not a fixture")
            if not self.class_of(fid).has("openable"):
                raise ScenarioError(f"door_goals[{fid}]: fixture is not openable")
        for oid, alts in self.reasonable_alternatives.items():
            if oid not in self.instances:
                raise ScenarioError(f"reasonable_alternatives[{oid}]: unknown instance")
            for alt in alts:
                if alt.destination not in self._fixture_set:
                    raise ScenarioError(
                        f"reasonable_alternatives[{oid}]: destination {alt.destination!r} is not a fixture"
                    )
                if alt.subcategory not in REASONABLE_SUBCATEGORIES:
                    raise ScenarioError(
                        f"reasonable_alternatives[{oid}]: bad subcategory {alt.subcategory!r}"
                    )
        self._check_containment_cycles()

    def _check_containment_cycles(self) -> None:
        for start in self.instances:
            seen = {start}
            cur = start
            while True:
                rel, target = self.initial_placements.get(cur, FLOOR)
                if rel not in ("in", "on") or target is None:
                    break
                if target in seen:
                    raise ScenarioError(f"instances[{start}]: containment cycle via {target!r}")
                seen.add(target)
                cur = target


@dataclass(frozen=True)
class WorldState:
    """Dynamic state over a scenario.  Value semantics; actions return successors."""

    scenario: Scenario = field(compare=False)
    placements: tuple[tuple[str, Placement], ...] = ()
    doors: tuple[tuple[str, str], ...] = ()
    held: str | None = None
    approached: str | None = None

    @staticmethod
    def initial(scenario: Scenario) -> "WorldState":
        return WorldState(
            scenario=scenario,
            placements=tuple(sorted(scenario.initial_placements.items())),
            doors=tuple(sorted(scenario.initial_doors.items())),
        )

    @property
    def placement_map(self) -> dict[str, Placement]:
        return dict(self.placements)

    @property
    def door_map(self) -> dict[str, str]:
        return dict(self.doors)

    def placement_of(self, instance_id: str) -> Placement:
        for iid, placement in self.placements:
            if iid == instance_id:
                return placement
        raise KeyError(instance_id)

    def door_state(self, instance_id: str) -> str | None:
        for iid, state in self.doors:
            if iid == instance_id:
                return state
        return None

    def key(self) -> tuple:
        """Hashable snapshot of the dynamic state (for planner visited sets)."""
        return (self.placements, self.doors, self.held, self.approached)

    def _replace_placement(self, instance_id: str, placement: Placement) -> "WorldState":
        placements = tuple(
            (iid, placement if iid == instance_id else current)
            for iid, current in self.placements
        )
        return WorldState(self.scenario, placements, self.doors, self.held, self.approached)

    def _require(self, instance_id: str) -> ObjectClass:
        if instance_id not in self.scenario.instances:
            raise ActionError(f"unknown instance {instance_id!r}")
        return self.scenario.class_of(instance_id)


def apply_action(world: WorldState, action: PrimitiveAction) -> WorldState:
    """Return the successor state, or raise ActionError leaving `world` unchanged.

    Manipulation requires that the most recent approach targeted the
    manipulated object's location (or the object itself when loose).
    """
    s = world.scenario
    target_cls = world._require(action.target)

    if action.kind == "approach":
        return WorldState(s, world.placements, world.doors, world.held, action.target)

    if action.kind == "open" or action.kind == "close":
        if not target_cls.has("openable"):
            raise ActionError(f"{action.target} is not openable")
        if world.approached != action.target:
            raise ActionError(f"must approach {action.target} first")
        state = world.door_state(action.target)
        wanted = "closed" if action.kind == "open" else "open"
        if state != wanted:
            raise ActionError(f"{action.target} is already {state}")
        doors = tuple(
            (iid, ("open" if action.kind == "open" else "closed") if iid == action.target else st)
            for iid, st in world.doors
        )
        return WorldState(s, world.placements, doors, world.held, world.approached)

    if action.kind == "pick-up":
        if not target_cls.has("grabbable"):
            raise ActionError(f"{action.target} is not grabbable")
        if world.held is not None:
            raise ActionError("already holding an object (single arm)")
        rel, container = world.placement_of(action.target)
        if rel == "held":
            raise ActionError(f"{action.target} is already held")
        station = container if rel in ("in", "on") else action.target
        if world.approached != station:
            raise ActionError(f"must approach {station} first")
        if rel == "in" and container is not None:
            if s.class_of(container).has("openable") and world.door_state(container) == "closed":
                raise ActionError(f"{container} is closed")
        nxt = world._replace_placement(action.target, HELD)
        return WorldState(s, nxt.placements, nxt.doors, action.target, world.approached)

    if action.kind in ("put-into", "put-onto"):
        if world.held is None:
            raise ActionError("not holding an object")
        if action.kind == "put-into":
            if not target_cls.has("receptacle"):
                raise ActionError(f"{action.target} is not a receptacle")
            if target_cls.has("openable") and world.door_state(action.target) == "closed":
                raise ActionError(f"{action.target} is closed")
            placement: Placement = ("in", action.target)
        else:
            if not target_cls.has("surface"):
                raise ActionError(f"{action.target} is not a surface")
            placement = ("on", action.target)
        if world.approached != action.target:
            raise ActionError(f"must approach {action.target} first")
        nxt = world._replace_placement(world.held, placement)
        return WorldState(s, nxt.placements, nxt.doors, None, world.approached)

    raise ActionError(f"unknown action kind {action.kind!r}")


def observable_objects(world: WorldState) -> list[Percept]:
    """Every instance as a percept with an `in`/`on` placement phrase."""
    percepts = []
    for iid in world.scenario.instances:
        cls_name = world.scenario.instances[iid].class_name
        rel, target = world.placement_of(iid)
        if rel in ("in", "on") and target is not None:
            phrase = f"{cls_name} {rel} {world.scenario.instances[target].class_name}"
        elif rel == "held":
            phrase = f"{cls_name} held"
        else:
            phrase = cls_name
        percepts.append(Percept(iid, cls_name, phrase))
    return percepts


def assertion_satisfied(world: WorldState, assertion: GoalAssertion) -> bool:
    if assertion.subject not in world.scenario.instances:
        raise KeyError(f"unknown instance {assertion.subject!r}")
    if assertion.kind == "door":
        return world.door_state(assertion.subject) == assertion.door_state
    if assertion.target not in world.scenario.instances:
        raise KeyError(f"unknown instance {assertion.target!r}")
    return world.placement_of(assertion.subject) == (assertion.kind, assertion.target)


def completion_rate(world: WorldState, scenario: Scenario) -> float:
    """Satisfied goal assertions / total.  Vacuously 1.0 for an empty scenario."""
    total = scenario.assertion_total
    if total == 0:
        return 1.0
    satisfied = 0
    for alternatives in scenario.object_goals.values():
        if any(assertion_satisfied(world, a) for a in alternatives):
            satisfied += 1
    for fid, state in scenario.door_goals.items():
        if world.door_state(fid) == state:
            satisfied += 1
    return satisfied / total


# ---------------------------------------------------------------------------
# Scenario file I/O


def _placement_from_json(raw, where: str) -> Placement:
    if raw is None or raw == "floor":
        return FLOOR
    if isinstance(raw, dict) and "relation" in raw and "target" in raw:
        rel = raw["relation"]
        if rel not in ("in", "on"):
            raise ScenarioError(f"{where}: bad placement relation {rel!r}")
        return (rel, raw["target"])
    raise ScenarioError(f"{where}: bad placement {raw!r}")


def _assertion_from_json(raw: dict, subject: str, where: str) -> GoalAssertion:
    kind = raw.get("kind")
    try:
        if kind == "door":
            return GoalAssertion(subject=subject, kind="door", door_state=raw.get("state"))
        return GoalAssertion(subject=subject, kind=kind, target=raw.get("target"))
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def scenario_from_dict(data: dict) -> Scenario:
    try:
        task = data["task"]
        classes = {
            c["name"]: ObjectClass(c["name"], frozenset(c.get("properties", [])))
            for c in data["classes"]
        }
        if len(classes) != len(data["classes"]):
            raise ScenarioError("classes: duplicate class name")
        instances: dict[str, ObjectInstance] = {}
        placements: dict[str, Placement] = {}
        doors: dict[str, str] = {}
        for i, inst in enumerate(data["instances"]):
            iid = inst["id"]
            if iid in instances:
                raise ScenarioError(f"instances[{i}]: duplicate id {iid!r}")
            instances[iid] = ObjectInstance(iid, inst["class"])
            placements[iid] = _placement_from_json(inst.get("placement"), f"instances[{i}]")
            if "door" in inst:
                doors[iid] = inst["door"]
        object_goals = {
            oid: tuple(
                _assertion_from_json(a, oid, f"ground_truth.objects[{oid}]")
                for a in alts
            )
            for oid, alts in data["ground_truth"]["objects"].items()
        }
        door_goals = dict(data["ground_truth"].get("doors", {}))
        alternatives = {
            oid: tuple(ReasonableAlternative(a["destination"], a["subcategory"]) for a in alts)
            for oid, alts in data.get("reasonable_alternatives", {}).items()
        }
        scenario = Scenario(
            task_name=task["name"],
            location=task["location"],
            invocation=task["invocation"],
            setup_instructions=list(task.get("setup_instructions", [])),
            subtasks=[tuple(s) for s in task.get("subtasks", [])],
            classes=classes,
            instances=instances,
            initial_placements=placements,
            initial_doors=doors,
            fixtures=list(data["fixtures"]),
            object_goals=object_goals,
            door_goals=door_goals,
            reasonable_alternatives=alternatives,
        )
    except KeyError as exc:
        raise ScenarioError(f"missing field {exc.args[0]!r}") from exc
    scenario.validate()
    return scenario


def scenario_to_dict(scenario: Scenario) -> dict:
    instances = []
    for iid, inst in scenario.instances.items():
        rel, target = scenario.initial_placements[iid]
        entry: dict = {"id": iid, "class": inst.class_name}
        if rel in ("in", "on"):
            entry["placement"] = {"relation": rel, "target": target}
        else:
            entry["placement"] = "floor"
        if iid in scenario.initial_doors:
            entry["door"] = scenario.initial_doors[iid]
        instances.append(entry)
    return {
        "task": {
            "name": scenario.task_name,
            "location": scenario.location,
            "invocation": scenario.invocation,
            "setup_instructions": scenario.setup_instructions,
            "subtasks": [list(s) for s in scenario.subtasks],
        },
        "classes": [
            {"name": c.name, "properties": sorted(c.properties)}
            for c in scenario.classes.values()
        ],
        "instances": instances,
        "fixtures": list(scenario.fixtures),
        "ground_truth": {
            "objects": {
                oid: [
                    {"kind": a.kind, "target": a.target}
                    if a.kind != "door"
                    else {"kind": "door", "state": a.door_state}
                    for a in alts
                ]
                for oid, alts in scenario.object_goals.items()
            },
            "doors": dict(scenario.door_goals),
        },
        "reasonable_alternatives": {
            oid: [{"destination": a.destination, "subcategory": a.subcategory} for a in alts]
            for oid, alts in scenario.reasonable_alternatives.items()
        },
    }


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    try:
        return scenario_from_dict(data)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(scenario_to_dict(scenario), indent=2, sort_keys=False) + "\n",
        encoding="utf-8",
    )
