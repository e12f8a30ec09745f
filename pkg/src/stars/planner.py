"""Forward search over primitive actions, plus a one-shot policy cache.

The planner does breadth-first search over simulator successor states,
restricted to the instances a goal mentions (their containers and
destinations included).  Successful executions are cached as class-level
plan skeletons keyed by (task, object class, gross start location), so a
repeat presentation of the task runs without any provider calls.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from .world import (
    ActionError,
    GoalAssertion,
    PrimitiveAction,
    Scenario,
    WorldState,
    apply_action,
    assertion_satisfied,
)

DEFAULT_DEPTH_LIMIT = 8  # manipulation actions; approach moves are free

OBJECT_SLOT = "$object"


class PlanningError(RuntimeError):
    pass


@dataclass(frozen=True)
class Plan:
    actions: tuple[PrimitiveAction, ...]

    def __iter__(self):
        return iter(self.actions)

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def manipulation_count(self) -> int:
        return sum(1 for a in self.actions if a.kind != "approach")


def _relevant_instances(world: WorldState, goal: tuple[GoalAssertion, ...]) -> set[str]:
    relevant: set[str] = set()
    for assertion in goal:
        relevant.add(assertion.subject)
        if assertion.target:
            relevant.add(assertion.target)
    for instance_id in list(relevant):
        rel, container = world.placement_of(instance_id)
        if rel in ("in", "on") and container:
            relevant.add(container)
    return relevant


def _goal_satisfied(world: WorldState, goal: tuple[GoalAssertion, ...]) -> bool:
    return all(assertion_satisfied(world, a) for a in goal)


def plan(
    world: WorldState,
    goal: tuple[GoalAssertion, ...] | list[GoalAssertion],
    depth_limit: int = DEFAULT_DEPTH_LIMIT,
) -> Plan | None:
    """Shortest action sequence achieving every assertion, or None.

    Deterministic: candidate actions are enumerated in a fixed kind order
    with targets sorted by id, and the first complete plan found wins.
    """
    goal = tuple(goal)
    for assertion in goal:
        if assertion.subject not in world.scenario.instances:
            raise PlanningError(f"goal references unknown instance {assertion.subject!r}")
    if _goal_satisfied(world, goal):
        return Plan(actions=())

    targets = sorted(_relevant_instances(world, goal))
    seen = {world.key()}
    frontier: deque[tuple[WorldState, tuple[PrimitiveAction, ...], int]] = deque()
    frontier.append((world, (), 0))
    while frontier:
        state, actions, manipulations = frontier.popleft()
        for kind in ("open", "pick-up", "approach", "put-into", "put-onto", "close"):
            cost = 0 if kind == "approach" else 1
            if manipulations + cost > depth_limit:
                continue
            for target in targets:
                try:
                    successor = apply_action(state, PrimitiveAction(kind, target))
                except ActionError:
                    continue
                key = successor.key()
                if key in seen:
                    continue
                seen.add(key)
                path = actions + (PrimitiveAction(kind, target),)
                if _goal_satisfied(successor, goal):
                    return Plan(actions=path)
                frontier.append((successor, path, manipulations + cost))
    return None


# ---------------------------------------------------------------------------
# One-shot policy cache


@dataclass(frozen=True)
class PolicyKey:
    task_name: str
    object_class: str
    start_location: str  # gross location: the containing fixture's class name

    def as_string(self) -> str:
        return "\x1f".join((self.task_name, self.object_class, self.start_location))

    @staticmethod
    def from_string(raw: str) -> "PolicyKey":
        task_name, object_class, start_location = raw.split("\x1f")
        return PolicyKey(task_name, object_class, start_location)


@dataclass(frozen=True)
class PolicyEntry:
    """Class-level goal and plan skeleton; the object slot is re-bound per instance."""

    goal: tuple[GoalAssertion, ...]
    skeleton: tuple[PrimitiveAction, ...]


def policy_key_for(scenario: Scenario, world: WorldState, object_id: str) -> PolicyKey:
    rel, container = world.placement_of(object_id)
    if rel in ("in", "on") and container:
        location = scenario.instances[container].class_name
    else:
        location = "floor"
    return PolicyKey(scenario.task_name, scenario.instances[object_id].class_name, location)


def abstract_goal(goal: tuple[GoalAssertion, ...], object_id: str) -> tuple[GoalAssertion, ...]:
    return tuple(
        GoalAssertion(
            subject=OBJECT_SLOT if a.subject == object_id else a.subject,
            kind=a.kind,
            target=a.target,
            door_state=a.door_state,
        )
        for a in goal
    )


def abstract_plan(actions: tuple[PrimitiveAction, ...], object_id: str) -> tuple[PrimitiveAction, ...]:
    return tuple(
        PrimitiveAction(a.kind, OBJECT_SLOT if a.target == object_id else a.target)
        for a in actions
    )


def bind(template: tuple, object_id: str) -> tuple:
    out = []
    for item in template:
        if isinstance(item, GoalAssertion):
            out.append(
                GoalAssertion(
                    subject=object_id if item.subject == OBJECT_SLOT else item.subject,
                    kind=item.kind,
                    target=item.target,
                    door_state=item.door_state,
                )
            )
        else:
            out.append(PrimitiveAction(item.kind, object_id if item.target == OBJECT_SLOT else item.target))
    return tuple(out)


class PolicyStore:
    """Persistent map from policy keys to learned goals and plan skeletons."""

    def __init__(self) -> None:
        self._entries: dict[PolicyKey, PolicyEntry] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def lookup(self, key: PolicyKey) -> PolicyEntry | None:
        return self._entries.get(key)

    def store(self, key: PolicyKey, entry: PolicyEntry) -> None:
        self._entries[key] = entry

    def to_dict(self) -> dict:
        out = {}
        for key, entry in sorted(self._entries.items(), key=lambda kv: kv[0].as_string()):
            out[key.as_string()] = {
                "goal": [
                    {
                        "subject": a.subject,
                        "kind": a.kind,
                        "target": a.target,
                        "door_state": a.door_state,
                    }
                    for a in entry.goal
                ],
                "skeleton": [{"kind": a.kind, "target": a.target} for a in entry.skeleton],
            }
        return out

    @staticmethod
    def from_dict(data: dict) -> "PolicyStore":
        store = PolicyStore()
        for raw_key, raw in data.items():
            goal = tuple(
                GoalAssertion(
                    subject=a["subject"],
                    kind=a["kind"],
                    target=a.get("target"),
                    door_state=a.get("door_state"),
                )
                for a in raw["goal"]
            )
            skeleton = tuple(PrimitiveAction(a["kind"], a["target"]) for a in raw["skeleton"])
            store.store(PolicyKey.from_string(raw_key), PolicyEntry(goal=goal, skeleton=skeleton))
        return store

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @staticmethod
    def load(path: str | Path) -> "PolicyStore":
        return PolicyStore.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class ObjectRecord:
    """Execution outcome for one task object."""

    object_id: str
    status: str  # "executed" | "cached" | "skipped"
    goal: tuple[GoalAssertion, ...] = ()
    plan_length: int = 0
    note: str | None = None


def execute_plan(world: WorldState, the_plan: Plan) -> WorldState:
    for action in the_plan:
        world = apply_action(world, action)
    return world


def execute_task(
    scenario: Scenario,
    world: WorldState,
    store: PolicyStore,
    elicitor,
    depth_limit: int = DEFAULT_DEPTH_LIMIT,
    on_object=None,
) -> tuple[WorldState, list[ObjectRecord]]:
    """Process every task object: cached policy when available, otherwise
    elicit a goal, plan, execute, verify, and cache.

    `elicitor(object_id, world)` returns goal assertions or None.
    """
    records: list[ObjectRecord] = []
    for object_id in scenario.task_objects:
        if on_object is not None:
            on_object(object_id)
        key = policy_key_for(scenario, world, object_id)
        entry = store.lookup(key)
        if entry is not None:
            goal = bind(entry.goal, object_id)
            actions = bind(entry.skeleton, object_id)
            try:
                candidate_world = execute_plan(world, Plan(actions))
            except ActionError:
                candidate_world = None  # cached skeleton inapplicable; replan below
            if candidate_world is None or not _goal_satisfied(candidate_world, goal):
                replanned = plan(world, goal, depth_limit)
                if replanned is None:
                    records.append(ObjectRecord(object_id, "skipped", goal, note="replan failed"))
                    continue
                candidate_world = execute_plan(world, replanned)
            world = candidate_world
            records.append(ObjectRecord(object_id, "cached", goal))
            continue

        goal = elicitor(object_id, world)
        if goal is None:
            records.append(ObjectRecord(object_id, "skipped", note="no usable goal"))
            continue
        goal = tuple(goal)
        the_plan = plan(world, goal, depth_limit)
        if the_plan is None:
            records.append(ObjectRecord(object_id, "skipped", goal, note="planning failed"))
            continue
        world = execute_plan(world, the_plan)
        if not _goal_satisfied(world, goal):
            records.append(ObjectRecord(object_id, "skipped", goal, note="verification failed"))
            continue
        store.store(
            key,
            PolicyEntry(
                goal=abstract_goal(goal, object_id),
                skeleton=abstract_plan(the_plan.actions, object_id),
            ),
        )
        records.append(ObjectRecord(object_id, "executed", goal, plan_length=len(the_plan)))
    return world, records
