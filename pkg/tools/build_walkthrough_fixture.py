#!/usr/bin/env python3
"""Build the bundled replay fixtures for the mug-in-dish-rack demo session.

The token distributions are solved so that the recursive search reproduces
the documented 13-response list (means within a fraction of the published
rounding), the repair searches produce the documented new/duplicate splits,
and the selection replies walk the full five-rejection chain.

Run from the repo root:  python3 tools/build_walkthrough_fixture.py
Outputs:
  src/stars/data/fixtures/walkthrough.json   (mug session only)
  src/stars/data/fixtures/mini.json          (mug + plate + temperature sweep)
  src/stars/data/fixtures/{kitchen,groceries,office}.json  (synthetic replays)
"""

from __future__ import annotations

import dataclasses
import math
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from stars.assets import lexicon_path, scenario_path
from stars.gateway import (
    Completion,
    CompletionRequest,
    CompletionToken,
    Fixture,
    Gateway,
    ScriptedProvider,
    TokenAlternative,
    estimate_tokens,
)
from stars.language import MismatchKind, load_lexicon
from stars.pipeline import ElicitationTrace, Pipeline
from stars.prompts import TaskContext, build_goal_prompt, build_repair_prompt, build_selection_prompt
from stars.search import ResponseCandidate, SearchConfig, search
from stars.synth import make_fixture
from stars.world import WorldState, load_scenario

OUT_DIR = ROOT / "src" / "stars" / "data" / "fixtures"

MUG_CTX = TaskContext(task_name="tidy kitchen", location="kitchen", object_phrase="mug in dish rack")
PLATE_CTX = TaskContext(task_name="tidy kitchen", location="kitchen", object_phrase="plate on counter")


def lp(p: float) -> float:
    return math.log(p)


def tok(text: str, prob: float, alts: list[tuple[str, float]] | None = None) -> CompletionToken:
    alternatives = tuple(TokenAlternative(t, lp(p)) for t, p in (alts or []))
    return CompletionToken(text=text, logprob=lp(prob), alternatives=alternatives)


def words(sentence: str, prob: float) -> list[CompletionToken]:
    parts = sentence.split()
    out = [tok(parts[0], prob)]
    out.extend(tok(f" {w}", prob) for w in parts[1:])
    return out


def add(fixture: Fixture, prompt: str, tokens: list[CompletionToken], temperature: float = 0.0) -> None:
    request = CompletionRequest(prompt=prompt, temperature=temperature, purpose="initial")
    completion = Completion(
        tokens=tuple(tokens),
        prompt_token_count=estimate_tokens(prompt),
        completion_token_count=len(tokens),
    )
    fixture.record_completion(request, completion)


# ---------------------------------------------------------------------------
# Mug session: initial search tree

# Filler probabilities solved so every branch mean lands on its target.
R0_HEAD = 8.9516 / 9      # 'The goal is that the mug is in the'
R0_MID = 3.9984 / 4       # ' and the dish washer' run between the branch points
CUP_BOARD = 0.99976
CUP_FILL = 3.99074 / 4
CUP_DISH_FILL = 2.987455 / 3
CABINET_FILL = 4.8904 / 5
RACK_FILL = 4.9766 / 5
RACK_IN_FILL = 0.841

GP = build_goal_prompt(MUG_CTX)

MUG_TARGETS = {
    "the goal is that the mug is in the cabinet and the cabinet is closed": 0.937,
    "the goal is that the mug is in the cupboard and the cupboard is closed": 0.935,
    "the goal is that the mug is in the dishwasher and the dishwasher is turned on": 0.925,
    "the goal is that the mug is in the dishwasher and the dishwasher is closed": 0.899,
    "the goal is that the mug is in the cupboard and the dish rack is empty": 0.898,
    "the goal is that the mug is in the dishwasher and the dishwasher is on": 0.897,
    "the goal is that the mug is in the dishwasher and the dishwasher is started": 0.8919,
    "the goal is that the mug is in the dish rack and the dish rack is empty": 0.881,
    "the goal is that the mug is in the dish rack and the dish rack is tidy": 0.870,
    "the goal is that the mug is in the dish rack and the dish rack is clean": 0.865,
    "the goal is that the mug is in the dishwasher": 0.8618,
    "the goal is that the mug is in the cupboard": 0.86128,
    "the goal is that the mug is in the dish rack and the dish rack is in the cupboard": 0.860,
}

VIABLE_ORDER = [
    "the goal is that the mug is in the cupboard",
    "the goal is that the mug is in the dishwasher",
    "the goal is that the mug is in the dishwasher and the dishwasher is closed",
    "the goal is that the mug is in the drawer and the drawer is closed",
    "the goal is that the mug is in the cupboard and the cupboard is closed",
    "the goal is that the mug is in the dish rack",
]


def build_mug_initial(fixture: Fixture) -> None:
    head = [tok(t, R0_HEAD) for t in ["The", " goal", " is", " that", " the", " mug", " is", " in", " the"]]
    root = head + [
        tok(" dish", 0.483, [(" cup", 0.265), (" cabinet", 0.213), (" sink", 0.0206), (" mug", 0.0088)]),
        tok("washer", 0.793, [(" rack", 0.1658), (" cabinet", 0.0191), (" dr", 0.0158), (" cup", 0.00279)]),
        tok(" and", 0.881, [(".(", 0.114), (".", 0.00209), ('."', 0.00002582)]),
        tok(" the", R0_MID),
        tok(" dish", R0_MID),
        tok("washer", R0_MID),
        tok(" is", R0_MID),
        tok(" turned", 0.536, [(" closed", 0.176), (" on", 0.1479), (" started", 0.056), (" full", 0.0380)]),
        tok(" on", 0.9999),
    ]
    add(fixture, GP, root)

    # ' cup' branch and its own recursion into ' dish'.
    cup = [
        tok("board", CUP_BOARD),
        tok(" and", 0.8779, [(".(", 0.1190), (".", 0.0010), (" above", 0.0002)]),
        tok(" the", CUP_FILL),
        tok(" cup", 0.810, [(" dish", 0.1864), (" kitchen", 0.0009), ("door", 0.0009), ("counter", 0.0006)]),
        tok("board", CUP_FILL),
        tok(" is", CUP_FILL),
        tok(" closed", CUP_FILL),
    ]
    add(fixture, GP + "The goal is that the mug is in the cup", cup)
    add(
        fixture,
        GP + "The goal is that the mug is in the cupboard and the dish",
        [tok(" rack", CUP_DISH_FILL), tok(" is", CUP_DISH_FILL), tok(" empty", CUP_DISH_FILL)],
    )

    # ' cabinet' branch.
    add(
        fixture,
        GP + "The goal is that the mug is in the cabinet",
        [tok(t, CABINET_FILL) for t in [" and", " the", " cabinet", " is", " closed"]],
    )

    # ' rack' branch with its empty/tidy/clean/in alternatives.
    rack = [
        tok(" and", RACK_FILL),
        tok(" the", RACK_FILL),
        tok(" dish", RACK_FILL),
        tok(" rack", RACK_FILL),
        tok(" is", RACK_FILL),
        tok(" empty", 0.40, [(" tidy", 0.213), (" clean", 0.128), (" in", 0.10), (" full", 0.012)]),
    ]
    add(fixture, GP + "The goal is that the mug is in the dish rack", rack)
    add(fixture, GP + "The goal is that the mug is in the dish rack and the dish rack is tidy", [])
    add(fixture, GP + "The goal is that the mug is in the dish rack and the dish rack is clean", [])
    add(
        fixture,
        GP + "The goal is that the mug is in the dish rack and the dish rack is in",
        [tok(" the", RACK_IN_FILL), tok(" cup", RACK_IN_FILL), tok("board", RACK_IN_FILL)],
    )

    # ' turned' alternatives terminate immediately.
    for suffix in (" closed", " on", " started"):
        add(fixture, GP + f"The goal is that the mug is in the dishwasher and the dishwasher is{suffix}", [])


# ---------------------------------------------------------------------------
# Mug session: repair trees

BAD_IN_CUPBOARD = "the goal is that the mug is in the dish rack and the dish rack is in the cupboard"
BAD_RACK_EMPTY = "the goal is that the mug is in the dish rack and the dish rack is empty"
BAD_STARTED = "the goal is that the mug is in the dishwasher and the dishwasher is started"
BAD_CUP_RACK_EMPTY = "the goal is that the mug is in the cupboard and the dish rack is empty"
BAD_CABINET = "the goal is that the mug is in the cabinet and the cabinet is closed"
BAD_SINK_EMPTY = "the goal is that the mug is in the sink and the sink is empty"


def repair_prompt(bad: str, kind: str, **detail) -> str:
    return build_repair_prompt(MUG_CTX, bad, MismatchKind(kind=kind, **detail))


def build_mug_repairs(fixture: Fixture) -> None:
    # Not-grabbable repair: yields the documented stay-put goal at 0.971.
    rp = repair_prompt(BAD_IN_CUPBOARD, "affordance-mismatch", object="rack", violated="grabbable")
    add(fixture, rp, words("the goal is that the mug is in the", 0.998)
        + [tok(" dish", 0.75, [(" cup", 0.15), (" sink", 0.03)]), tok(" rack", 0.949)])
    add(fixture, rp + "the goal is that the mug is in the cup", [tok("board", 0.97)])

    # Not-fillable repair of the rack-empty response: one new sink goal.
    rp = repair_prompt(BAD_RACK_EMPTY, "affordance-mismatch", object="rack", violated="fillable")
    add(fixture, rp, words("the goal is that the mug is in the sink and the sink is empty", 0.96))

    # Unknown-word repair: only duplicates come back.
    rp = repair_prompt(BAD_STARTED, "unknown-word", word="started")
    started = words("the goal is that the mug is in the dishwasher and the dishwasher is", 0.95)
    started.append(tok(" turned", 0.50, [(" closed", 0.20), (" on", 0.16), (" done", 0.02)]))
    started.append(tok(" on", 0.95))
    add(fixture, rp, started)
    add(fixture, rp + "the goal is that the mug is in the dishwasher and the dishwasher is closed", [])
    add(fixture, rp + "the goal is that the mug is in the dishwasher and the dishwasher is on", [])

    # Second not-fillable repair: one new (uninterpretable) sink goal.
    rp = repair_prompt(BAD_CUP_RACK_EMPTY, "affordance-mismatch", object="rack", violated="fillable")
    add(fixture, rp, words("the goal is that the mug is in the sink and the sink is clean", 0.96))

    # Ungrounded-cabinet repair: five responses, three of them duplicates.
    rp = repair_prompt(BAD_CABINET, "ungrounded-object", noun="cabinet")
    base = words("the goal is that the mug is in the", 0.97)
    base.append(tok(" sink", 0.55, [(" drawer", 0.21), (" dish", 0.17), (" cup", 0.04)]))
    base.extend(tok(t, 0.97) for t in [" and", " the", " sink", " is"])
    base.append(tok(" full", 0.45, [(" empty", 0.22), (" clean", 0.15), (" dirty", 0.04)]))
    base.extend(tok(t, 0.97) for t in [" of", " water"])
    add(fixture, rp, base)
    add(fixture, rp + "the goal is that the mug is in the drawer",
        [tok(t, 0.951) for t in [" and", " the", " drawer", " is", " closed"]])
    add(fixture, rp + "the goal is that the mug is in the dish",
        [tok(t, 0.95) for t in [" rack", " and", " the", " dish", " rack", " is", " empty"]])
    add(fixture, rp + "the goal is that the mug is in the sink and the sink is empty", [])
    add(fixture, rp + "the goal is that the mug is in the sink and the sink is clean", [])

    # Round-two repair of the sink-empty response: duplicate only.
    rp = repair_prompt(BAD_SINK_EMPTY, "affordance-mismatch", object="sink", violated="fillable")
    add(fixture, rp, words("the goal is that the mug is in the cupboard", 0.96))


# ---------------------------------------------------------------------------
# Plate session (mini scenario second object)

GP_P = build_goal_prompt(PLATE_CTX)


def build_plate(fixture: Fixture) -> None:
    head = [tok(t, 0.97) for t in ["The", " goal", " is", " that", " the", " plate", " is", " in", " the"]]
    root = head + [
        tok(" dish", 0.60, [(" sink", 0.20), (" cup", 0.12), (" counter", 0.03)]),
        tok("washer", 0.97),
        tok(" and", 0.80, [(".(", 0.10), (".", 0.002)]),
        tok(" the", 0.97),
        tok(" dish", 0.97),
        tok("washer", 0.97),
        tok(" is", 0.97),
        tok(" closed", 0.55, [(" open", 0.10), (" on", 0.04)]),
    ]
    add(fixture, GP_P, root)
    add(fixture, GP_P + "The goal is that the plate is in the sink", [])
    cup = [
        tok("board", 0.96),
        tok(" and", 0.85, [(".(", 0.12)]),
        tok(" the", 0.96),
        tok(" cup", 0.96),
        tok("board", 0.96),
        tok(" is", 0.96),
        tok(" closed", 0.96),
    ]
    add(fixture, GP_P + "The goal is that the plate is in the cup", cup)
    add(fixture, GP_P + "The goal is that the plate is in the dishwasher and the dishwasher is open", [])


# ---------------------------------------------------------------------------
# Temperature-sweep entries for the baseline retrieval mode


def build_tbp(fixture: Fixture) -> None:
    root = fixture.completions[f"0\x1f{GP}"]
    add(fixture, GP, [tok(t["text"], 0.95) for t in root["tokens"]], temperature=0.5)
    add(fixture, GP, words("The goal is that the mug is in the sink", 0.90), temperature=1.0)
    plate_root = fixture.completions[f"0\x1f{GP_P}"]
    add(fixture, GP_P, [tok(t["text"], 0.95) for t in plate_root["tokens"]], temperature=0.5)
    add(fixture, GP_P, words("The goal is that the plate is on the counter", 0.90), temperature=1.0)


# ---------------------------------------------------------------------------
# Selection chains

STARS_NOTE = (
    "Assume that dishware on the table or counter are dirty. "
    "Assume that bottles and cans are empty. Non-perishable food belongs in the pantry."
)


def selection_chain(
    fixture: Fixture, ctx: TaskContext, viable: list[ResponseCandidate], picks: list[str]
) -> None:
    """Record one selection reply per rejection round; `picks` names the text
    chosen at each round."""
    remaining = sorted(viable, key=ResponseCandidate.sort_key)
    for chosen_text in picks:
        ordered = sorted(remaining, key=ResponseCandidate.sort_key)
        _, prompt = build_selection_prompt(ctx, ordered)
        answer = str([c.text for c in ordered].index(chosen_text) + 1)
        fixture.record_selection(prompt, None, answer, estimate_tokens(prompt), 1)
        remaining = [c for c in remaining if c.text != chosen_text]


def verify_and_build_selections(fixture: Fixture) -> None:
    """Replay the search/repair flow against the fixture, assert the
    documented outcomes, then derive the selection entries from the actual
    viable candidates."""
    mini = load_scenario(scenario_path("mini"))
    world = WorldState.initial(mini)
    lexicon = load_lexicon(lexicon_path())

    candidates = search(GP, Gateway(ScriptedProvider(fixture)), SearchConfig())
    texts = {c.text: c.mean_probability for c in candidates}
    assert len(candidates) == 13, f"expected 13 responses, got {len(candidates)}: {sorted(texts)}"
    for text, target in MUG_TARGETS.items():
        assert text in texts, f"missing: {text}"
        assert abs(texts[text] - target) <= 0.002, f"{text}: {texts[text]:.5f} vs {target}"

    pipeline = Pipeline(Gateway(ScriptedProvider(fixture)), lexicon)
    mug_ctx = dataclasses.replace(MUG_CTX, focus_id="mug-1")
    trace = ElicitationTrace(object_id="mug-1")
    viable = pipeline.analyze_and_repair(candidates, world, mug_ctx, trace)
    ordered = sorted(viable, key=ResponseCandidate.sort_key)
    assert [c.text for c in ordered] == VIABLE_ORDER, [c.text for c in ordered]
    assert abs(ordered[3].mean_probability - 0.913) <= 0.002
    assert abs(ordered[5].mean_probability - 0.971) <= 0.002
    duplicates = sum(1 for r in trace.retrieved if r.duplicate)
    assert duplicates >= 5, duplicates  # 3 from the cabinet repair alone

    # Five-rejection chain: the first reply picks the closed-cupboard goal
    # (option 5 of 6), mirroring the recorded session.
    picks = [
        "the goal is that the mug is in the cupboard and the cupboard is closed",
        "the goal is that the mug is in the dish rack",
        "the goal is that the mug is in the drawer and the drawer is closed",
        "the goal is that the mug is in the dishwasher and the dishwasher is closed",
        "the goal is that the mug is in the dishwasher",
    ]
    selection_chain(fixture, MUG_CTX, ordered, picks)
    # Context-note variant used by the starred condition.
    _, first_prompt = build_selection_prompt(MUG_CTX, ordered)
    fixture.record_selection(first_prompt, STARS_NOTE, "5", estimate_tokens(first_prompt), 1)

    # Plate candidates are all viable; derive its chain the same way.
    plate_candidates = search(GP_P, Gateway(ScriptedProvider(fixture)), SearchConfig())
    plate_ctx = dataclasses.replace(PLATE_CTX, focus_id="plate-1")
    plate_trace = ElicitationTrace(object_id="plate-1")
    plate_viable = pipeline.analyze_and_repair(plate_candidates, world, plate_ctx, plate_trace)
    assert len(plate_viable) == 6, [c.text for c in plate_viable]
    plate_picks = [
        "the goal is that the plate is in the dishwasher and the dishwasher is closed",
        "the goal is that the plate is in the sink",
        "the goal is that the plate is in the cupboard and the cupboard is closed",
        "the goal is that the plate is in the dishwasher and the dishwasher is open",
        "the goal is that the plate is in the dishwasher",
    ]
    selection_chain(fixture, PLATE_CTX, sorted(plate_viable, key=ResponseCandidate.sort_key), plate_picks)


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)

    mini = Fixture()
    build_mug_initial(mini)
    build_mug_repairs(mini)
    build_plate(mini)
    build_tbp(mini)
    verify_and_build_selections(mini)
    mini.save(OUT_DIR / "mini.json")
    print(f"wrote {OUT_DIR / 'mini.json'} ({len(mini.completions)} completions, "
          f"{len(mini.selections)} selections)")

    walkthrough = Fixture()
    build_mug_initial(walkthrough)
    build_mug_repairs(walkthrough)
    for key, entry in mini.selections.items():
        if "mug in dish rack" in entry["prompt"]:
            walkthrough.selections[key] = entry
    walkthrough.save(OUT_DIR / "walkthrough.json")
    print(f"wrote {OUT_DIR / 'walkthrough.json'} ({len(walkthrough.completions)} completions, "
          f"{len(walkthrough.selections)} selections)")

    for name in ("kitchen", "groceries", "office"):
        scenario = load_scenario(scenario_path(name))
        synthetic = make_fixture(scenario)
        synthetic.save(OUT_DIR / f"{name}.json")
        print(f"wrote {OUT_DIR / (name + '.json')} ({len(synthetic.completions)} completions)")


if __name__ == "__main__":
    main()
