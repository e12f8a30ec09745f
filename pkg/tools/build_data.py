#!/usr/bin/env python3
"""Generate the shipped scenario and lexicon data files.

Run from the repo root:  python tools/build_data.py
Outputs land in src/stars/data/{scenarios,lexicon}/.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

OUT_SCENARIOS = ROOT / "src" / "stars" / "data" / "scenarios"
OUT_LEXICON = ROOT / "src" / "stars" / "data" / "lexicon"

SURFACE = ["surface"]
RECEPTACLE = ["receptacle"]
OPENABLE_RECEPTACLE = ["receptacle", "openable"]
GRABBABLE = ["grabbable"]

KITCHEN_FIXTURES = [
    ("table", SURFACE),
    ("counter", SURFACE),
    ("dish rack", RECEPTACLE),
    ("garbage", RECEPTACLE),
    ("recycling bin", RECEPTACLE),
    ("pantry", OPENABLE_RECEPTACLE),
    ("cupboard", OPENABLE_RECEPTACLE),
    ("refrigerator", OPENABLE_RECEPTACLE),
    ("dishwasher", OPENABLE_RECEPTACLE),
    ("drawer", OPENABLE_RECEPTACLE),
    ("sink", RECEPTACLE),
]

OFFICE_FIXTURES = [
    ("desk", SURFACE),
    ("chair", SURFACE),
    ("filing cabinet", OPENABLE_RECEPTACLE),
    ("bookshelf", RECEPTACLE),
    ("garbage", RECEPTACLE),
    ("recycling bin", RECEPTACLE),
    ("drawer", OPENABLE_RECEPTACLE),
]

# (class name, start location class, goal destination classes)
KITCHEN_OBJECTS = [
    ("plastic bottle", "table", ["recycling bin"]),
    ("soda can", "table", ["recycling bin"]),
    ("coke can", "counter", ["recycling bin"]),
    ("pepsi can", "table", ["recycling bin"]),
    ("newspaper", "counter", ["recycling bin"]),
    ("apple core", "counter", ["garbage"]),
    ("paper plate", "table", ["garbage"]),
    ("plastic fork", "table", ["garbage"]),
    ("plastic cup", "table", ["garbage"]),
    ("paper cup", "counter", ["garbage"]),
    ("paring knife", "dish rack", ["drawer"]),
    ("metal fork", "dish rack", ["drawer"]),
    ("steak knife", "dish rack", ["drawer"]),
    ("bottle opener", "table", ["drawer"]),
    ("corkscrew", "counter", ["drawer"]),
    ("ceramic plate", "table", ["sink", "dishwasher"]),
    ("plate", "counter", ["sink", "dishwasher"]),
    ("glass tumbler", "table", ["sink", "dishwasher"]),
    ("steak knife", "counter", ["sink", "dishwasher"]),
    ("mug", "counter", ["sink", "dishwasher"]),
    ("mug", "dish rack", ["cupboard"]),
    ("glass tumbler", "dish rack", ["cupboard"]),
    ("ceramic plate", "dish rack", ["cupboard"]),
    ("ceramic bowl", "dish rack", ["cupboard"]),
    ("coffee grinder", "counter", ["cupboard"]),
    ("cereal box", "table", ["pantry"]),
    ("box of aluminum foil", "counter", ["pantry"]),
    ("pop tart box", "table", ["pantry"]),
    ("granola bars", "counter", ["pantry"]),
    ("crackers", "counter", ["pantry"]),
    ("milk", "table", ["refrigerator"]),
    ("half and half", "counter", ["refrigerator"]),
    ("ketchup", "table", ["refrigerator"]),
    ("jar of salsa", "counter", ["refrigerator"]),
    ("apple juice", "table", ["refrigerator"]),
]

KITCHEN_DOOR_GOALS = ["pantry", "cupboard", "refrigerator", "dishwasher", "drawer"]

# Author-judged acceptability annotations for destinations other than the
# designed ground truth.
KITCHEN_ALTERNATIVES = {
    ("plastic bottle", "table"): [("garbage", "reasonable-alternative-location")],
    ("soda can", "table"): [("garbage", "reasonable-alternative-location")],
    ("coke can", "counter"): [("garbage", "reasonable-alternative-location")],
    ("pepsi can", "table"): [("garbage", "reasonable-alternative-location")],
    ("newspaper", "counter"): [("garbage", "reasonable-alternative-location")],
    ("paper plate", "table"): [("recycling bin", "reasonable-alternative-location")],
    ("plastic cup", "table"): [("recycling bin", "reasonable-alternative-location")],
    ("paper cup", "counter"): [("recycling bin", "reasonable-alternative-location")],
    ("ceramic plate", "table"): [
        ("cupboard", "reasonable-alternative-location"),
        ("dish rack", "post-completion-error"),
    ],
    ("plate", "counter"): [
        ("cupboard", "reasonable-alternative-location"),
        ("dish rack", "post-completion-error"),
    ],
    ("glass tumbler", "table"): [
        ("cupboard", "reasonable-alternative-location"),
        ("dish rack", "post-completion-error"),
    ],
    ("steak knife", "counter"): [
        ("drawer", "reasonable-alternative-location"),
        ("dish rack", "post-completion-error"),
    ],
    ("mug", "counter"): [
        ("cupboard", "reasonable-alternative-location"),
        ("dish rack", "post-completion-error"),
    ],
    ("mug", "dish rack"): [
        ("dishwasher", "reasonable-alternative-location"),
        ("sink", "reasonable-alternative-location"),
        ("drawer", "embodiment-limitation"),
    ],
    ("glass tumbler", "dish rack"): [
        ("dishwasher", "reasonable-alternative-location"),
        ("sink", "reasonable-alternative-location"),
    ],
    ("ceramic plate", "dish rack"): [
        ("dishwasher", "reasonable-alternative-location"),
        ("sink", "reasonable-alternative-location"),
    ],
    ("ceramic bowl", "dish rack"): [
        ("dishwasher", "reasonable-alternative-location"),
        ("sink", "reasonable-alternative-location"),
    ],
    ("steak knife", "dish rack"): [("dishwasher", "reasonable-alternative-location")],
    ("cereal box", "table"): [("cupboard", "reasonable-alternative-location")],
    ("crackers", "counter"): [("cupboard", "reasonable-alternative-location")],
    ("granola bars", "counter"): [("cupboard", "reasonable-alternative-location")],
}

GROCERIES_OBJECTS = [
    ("plastic cups", "bag-1", ["cupboard"]),
    ("paper plates", "bag-1", ["cupboard"]),
    ("flour", "bag-1", ["pantry"]),
    ("boxed pasta", "bag-1", ["pantry"]),
    ("can of beans", "bag-1", ["pantry"]),
    ("granola", "bag-2", ["pantry"]),
    ("chips", "bag-2", ["pantry"]),
    ("yogurt", "bag-2", ["refrigerator"]),
    ("cream", "bag-2", ["refrigerator"]),
    ("hummus", "bag-2", ["refrigerator"]),
    ("apple cider", "bag-3", ["refrigerator"]),
    ("cheese", "bag-3", ["refrigerator"]),
    ("orange juice", "bag-3", ["refrigerator"]),
    ("eggs", "bag-3", ["refrigerator"]),
    ("butter", "bag-3", ["refrigerator"]),
]

GROCERIES_ALTERNATIVES = {
    ("plastic cups", "bag-1"): [("pantry", "reasonable-alternative-location")],
    ("flour", "bag-1"): [("cupboard", "reasonable-alternative-location")],
    ("granola", "bag-2"): [("cupboard", "reasonable-alternative-location")],
    ("chips", "bag-2"): [("cupboard", "reasonable-alternative-location")],
}

OFFICE_OBJECTS = [
    ("folder", "desk", ["filing cabinet"]),
    ("file", "desk", ["filing cabinet"]),
    ("paper coffee cup", "desk", ["garbage"]),
    ("tissue", "desk", ["garbage"]),
    ("plastic water bottle", "desk", ["recycling bin"]),
    ("sprite can", "desk", ["recycling bin"]),
    ("dictionary", "desk", ["bookshelf"]),
    ("novel", "desk", ["bookshelf"]),
    ("book", "desk", ["bookshelf"]),
    ("stapler", "desk", ["drawer"]),
    ("pencil", "desk", ["drawer"]),
    ("pen", "desk", ["drawer"]),
]

OFFICE_ALTERNATIVES = {
    ("tissue", "desk"): [("recycling bin", "reasonable-alternative-location")],
    ("plastic water bottle", "desk"): [("garbage", "reasonable-alternative-location")],
    ("sprite can", "desk"): [("garbage", "reasonable-alternative-location")],
}

EXTRA_NOUNS = {
    "cabinet": "cabinet",
    "closet": "closet",
    "shelf": "shelf",
    "floor": "floor",
    "fridge": "refrigerator",
    "trash": "garbage",
    "trash can": "garbage",
    "countertop": "counter",
}

SEMANTICLESS = [
    "turned", "on", "tidy", "clean", "full", "water", "running",
    "of", "dirty", "wet", "dry", "off", "away", "neat",
]


def slug(name: str) -> str:
    return name.replace(" ", "-")


def build_scenario(task, fixtures, objects, door_goal_classes, alternatives, bags=None):
    classes = {}
    instances = []
    fixture_ids = []
    fixture_id_by_class = {}
    for name, props in fixtures:
        classes[name] = {"name": name, "properties": sorted(set(props))}
        fid = f"{slug(name)}-1"
        fixture_ids.append(fid)
        fixture_id_by_class[name] = fid
        entry = {"id": fid, "class": name, "placement": "floor"}
        if "openable" in props:
            entry["door"] = "closed"
        instances.append(entry)
    if bags:
        classes["bag"] = {"name": "bag", "properties": ["receptacle"]}
        for bag_id in bags:
            fixture_ids.append(bag_id)
            instances.append({"id": bag_id, "class": "bag", "placement": "floor"})

    counters: dict[str, int] = {}
    object_goals = {}
    reasonable = {}
    for name, start, dests in objects:
        classes.setdefault(name, {"name": name, "properties": ["grabbable"]})
        counters[name] = counters.get(name, 0) + 1
        oid = f"{slug(name)}-{counters[name]}"
        if start.startswith("bag-"):
            target, relation = start, "in"
        else:
            target = fixture_id_by_class[start]
            relation = "on" if "surface" in dict(fixtures)[start] else "in"
        instances.append(
            {"id": oid, "class": name, "placement": {"relation": relation, "target": target}}
        )
        object_goals[oid] = [
            {"kind": "in", "target": fixture_id_by_class[d]} for d in dests
        ]
        alts = alternatives.get((name, start))
        if alts:
            reasonable[oid] = [
                {"destination": fixture_id_by_class[d], "subcategory": sub} for d, sub in alts
            ]
    doors = {fixture_id_by_class[c]: "closed" for c in door_goal_classes}
    return {
        "task": task,
        "classes": sorted(classes.values(), key=lambda c: c["name"]),
        "instances": instances,
        "fixtures": fixture_ids,
        "ground_truth": {"objects": object_goals, "doors": doors},
        "reasonable_alternatives": reasonable,
    }


def kitchen():
    task = {
        "name": "tidy kitchen",
        "location": "kitchen",
        "invocation": "Tidy kitchen.",
        "setup_instructions": [
            "Repeat the following tasks while an object is on the table.",
            "Clear an object that is on the table.",
            "Done.",
            "Repeat the following tasks while an object is on the counter.",
            "Store an object that is on the counter.",
            "Done.",
            "Repeat the following tasks while an object is in the dish rack.",
            "Unload an object that is in the dish rack.",
            "Done.",
        ],
        "subtasks": [["clear", "table-1"], ["store", "counter-1"], ["unload", "dish-rack-1"]],
    }
    return build_scenario(task, KITCHEN_FIXTURES, KITCHEN_OBJECTS, KITCHEN_DOOR_GOALS, KITCHEN_ALTERNATIVES)


def groceries():
    task = {
        "name": "store groceries",
        "location": "kitchen",
        "invocation": "Store groceries.",
        "setup_instructions": [
            "Repeat the following tasks while an object is in a bag.",
            "Store an object that is in a bag.",
            "Done.",
        ],
        "subtasks": [["store", "bag-1"], ["store", "bag-2"], ["store", "bag-3"]],
    }
    return build_scenario(
        task,
        KITCHEN_FIXTURES,
        GROCERIES_OBJECTS,
        ["cupboard", "pantry", "refrigerator"],
        GROCERIES_ALTERNATIVES,
        bags=["bag-1", "bag-2", "bag-3"],
    )


def office():
    task = {
        "name": "organize office",
        "location": "office",
        "invocation": "Organize office.",
        "setup_instructions": [
            "Repeat the following tasks while an object is on the desk.",
            "Clear an object that is on the desk.",
            "Done.",
        ],
        "subtasks": [["clear", "desk-1"]],
    }
    return build_scenario(
        task, OFFICE_FIXTURES, OFFICE_OBJECTS, ["filing cabinet", "drawer"], OFFICE_ALTERNATIVES
    )


def mini():
    fixtures = [
        ("table", SURFACE),
        ("counter", SURFACE),
        ("dish rack", RECEPTACLE),
        ("cupboard", OPENABLE_RECEPTACLE),
        ("dishwasher", OPENABLE_RECEPTACLE),
        ("drawer", OPENABLE_RECEPTACLE),
        ("sink", RECEPTACLE),
    ]
    objects = [
        ("mug", "dish rack", ["cupboard"]),
        ("plate", "counter", ["sink", "dishwasher"]),
    ]
    alternatives = {
        ("mug", "dish rack"): [
            ("dishwasher", "reasonable-alternative-location"),
            ("sink", "reasonable-alternative-location"),
            ("drawer", "embodiment-limitation"),
        ],
        ("plate", "counter"): [
            ("cupboard", "reasonable-alternative-location"),
            ("dish rack", "post-completion-error"),
        ],
    }
    task = {
        "name": "tidy kitchen",
        "location": "kitchen",
        "invocation": "Tidy kitchen.",
        "setup_instructions": [
            "Repeat the following tasks while an object is in the dish rack.",
            "Unload an object that is in the dish rack.",
            "Done.",
            "Repeat the following tasks while an object is on the counter.",
            "Store an object that is on the counter.",
            "Done.",
        ],
        "subtasks": [["unload", "dish-rack-1"], ["store", "counter-1"]],
    }
    return build_scenario(task, fixtures, objects, ["cupboard", "dishwasher", "drawer"], alternatives)


def lexicon():
    nouns = dict(EXTRA_NOUNS)
    for name, _ in KITCHEN_FIXTURES + OFFICE_FIXTURES:
        nouns[name] = name
    nouns["bag"] = "bag"
    for name, _, _ in KITCHEN_OBJECTS + GROCERIES_OBJECTS + OFFICE_OBJECTS:
        nouns[name] = name
    return {
        "nouns": dict(sorted(nouns.items())),
        "predicates": {
            "closed": {"affordance": "openable", "door_state": "closed"},
            "open": {"affordance": "openable", "door_state": "open"},
            "empty": {"affordance": "fillable"},
        },
        "semanticless": sorted(set(SEMANTICLESS)),
    }


def main():
    OUT_SCENARIOS.mkdir(parents=True, exist_ok=True)
    OUT_LEXICON.mkdir(parents=True, exist_ok=True)
    for name, build in [
        ("kitchen", kitchen),
        ("groceries", groceries),
        ("office", office),
        ("mini", mini),
    ]:
        path = OUT_SCENARIOS / f"{name}.json"
        path.write_text(json.dumps(build(), indent=1) + "\n", encoding="utf-8")
        print(f"wrote {path}")
    path = OUT_LEXICON / "household.json"
    path.write_text(json.dumps(lexicon(), indent=1) + "\n", encoding="utf-8")
    print(f"wrote {path}")

    # Sanity: loaded scenarios must pass validation and hit the designed counts.
    from stars.world import load_scenario

    kitchen_s = load_scenario(OUT_SCENARIOS / "kitchen.json")
    assert len(kitchen_s.task_objects) == 35, len(kitchen_s.task_objects)
    assert len(kitchen_s.fixtures) == 11
    assert kitchen_s.assertion_total == 40
    groceries_s = load_scenario(OUT_SCENARIOS / "groceries.json")
    assert len(groceries_s.task_objects) == 15
    assert groceries_s.assertion_total == 18
    office_s = load_scenario(OUT_SCENARIOS / "office.json")
    assert len(office_s.task_objects) == 12
    assert len(office_s.fixtures) == 7
    assert office_s.assertion_total == 14
    mini_s = load_scenario(OUT_SCENARIOS / "mini.json")
    assert len(mini_s.task_objects) == 2
    assert mini_s.assertion_total == 5
    print("all scenarios validate")


if __name__ == "__main__":
    main()
