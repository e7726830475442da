"""Seeded procedural scenes and tasks for every family.

The generated layouts are deliberately tame: blocking receptacles sit on
perimeter cells with free approach neighbors, floors stay connected, and goal
objects are always reachable, so expert trajectories exist for every seed.
"""

from __future__ import annotations

import random
from typing import Any, Optional

from .perception import narrate_scene
from .tasks import randomize_rearrangement, task_to_doc, load_task, TaskSpec
from .world import load_scene, scene_to_doc

COLORS = ("red", "green", "blue", "yellow", "purple")
IG_TYPES = ("key", "ball", "box")
FOODS = ("lettuce", "apple", "bread", "potato", "tomato")
WAH_TARGETS = ("wine", "pudding", "juice", "book")

FAMILIES = ("IG", "Rearrangement", "IQA", "Household", "MA-Teach", "MA-WAH")


def _free_cells(width: int, height: int, taken: set[tuple[int, int]]) -> list[tuple[int, int]]:
    return [(x, y) for x in range(width) for y in range(height) if (x, y) not in taken]


def _place(rng: random.Random, taken: set[tuple[int, int]], width: int, height: int) -> list[int]:
    options = _free_cells(width, height, taken)
    cell = rng.choice(options)
    taken.add(cell)
    return list(cell)


# ---------------------------------------------------------------------------
# IG


def make_ig(seed: int) -> tuple[dict, dict]:
    rng = random.Random(("ig", seed).__repr__())
    width = height = 7
    taken: set[tuple[int, int]] = set()
    agent_cell = _place(rng, taken, width, height)

    combos = [(c, t) for c in COLORS for t in IG_TYPES]
    rng.shuffle(combos)
    count = rng.randint(3, 5)
    objects: list[dict[str, Any]] = []
    categories: list[str] = []
    for i in range(count):
        color, kind = combos[i]
        category = f"{color} {kind}"
        categories.append(category)
        objects.append(
            {
                "id": f"{color}_{kind}_{i}",
                "category": category,
                "cell": _place(rng, taken, width, height),
                "affordances": ["pickupable"],
            }
        )
    variant = rng.choice(("goto", "pickup", "put_next", "toggle"))
    goal: list[dict[str, Any]]
    if variant == "toggle":
        color = rng.choice(COLORS)
        category = f"{color} door"
        objects.append(
            {
                "id": f"{color}_door_{count}",
                "category": category,
                "cell": _place(rng, taken, width, height),
                "affordances": ["toggleable"],
            }
        )
        instruction = f"open the {category}."
        goal = [{"kind": "ObjectState", "object": category, "flag": "toggled", "value": True}]
    elif variant == "goto":
        category = rng.choice(categories)
        instruction = f"go to the {category}."
        goal = [{"kind": "AgentAt", "object": category}]
    elif variant == "pickup":
        category = rng.choice(categories)
        instruction = f"pick up the {category}."
        goal = [{"kind": "Holding", "object": category}]
    else:
        first, second = rng.sample(categories, 2)
        instruction = f"put the {first} next to the {second}."
        goal = [{"kind": "ObjectNextTo", "object": first, "other": second}]

    scene = {
        "schema": "langworld/scene@1",
        "step_size_meters": 1.0,
        "seed": seed,
        "rooms": [{"id": "grid_0", "category": "generic", "bounds": [0, 0, width - 1, height - 1]}],
        "objects": objects,
        "agents": [
            {
                "id": "agent_0",
                "cell": agent_cell,
                "heading": rng.choice(["north", "east", "south", "west"]),
                "config": {
                    "view_shape": "rect",
                    "view_distance": 7,
                    "side_steps": 3,
                    "manipulate_distance": 1,
                    "inventory_capacity": 1,
                },
            }
        ],
    }
    task = {
        "schema": "langworld/task@1",
        "task_type": "IG",
        "scene_ref": f"ig-{seed}",
        "instruction": instruction,
        "goal": goal,
        "roles": [{"agent_id": "agent_0", "role": "solo", "action_space": "ig"}],
        "step_limit": 50,
        "scene": scene,
    }
    return scene, task


# ---------------------------------------------------------------------------
# Kitchen base used by Rearrangement / IQA / Household


def _kitchen_scene(rng: random.Random, seed: int, agent_overrides: Optional[dict] = None) -> dict:
    width = height = 8
    taken: set[tuple[int, int]] = set()
    perimeter_slots = [(1, 7), (4, 7), (7, 4), (7, 1)]
    blockers = [
        ("fridge_0", "fridge", ["openable", "receptacle", "cooler", "blocking"]),
        ("cabinet_0", "cabinet", ["openable", "receptacle", "blocking"]),
        ("cabinet_1", "cabinet", ["openable", "receptacle", "blocking"]),
    ]
    objects: list[dict[str, Any]] = []
    for (oid, category, affordances), slot in zip(blockers, perimeter_slots):
        taken.add(slot)
        objects.append(
            {"id": oid, "category": category, "cell": list(slot), "affordances": affordances}
        )
    surfaces = [
        ("diningtable_0", "diningtable", ["receptacle"]),
        ("countertop_0", "countertop", ["receptacle"]),
        ("sink_0", "sink", ["receptacle", "cleaner"]),
        ("stoveburner_0", "stoveburner", ["receptacle", "heater"]),
    ]
    for oid, category, affordances in surfaces:
        objects.append(
            {
                "id": oid,
                "category": category,
                "cell": _place(rng, taken, width, height),
                "affordances": affordances,
            }
        )
    foods = list(FOODS)
    rng.shuffle(foods)
    receptacle_ids = [o["id"] for o in objects if "receptacle" in o["affordances"]]
    for i, food in enumerate(foods[: rng.randint(3, 5)]):
        entry: dict[str, Any] = {
            "id": f"{food}_0",
            "category": food,
            "affordances": ["pickupable", "sliceable"],
            "state": {"dirty": bool(rng.random() < 0.5)},
        }
        if rng.random() < 0.4:
            entry["container"] = rng.choice(receptacle_ids)
        else:
            entry["cell"] = _place(rng, taken, width, height)
        objects.append(entry)
    extras = rng.randint(0, 2)
    for i in range(extras):
        objects.append(
            {
                "id": f"mug_{i}",
                "category": "mug",
                "cell": _place(rng, taken, width, height),
                "affordances": ["pickupable"],
            }
        )
    agent_cfg = {
        "view_shape": "cone",
        "half_angle": 60,
        "view_distance": 8.0,
        "manipulate_distance": 8.0,
        "inventory_capacity": 1,
    }
    if agent_overrides:
        agent_cfg.update(agent_overrides)
    agent_cell = _place(rng, taken, width, height)
    return {
        "schema": "langworld/scene@1",
        "step_size_meters": 1.0,
        "seed": seed,
        "rooms": [{"id": "kitchen_0", "category": "kitchen", "bounds": [0, 0, width - 1, height - 1]}],
        "objects": objects,
        "agents": [
            {
                "id": "agent_0",
                "cell": agent_cell,
                "heading": rng.choice(["north", "east", "south", "west"]),
                "config": agent_cfg,
            }
        ],
    }


def make_rearrangement(seed: int) -> tuple[dict, dict]:
    rng = random.Random(("rearrangement", seed).__repr__())
    base_doc = _kitchen_scene(rng, seed)
    base = load_scene(base_doc)
    n = rng.randint(1, 3)
    shuffled, target = randomize_rearrangement(base, n, seed=seed * 31 + 7)
    scene = scene_to_doc(shuffled)
    task = {
        "schema": "langworld/task@1",
        "task_type": "Rearrangement",
        "scene_ref": f"rearrangement-{seed}",
        "instruction": (
            "Identify which objects have changed and reset those objects to their original state."
        ),
        "goal": [],
        "roles": [{"agent_id": "agent_0", "role": "solo", "action_space": "rearrangement"}],
        "step_limit": 80,
        "target_state": scene_to_doc(target),
        "original_status": narrate_scene(target),
        "scene": scene,
    }
    return scene, task


def make_iqa(seed: int) -> tuple[dict, dict]:
    rng = random.Random(("iqa", seed).__repr__())
    scene = _kitchen_scene(rng, seed, agent_overrides={"manipulate_distance": 1})
    world = load_scene(scene)
    qtype = ("Exists", "Counts", "Contains")[seed % 3]
    categories = sorted({o.category for o in world.objects.values() if o.has("pickupable")})
    if qtype == "Exists":
        if rng.random() < 0.5:
            category = rng.choice(categories)
        else:
            absent = sorted(set(FOODS + ("fork", "cup")) - set(categories))
            category = rng.choice(absent)
        present = any(o.category == category for o in world.objects.values())
        question = f"Is there a {category} in the room?"
        expected = "True" if present else "False"
    elif qtype == "Counts":
        category = rng.choice(categories)
        count = sum(1 for o in world.objects.values() if o.category == category)
        question = f"Count the number of {category}s in this room."
        expected = str(count)
    else:
        receptacles = sorted(
            o.id for o in world.objects.values() if o.has("receptacle") and o.has("openable")
        )
        recep = rng.choice(receptacles)
        category = rng.choice(categories)
        inside = any(
            world.objects[cid].category == category for cid in world.objects[recep].contents
        )
        question = f"Is there {category} in the {recep}?"
        expected = "True" if inside else "False"
    task = {
        "schema": "langworld/task@1",
        "task_type": "IQA",
        "scene_ref": f"iqa-{seed}",
        "instruction": question,
        "goal": [],
        "expected_answer": expected,
        "question_type": qtype,
        "roles": [{"agent_id": "agent_0", "role": "solo", "action_space": "iqa"}],
        "step_limit": 60,
        "scene": scene,
    }
    return scene, task


def make_household(seed: int) -> tuple[dict, dict]:
    rng = random.Random(("household", seed).__repr__())
    scene = _kitchen_scene(rng, seed, agent_overrides={"manipulate_distance": 1})
    world = load_scene(scene)
    foods = sorted(
        o.id for o in world.objects.values() if o.category in FOODS and o.has("pickupable")
    )
    food_id = rng.choice(foods)
    food = world.objects[food_id].category
    recep = rng.choice(["diningtable_0", "countertop_0"])
    variant = rng.choice(("plain", "clean", "hot", "cold", "sliced"))
    conditions: list[dict[str, Any]] = []
    adjective = ""
    if variant == "clean":
        adjective = "clean "
        conditions.append({"kind": "ObjectState", "object": food_id, "flag": "dirty", "value": False})
        for entry in scene["objects"]:
            if entry["id"] == food_id:
                entry.setdefault("state", {})["dirty"] = True
    elif variant == "hot":
        adjective = "hot "
        conditions.append(
            {"kind": "ObjectState", "object": food_id, "flag": "temperature", "value": "hot"}
        )
    elif variant == "cold":
        adjective = "cold "
        conditions.append(
            {"kind": "ObjectState", "object": food_id, "flag": "temperature", "value": "cold"}
        )
    elif variant == "sliced":
        adjective = "sliced "
        conditions.append({"kind": "ObjectState", "object": food_id, "flag": "sliced", "value": True})
        for entry in scene["objects"]:
            if entry["id"] == food_id:
                entry.setdefault("state", {})["sliced"] = False
    recep_cat = world.objects[recep].category
    conditions.append(
        {
            "kind": "ObjectIn",
            "object": food_id,
            "receptacle": recep,
            "description": f"One {adjective}{food} needs to be on {recep_cat}.",
        }
    )
    # instrument verbs (heat/cool/clean) only exist in the high-level space
    space = "household_high" if variant in ("hot", "cold", "clean") else "household"
    task = {
        "schema": "langworld/task@1",
        "task_type": "Household",
        "scene_ref": f"household-{seed}",
        "instruction": f"put a {adjective}{food} in {recep_cat}.",
        "goal": conditions,
        "roles": [{"agent_id": "agent_0", "role": "solo", "action_space": space}],
        "step_limit": 80,
        "scene": scene,
    }
    return scene, task


def make_ma_teach(seed: int) -> tuple[dict, dict]:
    rng = random.Random(("teach", seed).__repr__())
    width = height = 8
    taken: set[tuple[int, int]] = set()
    dresser_cell = (1, 7)
    armchair_cell = (6, 2)
    taken.update({dresser_cell, armchair_cell})
    objects = [
        {"id": "dresser_0", "category": "dresser", "cell": list(dresser_cell),
         "affordances": ["receptacle", "blocking"]},
        {"id": "armchair_0", "category": "armchair", "cell": list(armchair_cell),
         "affordances": ["receptacle"]},
        {"id": "pillow_0", "category": "pillow", "container": "dresser_0",
         "affordances": ["pickupable"]},
        {"id": "desklamp_0", "category": "desklamp",
         "cell": _place(rng, taken, width, height), "affordances": ["toggleable"]},
    ]
    commander_cell = _place(rng, taken, width, height)
    follower_cell = _place(rng, taken, width, height)
    scene = {
        "schema": "langworld/scene@1",
        "step_size_meters": 1.0,
        "seed": seed,
        "rooms": [{"id": "bedroom_0", "category": "bedroom", "bounds": [0, 0, width - 1, height - 1]}],
        "objects": objects,
        "agents": [
            {
                "id": "commander",
                "name": "commander",
                "cell": commander_cell,
                "heading": "north",
                "config": {
                    "view_shape": "cone",
                    "half_angle": 60,
                    "view_distance": 40.0,
                    "manipulate_distance": 1,
                    "inventory_capacity": 0,
                    "oracle_vision": True,
                },
            },
            {
                "id": "follower",
                "name": "follower",
                "cell": follower_cell,
                "heading": "north",
                "config": {
                    "view_shape": "cone",
                    "half_angle": 60,
                    "view_distance": 8.0,
                    "manipulate_distance": 8.0,
                    "inventory_capacity": 1,
                },
            },
        ],
    }
    task = {
        "schema": "langworld/task@1",
        "task_type": "MA-Teach",
        "scene_ref": f"teach-{seed}",
        "instruction": "Put all Pillow on any ArmChair.",
        "goal": [
            {
                "kind": "ObjectIn",
                "object": "pillow",
                "receptacle": "armchair",
                "description": "One pillow needs to be on armchair.",
            }
        ],
        "roles": [
            {"agent_id": "commander", "role": "commander", "action_space": "ma_teach_commander"},
            {"agent_id": "follower", "role": "follower", "action_space": "ma_teach_follower"},
        ],
        "step_limit": 30,
        "scene": scene,
    }
    return scene, task


def make_ma_wah(seed: int) -> tuple[dict, dict]:
    rng = random.Random(("wah", seed).__repr__())
    rooms = [
        {"id": "livingroom_0", "category": "livingroom", "bounds": [0, 0, 4, 4]},
        {"id": "kitchen_0", "category": "kitchen", "bounds": [5, 0, 9, 4]},
        {"id": "bedroom_0", "category": "bedroom", "bounds": [10, 0, 14, 4]},
        {"id": "bathroom_0", "category": "bathroom", "bounds": [15, 0, 19, 4]},
    ]
    objects: list[dict[str, Any]] = [
        {"id": "coffeetable_0", "category": "coffeetable", "cell": [2, 2],
         "affordances": ["receptacle"]},
    ]
    containers = []
    kitchen_slots = [(5, 4), (7, 4), (9, 4), (5, 0), (9, 0)]
    for i, slot in enumerate(kitchen_slots[:4]):
        cid = f"kitchencabinet_{i}"
        containers.append(cid)
        objects.append(
            {"id": cid, "category": "kitchencabinet", "cell": list(slot),
             "affordances": ["openable", "receptacle", "blocking"]}
        )
    objects.append(
        {"id": "fridge_0", "category": "fridge", "cell": list(kitchen_slots[4]),
         "affordances": ["openable", "receptacle", "cooler", "blocking"]}
    )
    containers.append("fridge_0")
    objects.append(
        {"id": "cabinet_0", "category": "cabinet", "cell": [12, 4],
         "affordances": ["openable", "receptacle", "blocking"]}
    )
    containers.append("cabinet_0")
    objects.append(
        {"id": "cabinet_1", "category": "cabinet", "cell": [17, 4],
         "affordances": ["openable", "receptacle", "blocking"]}
    )
    containers.append("cabinet_1")

    target_cat = rng.choice(WAH_TARGETS)
    target_container = rng.choice(containers)
    objects.append(
        {"id": f"{target_cat}_0", "category": target_cat, "container": target_container,
         "affordances": ["pickupable"]}
    )
    decoys = [c for c in containers if c != target_container]
    rng.shuffle(decoys)
    for i, container in enumerate(decoys[: rng.randint(1, 3)]):
        objects.append(
            {"id": f"book_{i + 1}", "category": "book", "container": container,
             "affordances": ["pickupable"]}
        )
    start_rooms = rng.sample(["kitchen_0", "bedroom_0", "bathroom_0", "livingroom_0"], 2)
    centers = {"livingroom_0": [2, 1], "kitchen_0": [7, 2], "bedroom_0": [12, 2], "bathroom_0": [17, 2]}
    alice_cell = centers[start_rooms[0]]
    bob_cell = centers[start_rooms[1]]
    scene = {
        "schema": "langworld/scene@1",
        "step_size_meters": 1.0,
        "seed": seed,
        "rooms": rooms,
        "objects": objects,
        "agents": [
            {"id": "alice", "name": "Alice", "pronoun": "she", "cell": alice_cell,
             "heading": "north",
             "config": {"view_shape": "cone", "half_angle": 60, "view_distance": 8.0,
                        "manipulate_distance": 8.0, "inventory_capacity": 2}},
            {"id": "bob", "name": "Bob", "pronoun": "he", "cell": bob_cell,
             "heading": "north",
             "config": {"view_shape": "cone", "half_angle": 60, "view_distance": 8.0,
                        "manipulate_distance": 8.0, "inventory_capacity": 2}},
        ],
    }
    task = {
        "schema": "langworld/task@1",
        "task_type": "MA-WAH",
        "scene_ref": f"wah-{seed}",
        "instruction": f"Find and put 1 {target_cat} onto the coffeetable_0.",
        "goal": [
            {"kind": "ObjectIn", "object": target_cat, "receptacle": "coffeetable_0",
             "description": f"One {target_cat} needs to be on coffeetable_0."}
        ],
        "roles": [
            {"agent_id": "alice", "role": "peer", "action_space": "ma_wah"},
            {"agent_id": "bob", "role": "peer", "action_space": "ma_wah"},
        ],
        "step_limit": 30,
        "scene": scene,
    }
    return scene, task


_MAKERS = {
    "IG": make_ig,
    "Rearrangement": make_rearrangement,
    "IQA": make_iqa,
    "Household": make_household,
    "MA-Teach": make_ma_teach,
    "MA-WAH": make_ma_wah,
}


def generate(family: str, seed: int) -> tuple[dict, dict]:
    """(scene_doc, task_doc) for a seeded task of the given family."""
    if family not in _MAKERS:
        raise ValueError(f"unknown task family {family!r}; pick from {FAMILIES}")
    return _MAKERS[family](seed)


def generate_task(family: str, seed: int) -> TaskSpec:
    _, task_doc = generate(family, seed)
    return load_task(task_doc)
