"""Hand-built scene documents shared across the test suite."""

from __future__ import annotations

import random
from typing import Any

from langworld.world import load_scene


def minimal_doc() -> dict[str, Any]:
    return {
        "schema": "langworld/scene@1",
        "rooms": [{"id": "room_0", "category": "generic", "bounds": [0, 0, 2, 2]}],
        "agents": [{"id": "agent_0", "cell": [0, 0], "heading": "north"}],
    }


def kitchen_doc() -> dict[str, Any]:
    """9x9 kitchen with receptacles, a blocking cabinet, and small objects."""
    return {
        "schema": "langworld/scene@1",
        "step_size_meters": 1.0,
        "rooms": [{"id": "kitchen_0", "category": "kitchen", "bounds": [0, 0, 8, 8]}],
        "objects": [
            {
                "id": "fridge_0",
                "category": "fridge",
                "cell": [7, 7],
                "affordances": ["openable", "receptacle", "cooler", "blocking"],
            },
            {"id": "egg_0", "category": "egg", "container": "fridge_0", "affordances": ["pickupable"]},
            {
                "id": "cabinet_0",
                "category": "cabinet",
                "cell": [4, 4],
                "affordances": ["openable", "receptacle", "blocking"],
            },
            {
                "id": "diningtable_0",
                "category": "diningtable",
                "cell": [2, 6],
                "affordances": ["receptacle"],
            },
            {
                "id": "sink_0",
                "category": "sink",
                "cell": [6, 1],
                "affordances": ["receptacle", "cleaner"],
            },
            {
                "id": "microwave_0",
                "category": "microwave",
                "cell": [0, 7],
                "affordances": ["openable", "receptacle", "heater", "toggleable", "blocking"],
            },
            {
                "id": "lettuce_0",
                "category": "lettuce",
                "cell": [3, 2],
                "affordances": ["pickupable", "sliceable"],
                "state": {"dirty": True},
            },
            {"id": "mug_0", "category": "mug", "cell": [5, 5], "affordances": ["pickupable"]},
            {
                "id": "lamp_0",
                "category": "lamp",
                "cell": [1, 1],
                "affordances": ["toggleable"],
            },
        ],
        "agents": [
            {
                "id": "agent_0",
                "cell": [4, 0],
                "heading": "north",
                "config": {
                    "view_distance": 8.0,
                    "view_shape": "cone",
                    "half_angle": 60,
                    "manipulate_distance": 1,
                    "inventory_capacity": 1,
                },
            }
        ],
    }


def kitchen_world():
    return load_scene(kitchen_doc())


def corridor_doc() -> dict[str, Any]:
    """1x5 corridor used for straight-line movement and drop tests."""
    return {
        "schema": "langworld/scene@1",
        "rooms": [{"id": "hall_0", "category": "generic", "bounds": [0, 0, 0, 4]}],
        "objects": [
            {"id": "box_0", "category": "red box", "cell": [0, 3], "affordances": ["blocking"]},
            {"id": "ball_0", "category": "red ball", "cell": [0, 1], "affordances": ["pickupable"]},
        ],
        "agents": [
            {
                "id": "agent_0",
                "cell": [0, 0],
                "heading": "north",
                "config": {"view_shape": "rect", "view_distance": 7, "side_steps": 3},
            }
        ],
    }


def wah_transcript_fixture() -> tuple[dict[str, Any], dict[str, Any], list[str], list[str]]:
    """Canonical two-agent watch-and-help fixture: scene, task, and the two
    agent scripts that walk the recorded cooperative hunt for the wine."""
    kitchen_containers = [
        ("kitchencabinet_0", [5, 4]),
        ("kitchencabinet_1", [6, 4]),
        ("kitchencabinet_2", [7, 4]),
        ("kitchencabinet_3", [8, 4]),
        ("kitchencabinet_4", [9, 4]),
        ("kitchencabinet_5", [5, 0]),
        ("kitchencabinet_6", [6, 0]),
        ("kitchencabinet_7", [7, 0]),
        ("stove_0", [8, 0]),
        ("dishwasher_0", [9, 0]),
        ("fridge_0", [9, 1]),
        ("fridge_1", [9, 2]),
        ("microwave_0", [9, 3]),
    ]
    objects: list[dict[str, Any]] = [
        {"id": "coffeetable_0", "category": "coffeetable", "cell": [2, 2],
         "affordances": ["receptacle"]},
        {"id": "pudding_0", "category": "pudding", "container": "coffeetable_0",
         "affordances": ["pickupable"]},
        {"id": "juice_0", "category": "juice", "container": "coffeetable_0",
         "affordances": ["pickupable"]},
        {"id": "juice_1", "category": "juice", "container": "coffeetable_0",
         "affordances": ["pickupable"]},
        {"id": "cabinet_0", "category": "cabinet", "cell": [12, 4],
         "affordances": ["openable", "receptacle", "blocking"]},
        {"id": "book_3", "category": "book", "container": "cabinet_0",
         "affordances": ["pickupable"]},
        {"id": "wine_0", "category": "wine", "container": "fridge_0",
         "affordances": ["pickupable"]},
        {"id": "book_1", "category": "book", "container": "kitchencabinet_2",
         "affordances": ["pickupable"]},
        {"id": "book_2", "category": "book", "container": "kitchencabinet_5",
         "affordances": ["pickupable"]},
    ]
    for cid, cell in kitchen_containers:
        category = cid.rsplit("_", 1)[0]
        affordances = ["openable", "receptacle", "blocking"]
        if category == "fridge":
            affordances.append("cooler")
        objects.append(
            {"id": cid, "category": category, "cell": cell, "affordances": affordances}
        )
    scene = {
        "schema": "langworld/scene@1",
        "step_size_meters": 1.0,
        "seed": 0,
        "rooms": [
            {"id": "livingroom_0", "category": "livingroom", "bounds": [0, 0, 4, 4]},
            {"id": "kitchen_0", "category": "kitchen", "bounds": [5, 0, 9, 4]},
            {"id": "bedroom_0", "category": "bedroom", "bounds": [10, 0, 14, 4]},
            {"id": "bathroom_0", "category": "bathroom", "bounds": [15, 0, 19, 4]},
        ],
        "objects": objects,
        "agents": [
            {"id": "alice", "name": "Alice", "pronoun": "she", "cell": [7, 2],
             "heading": "north",
             "config": {"view_shape": "cone", "half_angle": 60, "view_distance": 8.0,
                        "manipulate_distance": 8.0, "inventory_capacity": 2}},
            {"id": "bob", "name": "Bob", "pronoun": "he", "cell": [12, 2],
             "heading": "north",
             "config": {"view_shape": "cone", "half_angle": 60, "view_distance": 8.0,
                        "manipulate_distance": 8.0, "inventory_capacity": 2}},
        ],
    }
    task = {
        "schema": "langworld/task@1",
        "task_type": "MA-WAH",
        "scene_ref": "wah-transcript",
        "instruction": "Find and put 1 wine onto the coffeetable_0.",
        "goal": [
            {"kind": "ObjectIn", "object": "wine", "receptacle": "coffeetable_0",
             "description": "One wine needs to be on coffeetable_0."}
        ],
        "roles": [
            {"agent_id": "alice", "role": "peer", "action_space": "ma_wah"},
            {"agent_id": "bob", "role": "peer", "action_space": "ma_wah"},
        ],
        "step_limit": 30,
        "scene": scene,
    }
    alice_script = [
        "Thought: The task is to find and put 1 wine onto the coffeetable_0. I am currently "
        "in the kitchen with several unchecked containers. I will start by checking these "
        "containers as the wine could be in any of them.",
        "Act: chat [I will check the kitchen cabinets.]",
        "Act: go_check [kitchencabinet_0].",
        "Act: go_check [kitchencabinet_1]",
        "Act: go_check [kitchencabinet_2]",
        "Act: go_check [kitchencabinet_3]",
        "Act: go_check [kitchencabinet_4]",
        "Act: go_check [kitchencabinet_5]",
    ]
    bob_script = [
        "Thought: Since I need to find the wine and I am currently in an unexplored bedroom, "
        "I'll first check the unchecked container in the bedroom, the cabinet_0. If the wine "
        "is not there, I'll move to the next unexplored room.",
        "Act: go_check [cabinet_0].",
        "Act: go_explore [kitchen]",
        "Act: go_check [fridge_0]",
        "Act: go_grab [wine_0]",
        "Act: go_explore [livingroom]",
        "Act: go_put [coffeetable_0]",
    ]
    return scene, task, alice_script, bob_script


def random_scene_doc(rng: random.Random, max_side: int = 12) -> dict[str, Any]:
    """Seeded random single-room scene for property tests."""
    width = rng.randint(3, max_side)
    height = rng.randint(3, max_side)
    doc: dict[str, Any] = {
        "schema": "langworld/scene@1",
        "rooms": [{"id": "room_0", "category": "generic", "bounds": [0, 0, width - 1, height - 1]}],
        "objects": [],
        "agents": [],
        "walls": [],
    }
    cells = [(x, y) for x in range(width) for y in range(height)]
    rng.shuffle(cells)
    agent_cell = cells.pop()
    if rng.random() < 0.5:
        shape = {"view_shape": "cone", "half_angle": rng.choice([30, 45, 60, 90])}
    else:
        shape = {"view_shape": "rect", "side_steps": rng.randint(0, 4)}
    doc["agents"].append(
        {
            "id": "agent_0",
            "cell": list(agent_cell),
            "heading": rng.choice(["north", "east", "south", "west"]),
            "config": {
                "view_distance": rng.choice([2, 4, 7, 8.0, 12.0]),
                "manipulate_distance": 1,
                **shape,
            },
        }
    )
    n_objects = rng.randint(0, min(10, len(cells)))
    receptacles: list[str] = []
    for i in range(n_objects):
        cell = cells.pop()
        roll = rng.random()
        if roll < 0.3:
            affordances = ["blocking"]
            category = "crate"
        elif roll < 0.6:
            affordances = ["openable", "receptacle"]
            category = "cabinet"
        elif roll < 0.75:
            affordances = ["receptacle"]
            category = "table"
        else:
            affordances = ["pickupable"]
            category = "ball"
        entry: dict[str, Any] = {
            "id": f"{category}_{i}",
            "category": category,
            "cell": list(cell),
            "affordances": affordances,
        }
        if "openable" in affordances:
            entry["state"] = {"open": rng.random() < 0.5}
        doc["objects"].append(entry)
        if "receptacle" in affordances:
            receptacles.append(entry["id"])
    for j, recep in enumerate(receptacles):
        if rng.random() < 0.6:
            doc["objects"].append(
                {
                    "id": f"trinket_{j}",
                    "category": "trinket",
                    "container": recep,
                    "affordances": ["pickupable"],
                }
            )
    n_walls = rng.randint(0, width * height // 3)
    for _ in range(n_walls):
        x = rng.randint(0, width - 1)
        y = rng.randint(0, height - 1)
        if rng.random() < 0.5 and x + 1 < width:
            doc["walls"].append([[x, y], [x + 1, y]])
        elif y + 1 < height:
            doc["walls"].append([[x, y], [x, y + 1]])
    return doc
