#!/usr/bin/env python3
"""Measure mean engine step interval (backend wait excluded) over long
scripted episodes, the same quantity the acceptance gate bounds at 5 ms.

    python scripts/latency_probe.py --steps 10000
"""

from __future__ import annotations

import argparse

from langworld.backends import ScriptedBackend
from langworld.generator import generate
from langworld.runtime import Limits, run_episode
from langworld.tasks import load_task
from langworld.world import load_scene


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=10_000)
    parser.add_argument("--family", default="Rearrangement")
    args = parser.parse_args()

    _, task_doc = generate(args.family, 0)
    task_doc["step_limit"] = 2_000
    task = load_task(task_doc)
    lap_script = ["Act: turn_left", "Act: move_ahead", "Act: turn_right", "Act: move_ahead"] * 500

    total_steps = 0
    total_seconds = 0.0
    lap = 0
    while total_steps < args.steps:
        world = load_scene(task_doc["scene"])
        episode = run_episode(
            world,
            task,
            {task.solo_agent: ScriptedBackend(list(lap_script))},
            seed=lap,
            task_ref=f"latency-{lap}",
            scene_doc=task_doc["scene"],
            task_doc=task_doc,
            limits=Limits(llm_call_cap=10_000),
        )
        total_steps += episode.engine_steps
        total_seconds += episode.engine_seconds
        lap += 1

    mean_ms = 1000.0 * total_seconds / total_steps
    print(f"{total_steps} steps over {lap} episodes")
    print(f"mean engine step interval: {mean_ms:.3f} ms")


if __name__ == "__main__":
    main()
