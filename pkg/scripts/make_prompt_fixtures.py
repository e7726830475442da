#!/usr/bin/env python3
"""Regenerate the golden prompt fixtures (tests/fixtures/prompts/).

Run after any deliberate template change, then commit the diff:
    python scripts/make_prompt_fixtures.py
"""

from __future__ import annotations

import pathlib

from langworld.generator import FAMILIES, generate
from langworld.promptkit import STRATEGIES, Strategy, build_system_prompt
from langworld.tasks import load_task
from langworld.world import load_scene

OUT_DIR = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "prompts"

MEMORY_SAMPLE = (
    "In the last trial I walked past the target room; this time turn right at the start."
)


def fixture_text(family: str, strategy_kind: str) -> str:
    scene_doc, task_doc = generate(family, 0)
    task = load_task(task_doc)
    world = load_scene(scene_doc)
    strategy = Strategy(strategy_kind)
    blocks = []
    for role in task.roles:
        agent = world.agents[role.agent_id]
        memory = MEMORY_SAMPLE if strategy.is_reflexion else ""
        prompt = build_system_prompt(task, agent, strategy, memory=memory)
        blocks.append(f"=== role: {role.role} ({role.agent_id}) ===\n{prompt}")
    return "\n\n".join(blocks) + "\n"


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for family in FAMILIES:
        for strategy_kind in STRATEGIES:
            name = f"{family.lower().replace('-', '_')}_{strategy_kind.lower()}.txt"
            path = OUT_DIR / name
            path.write_text(fixture_text(family, strategy_kind))
            print(f"wrote {path.relative_to(OUT_DIR.parent.parent.parent)}")


if __name__ == "__main__":
    main()
