"""Task definitions, goal conditions, goal checking, and rearrangement setup."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .actions import Feedback
from .errors import InvalidTask, NotEnoughObjects, SchemaError
from .world import (
    Cell,
    ObjectEntity,
    WorldState,
    compare_status,
    load_scene,
    occupancy_grid,
)

TASK_SCHEMA = "langworld/task@1"

TASK_TYPES = ("IG", "Rearrangement", "IQA", "Household", "MA-Teach", "MA-WAH")

ROLES = ("solo", "commander", "follower", "peer")

GOAL_KINDS = ("ObjectIn", "ObjectState", "ObjectNextTo", "AgentAt", "Holding", "AnswerEquals")

STATE_FLAGS = ("open", "toggled", "sliced", "dirty", "temperature")


@dataclass
class GoalCondition:
    kind: str
    a: Optional[str] = None  # object pattern (id or category)
    b: Optional[str] = None  # receptacle / second object pattern
    flag: Optional[str] = None
    value: Any = None
    description: Optional[str] = None

    def describe(self) -> str:
        if self.description:
            return self.description
        if self.kind == "ObjectIn":
            return f"One {self.a} needs to be on {self.b}."
        if self.kind == "ObjectState":
            if self.flag == "dirty":
                return f"One {self.a} needs to be {'dirty' if self.value else 'clean'}."
            if self.flag == "temperature":
                return f"One {self.a} needs to be {self.value}."
            if self.flag == "sliced":
                return f"One {self.a} needs to be sliced."
            if self.flag == "open":
                return f"{self.a} needs to be {'open' if self.value else 'closed'}."
            return f"{self.a} needs to be toggled {'on' if self.value else 'off'}."
        if self.kind == "ObjectNextTo":
            return f"One {self.a} needs to be next to {self.b}."
        if self.kind == "AgentAt":
            return f"You need to be at {self.a}."
        if self.kind == "Holding":
            return f"You need to hold {self.a}."
        return f"The answer needs to be {self.value}."


@dataclass
class Role:
    agent_id: str
    role: str
    action_space: str


@dataclass
class TaskSpec:
    task_type: str
    scene_ref: str
    instruction: str
    goal: list[GoalCondition] = field(default_factory=list)
    expected_answer: Optional[str] = None
    question_type: Optional[str] = None  # IQA: Exists | Contains | Counts
    target_state: Optional[WorldState] = None
    baseline_diff: list[tuple[str, str]] = field(default_factory=list)
    roles: list[Role] = field(default_factory=list)
    step_limit: int = 50
    original_status: Optional[str] = None  # Rearrangement memory block

    @property
    def solo_agent(self) -> str:
        return self.roles[0].agent_id


@dataclass
class GoalReport:
    success: bool
    satisfied: int
    total: int
    failed_descriptions: list[str] = field(default_factory=list)


def _pattern_matches(pattern: str, obj: ObjectEntity) -> bool:
    return obj.id == pattern or obj.category.lower() == pattern.lower()


def _matching(world: WorldState, pattern: str) -> list[ObjectEntity]:
    return [obj for obj in world.objects.values() if _pattern_matches(pattern, obj)]


def _chebyshev(a: Cell, b: Cell) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def _answers_equal(expected: Any, answer: Any) -> bool:
    if answer is None:
        return False
    e, a = str(expected).strip(), str(answer).strip()
    try:
        return int(e) == int(a)
    except ValueError:
        pass
    return e.lower() == a.lower()


def _condition_holds(world: WorldState, cond: GoalCondition, answer: Optional[str]) -> bool:
    if cond.kind == "ObjectIn":
        receps = {o.id for o in _matching(world, cond.b or "")}
        for obj in _matching(world, cond.a or ""):
            container = world.container_of(obj.id)
            if container is not None and container.id in receps:
                return True
        return False
    if cond.kind == "ObjectState":
        for obj in _matching(world, cond.a or ""):
            if getattr(obj.state, cond.flag) == cond.value:
                return True
        return False
    if cond.kind == "ObjectNextTo":
        for first in _matching(world, cond.a or ""):
            for second in _matching(world, cond.b or ""):
                if first.id != second.id and _chebyshev(first.cell, second.cell) <= 1:
                    return True
        return False
    if cond.kind == "AgentAt":
        for obj in _matching(world, cond.a or ""):
            for agent in world.agents.values():
                if _chebyshev(agent.pose.cell, obj.cell) <= 1:
                    return True
        return False
    if cond.kind == "Holding":
        for agent in world.agents.values():
            for oid in agent.inventory:
                if _pattern_matches(cond.a or "", world.objects[oid]):
                    return True
        return False
    if cond.kind == "AnswerEquals":
        return _answers_equal(cond.value, answer)
    raise InvalidTask(f"unknown goal kind {cond.kind!r}")


_REARRANGE_PHRASES = {
    "moved": "{oid} needs to be moved back to its original position.",
    "openness": "{oid} needs its openness reset.",
    "toggled": "{oid} needs to be toggled back.",
    "sliced": "{oid} needs to be unsliced.",
    "temperature": "{oid} needs its temperature reset.",
    "dirty": "{oid} needs its cleanliness reset.",
    "held": "{oid} needs to be put down.",
}


def _check_rearrangement(world: WorldState, task: TaskSpec) -> GoalReport:
    diff_now = compare_status(world, task.target_state)
    now_keys = {(e.object_id, e.kind) for e in diff_now.entries}
    baseline = task.baseline_diff
    satisfied = sum(1 for key in baseline if key not in now_keys)
    new_disturbances = sorted(now_keys - set(baseline))
    failed = [
        _REARRANGE_PHRASES[kind].format(oid=oid)
        for oid, kind in baseline
        if (oid, kind) in now_keys
    ]
    # one guard condition: everything initially correct must stay correct
    total = len(baseline) + 1
    if new_disturbances:
        failed.append("All other objects need to stay in their original state.")
    else:
        satisfied += 1
    return GoalReport(
        success=satisfied == total,
        satisfied=satisfied,
        total=total,
        failed_descriptions=failed,
    )


def check_goal(world: WorldState, task: TaskSpec, answer: Optional[str] = None) -> GoalReport:
    """Evaluate every goal condition against ground truth."""
    if task.task_type == "Rearrangement":
        if task.target_state is None:
            raise InvalidTask("Rearrangement task has no target state")
        return _check_rearrangement(world, task)
    if not task.goal and task.expected_answer is None:
        raise InvalidTask("task has no goal conditions and no expected answer")
    conditions = list(task.goal)
    if task.expected_answer is not None and not any(
        c.kind == "AnswerEquals" for c in conditions
    ):
        conditions.append(GoalCondition(kind="AnswerEquals", value=task.expected_answer))
    satisfied = 0
    failed: list[str] = []
    for cond in conditions:
        if _condition_holds(world, cond, answer):
            satisfied += 1
        else:
            failed.append(cond.describe())
    return GoalReport(
        success=satisfied == len(conditions),
        satisfied=satisfied,
        total=len(conditions),
        failed_descriptions=failed,
    )


def progress_check(world: WorldState, task: TaskSpec) -> Feedback:
    """Read-only goal probe; failure carries the first failed description."""
    report = check_goal(world, task)
    if report.success:
        return Feedback(True, "Action succeeded.")
    return Feedback(False, f"Action failed. {report.failed_descriptions[0]}")


# ---------------------------------------------------------------------------
# Rearrangement setup


def _movable_candidates(world: WorldState) -> list[str]:
    out = []
    for obj in world.objects.values():
        if obj.holder is not None:
            continue
        container = world.container_of(obj.id)
        # objects inside blocking receptacles stay put: restoring them needs
        # `put`, which the rearrangement action space does not offer
        restorable = container is None or not container.has("blocking")
        movable = obj.has("pickupable") and not obj.contents and restorable
        flippable = obj.has("openable")
        if movable or flippable:
            out.append(obj.id)
    return sorted(out)


def randomize_rearrangement(
    world: WorldState, n: int, seed: int
) -> tuple[WorldState, WorldState]:
    """Return (shuffled, target): target is the input world, shuffled differs
    in exactly n objects by relocation or openness flip."""
    if not 1 <= n <= 5:
        raise ValueError("n must be within 1..5")
    candidates = _movable_candidates(world)
    if len(candidates) < n:
        raise NotEnoughObjects(f"need {n} movable-or-openable objects, have {len(candidates)}")
    target = world.clone()
    shuffled = world.clone()
    rng = random.Random(seed)
    chosen = rng.sample(candidates, n)
    agent_cells = {a.pose.cell for a in shuffled.agents.values()}
    for oid in chosen:
        obj = shuffled.objects[oid]
        can_flip = obj.has("openable")
        can_move = obj.has("pickupable") and not obj.contents
        flip = can_flip and (not can_move or rng.random() < 0.5)
        if flip:
            obj.state.open = not obj.state.open
            continue
        grid = occupancy_grid(shuffled)
        free = [
            cell
            for cell, status in sorted(grid.cells().items())
            if status == "free" and cell != obj.cell and cell not in agent_cells
        ]
        if not free:
            raise NotEnoughObjects("no free cell to relocate into")
        destination = rng.choice(free)
        container = shuffled.container_of(oid)
        if container is not None:
            container.contents.remove(oid)
        obj.cell = destination
    diff = compare_status(shuffled, target)
    assert len(diff.object_ids) == n, diff
    return shuffled, target


# ---------------------------------------------------------------------------
# Task loading


def _load_condition(doc: dict) -> GoalCondition:
    kind = doc.get("kind")
    if kind not in GOAL_KINDS:
        raise SchemaError(f"unknown goal kind {kind!r}")
    cond = GoalCondition(
        kind=kind,
        a=doc.get("object"),
        b=doc.get("receptacle") or doc.get("other"),
        flag=doc.get("flag"),
        value=doc.get("value"),
        description=doc.get("description"),
    )
    if kind == "ObjectState":
        if cond.flag not in STATE_FLAGS:
            raise SchemaError(f"ObjectState flag must be one of {STATE_FLAGS}")
    if kind in ("ObjectIn", "ObjectNextTo") and not (cond.a and cond.b):
        raise SchemaError(f"{kind} requires both patterns")
    if kind in ("ObjectState", "AgentAt", "Holding") and not cond.a:
        raise SchemaError(f"{kind} requires an object pattern")
    return cond


def load_task(
    task_doc: dict,
    scene_provider: Optional[Callable[[str], dict]] = None,
) -> TaskSpec:
    """Build a validated TaskSpec from a `langworld/task@1` document.

    scene_provider resolves scene refs to scene documents; it is required for
    Rearrangement tasks unless the doc embeds target_state inline.
    """
    if task_doc.get("schema", TASK_SCHEMA) != TASK_SCHEMA:
        raise SchemaError(f"unsupported task schema {task_doc.get('schema')!r}")
    task_type = task_doc.get("task_type")
    if task_type not in TASK_TYPES:
        raise SchemaError(f"unknown task_type {task_type!r}")
    roles_doc = task_doc.get("roles", [])
    if not roles_doc:
        raise SchemaError("task needs at least one role")
    roles = []
    for rdoc in roles_doc:
        role = rdoc.get("role", "solo")
        if role not in ROLES:
            raise SchemaError(f"unknown role {role!r}")
        roles.append(Role(rdoc["agent_id"], role, rdoc["action_space"]))
    if task_type.startswith("MA-") and len(roles) < 2:
        raise SchemaError(f"{task_type} requires at least two roles")
    step_limit = int(task_doc.get("step_limit", 50))
    if step_limit <= 0:
        raise SchemaError("step_limit must be positive")

    goal = [_load_condition(c) for c in task_doc.get("goal", [])]
    expected_answer = task_doc.get("expected_answer")
    if task_type == "IQA" and expected_answer is None:
        raise SchemaError("IQA task requires expected_answer")

    target_state: Optional[WorldState] = None
    baseline: list[tuple[str, str]] = []
    if task_type == "Rearrangement":
        target_doc = task_doc.get("target_state")
        if target_doc is None:
            ref = task_doc.get("target_state_ref")
            if ref is None or scene_provider is None:
                raise SchemaError("Rearrangement task requires target_state")
            target_doc = scene_provider(ref)
        target_state = load_scene(target_doc)
        scene_doc = task_doc.get("scene")
        if scene_doc is None and scene_provider is not None:
            scene_doc = scene_provider(task_doc["scene_ref"])
        if scene_doc is None:
            raise SchemaError("Rearrangement task requires the start scene for its baseline")
        start = load_scene(scene_doc)
        baseline = sorted(
            (e.object_id, e.kind) for e in compare_status(start, target_state).entries
        )

    if not goal and expected_answer is None and task_type != "Rearrangement":
        raise SchemaError("task has neither goal conditions nor expected_answer")

    return TaskSpec(
        task_type=task_type,
        scene_ref=task_doc.get("scene_ref", ""),
        instruction=task_doc.get("instruction", ""),
        goal=goal,
        expected_answer=expected_answer,
        question_type=task_doc.get("question_type"),
        target_state=target_state,
        baseline_diff=baseline,
        roles=roles,
        step_limit=step_limit,
        original_status=task_doc.get("original_status"),
    )


def task_to_doc(task: TaskSpec, scene_doc: Optional[dict] = None) -> dict:
    """Serialize a TaskSpec (inline target state for Rearrangement)."""
    from .world import scene_to_doc

    doc: dict[str, Any] = {
        "schema": TASK_SCHEMA,
        "task_type": task.task_type,
        "scene_ref": task.scene_ref,
        "instruction": task.instruction,
        "step_limit": task.step_limit,
        "roles": [
            {"agent_id": r.agent_id, "role": r.role, "action_space": r.action_space}
            for r in task.roles
        ],
        "goal": [],
    }
    for cond in task.goal:
        entry: dict[str, Any] = {"kind": cond.kind}
        if cond.a is not None:
            entry["object"] = cond.a
        if cond.b is not None:
            entry["receptacle" if cond.kind == "ObjectIn" else "other"] = cond.b
        if cond.flag is not None:
            entry["flag"] = cond.flag
        if cond.value is not None:
            entry["value"] = cond.value
        if cond.description:
            entry["description"] = cond.description
        doc["goal"].append(entry)
    if task.expected_answer is not None:
        doc["expected_answer"] = task.expected_answer
    if task.question_type is not None:
        doc["question_type"] = task.question_type
    if task.target_state is not None:
        doc["target_state"] = scene_to_doc(task.target_state)
    if task.original_status is not None:
        doc["original_status"] = task.original_status
    if scene_doc is not None:
        doc["scene"] = scene_doc
    return doc
