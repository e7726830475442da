"""Action parsing, validation, execution, and the canonical feedback strings.

Every feedback message is assembled from the templates in MESSAGES so the
exact strings agents see are testable as golden fixtures. Validation runs in
a fixed order (exists, visible, range, affordance/state, inventory, obstacle)
and the first failure wins; failed actions never touch the world.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from . import nav
from .errors import NoPath, ParseError
from .perception import VisibleSet, field_of_view
from .world import AgentBody, Cell, Heading, ObjectEntity, WorldState, occupancy_grid

ACTIONS_SCHEMA = "langworld/actions@1"

# Actions whose bracketed argument is a verbatim message or answer: the
# bracket contents are never comma-split.
VERBATIM_ARGS = frozenset({"chat", "ask", "stop", "answer", "thought", "search_object"})

TERMINAL_ACTIONS = frozenset({"stop", "answer"})

_CONNECTORS = frozenset({"in", "on", "to", "into", "onto", "the", "a", "an", "at", "with"})


@dataclass(frozen=True)
class ActionSpec:
    name: str
    arity: int
    level: str = "low"  # low | high | communicative
    affordance_required: Optional[str] = None
    instrument_affordance: Optional[str] = None
    description: str = ""
    aliases: tuple[str, ...] = ()

    @property
    def verbatim(self) -> bool:
        return self.name in VERBATIM_ARGS

    @property
    def terminal(self) -> bool:
        return self.name in TERMINAL_ACTIONS


@dataclass
class ActionCall:
    spec: ActionSpec
    args: list[str]
    raw: str = ""
    multi_action: bool = False
    resolved: list[str] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.spec.name


@dataclass
class Feedback:
    ok: bool
    message: str
    reason: Optional[str] = None
    call: Optional[ActionCall] = None

    def __post_init__(self) -> None:
        prefix = "Action succeeded." if self.ok else "Action failed."
        if not self.message.startswith(prefix):
            raise ValueError(f"feedback message must start with {prefix!r}: {self.message!r}")
        if self.ok:
            self.reason = None


@dataclass
class Violation:
    reason: str
    message: str


# ---------------------------------------------------------------------------
# Canonical message templates (golden-fixture tested)

MESSAGES = {
    "moved_step": "Action succeeded. Moved {direction} by 1 step.",
    "moved_meters": "Action succeeded. Moved {direction} by '{meters}' meter(s).",
    "turned": "Action succeeded. Turned {side} by '90' degrees.",
    "picked": "Action succeeded. You picked {name} up.",
    "dropped": "Action succeeded. You dropped {name}.",
    "put": "Action succeeded. You put {name} to {recep}.",
    "put_on": "Action succeeded. You put {name} on {recep}.",
    "opened": "Action succeeded. You opened {name}.",
    "closed": "Action succeeded. You closed {name}.",
    "toggled_on": "Action succeeded. You toggled {name} on.",
    "toggled_off": "Action succeeded. You toggled {name} off.",
    "toggled": "Action succeeded. You toggled {name}.",
    "sliced": "Action succeeded. You sliced {name}.",
    "heated": "Action succeeded. You heated {name} with {instrument}.",
    "cooled": "Action succeeded. You cooled {name} with {instrument}.",
    "cleaned": "Action succeeded. You cleaned {name} with {instrument}.",
    "went_to": "Action succeeded. Go to {name}.",
    "checked": "Action succeeded. You checked {name}.",
    "plain_ok": "Action succeeded.",
    "obstacle_ahead": "Action failed. Can not move ahead, because there is an obstacle ahead.",
    "obstacle_behind": "Action failed. Can not move back, because there is an obstacle behind.",
    "obstacle_left": "Action failed. Can not move left, because there is an obstacle on the left.",
    "obstacle_right": "Action failed. Can not move right, because there is an obstacle on the right.",
    "no_such_object": (
        'Action failed. There is no object "{ref}" existing. Please operate the object in sight.'
    ),
    "no_such_room": 'Action failed. There is no room "{ref}" existing.',
    "not_visible": "Action failed. {name} is not in your sight. Please operate the object in sight.",
    "pickup_range": (
        "Action failed. Failed to pick up {name}. "
        "You can only pickup the object one step in front of you without obstacle."
    ),
    "front_range": "Action failed. You can only operate the object one step in front of you.",
    "out_of_range": (
        "Action failed. {name} is out of your manipulation range. "
        "You can only operate the object within {distance} step(s)."
    ),
    "affordance": "Action failed. {name} is not {what}.",
    "instrument_off": "Action failed. {name} is not toggled on.",
    "recep_closed": "Action failed. You need to open {name} first.",
    "already": "Action failed. {name} is already {state}.",
    "inventory_full": "Action failed. Your inventory is full. You can hold at most {capacity} object(s).",
    "holding_nothing": "Action failed. You are holding nothing.",
    "not_holding": "Action failed. You are not holding {name}.",
    "drop_blocked": "Action failed. Can not drop, because the place in front of you is occupied.",
    "no_path": "Action failed. Can not find a path to {name}.",
    "unknown_action": "Action failed. Unknown action '{name}'.",
    "bad_arity": "Action failed. Action '{name}' expects {arity} argument(s).",
    "unparseable": "Action failed. Could not understand the action.",
}

_MOVE_DIRECTIONS = {
    "move_ahead": ("forward", "obstacle_ahead"),
    "move_back": ("backward", "obstacle_behind"),
    "pan_left": ("left", "obstacle_left"),
    "pan_right": ("right", "obstacle_right"),
}


# ---------------------------------------------------------------------------
# Action spaces


@dataclass
class ActionSpace:
    id: str
    naming: str  # "category" | "id"
    observation_style: str
    specs: list[ActionSpec]

    def __post_init__(self) -> None:
        self._by_name: dict[str, ActionSpec] = {}
        for spec in self.specs:
            self._by_name[spec.name] = spec
            for alias in spec.aliases:
                self._by_name[alias] = spec

    def find(self, name: str) -> Optional[ActionSpec]:
        return self._by_name.get(name.lower())

    @property
    def names(self) -> list[str]:
        return [spec.name for spec in self.specs]


def load_space_doc(doc: dict) -> ActionSpace:
    if doc.get("schema", ACTIONS_SCHEMA) != ACTIONS_SCHEMA:
        raise ValueError(f"unsupported action space schema {doc.get('schema')!r}")
    specs = [
        ActionSpec(
            name=entry["name"],
            arity=int(entry.get("arity", 0)),
            level=entry.get("level", "low"),
            affordance_required=entry.get("affordance"),
            instrument_affordance=entry.get("instrument"),
            description=entry.get("description", ""),
            aliases=tuple(entry.get("aliases", ())),
        )
        for entry in doc["actions"]
    ]
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate action names in space {doc.get('id')}")
    return ActionSpace(
        id=doc["id"],
        naming=doc.get("naming", "id"),
        observation_style=doc.get("observation_style", "ego_scene"),
        specs=specs,
    )


def load_space(space_id: str) -> ActionSpace:
    """Load a bundled action-space manifest by id (e.g. "household")."""
    data = resources.files("langworld.data.spaces").joinpath(f"{space_id}.json").read_text()
    return load_space_doc(json.loads(data))


def primitive(name: str) -> ActionSpec:
    """Canonical spec for a core action, independent of any manifest."""
    return _PRIMITIVES[name]


_PRIMITIVES = {
    spec.name: spec
    for spec in (
        ActionSpec("move_ahead", 0),
        ActionSpec("move_back", 0),
        ActionSpec("pan_left", 0),
        ActionSpec("pan_right", 0),
        ActionSpec("turn_left", 0),
        ActionSpec("turn_right", 0),
        ActionSpec("no_op", 0),
        ActionSpec("pick_up", 1, affordance_required="pickupable"),
        ActionSpec("drop", 1),
        ActionSpec("put", 2, affordance_required="receptacle"),
        ActionSpec("place", 1, affordance_required="receptacle"),
        ActionSpec("open", 1, affordance_required="openable"),
        ActionSpec("close", 1, affordance_required="openable"),
        ActionSpec("toggle_on", 1, affordance_required="toggleable"),
        ActionSpec("toggle_off", 1, affordance_required="toggleable"),
        ActionSpec("toggle", 1, affordance_required="toggleable"),
        ActionSpec("slice", 1, affordance_required="sliceable"),
        ActionSpec("heat", 2, instrument_affordance="heater"),
        ActionSpec("cool", 2, instrument_affordance="cooler"),
        ActionSpec("clean", 2, instrument_affordance="cleaner"),
        ActionSpec("go_to", 1, level="high", aliases=("goto",)),
        ActionSpec("go_explore", 1, level="high"),
        ActionSpec("go_check", 1, level="high"),
        ActionSpec("go_grab", 1, level="high", affordance_required="pickupable"),
        ActionSpec("go_put", 1, level="high", affordance_required="receptacle"),
        ActionSpec("stop", 1),
        ActionSpec("answer", 1),
        ActionSpec("chat", 1, level="communicative"),
        ActionSpec("ask", 1, level="communicative"),
        ActionSpec("open_progress_check", 0, level="communicative"),
        ActionSpec("select_oid", 1, level="communicative"),
        ActionSpec("search_object", 1, level="communicative"),
    )
}


# ---------------------------------------------------------------------------
# Parsing

_ACT_PREFIX = re.compile(r"^\s*>*\s*(?:act\s*:)?\s*", re.IGNORECASE)
_NAME_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)")


def _candidate_lines(text: str) -> list[tuple[str, bool]]:
    """(stripped line, had explicit Act prefix) for every non-thought line."""
    out = []
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if not line:
            continue
        lowered = line.lstrip("> ").lower()
        if lowered.startswith("thought:"):
            continue
        explicit = bool(re.match(r"^\s*>*\s*act\s*:", line, re.IGNORECASE))
        stripped = _ACT_PREFIX.sub("", line, count=1)
        if stripped:
            out.append((stripped, explicit))
    return out


def _split_line(line: str) -> tuple[str, Optional[str], list[str]]:
    """Action name, bracket payload (verbatim), and loose trailing tokens."""
    match = _NAME_TOKEN.match(line)
    if not match:
        return "", None, []
    name = match.group(1)
    rest = line[match.end():].strip()
    bracket: Optional[str] = None
    loose: list[str] = []
    if "[" in rest:
        start = rest.index("[")
        end = rest.rfind("]")
        bracket = rest[start + 1 : end] if end > start else rest[start + 1 :]
    else:
        cleaned = rest.strip(" .()")
        if cleaned:
            loose = [tok for tok in re.split(r"[\s,]+", cleaned) if tok]
    return name, bracket, loose


def parse_action(text: str, space: ActionSpace) -> ActionCall:
    """First action in the text, per the engine grammar.

    Raises ParseError with kind Empty, UnknownAction, or ArityMismatch.
    """
    if not isinstance(text, str):
        raise ParseError("action text must be a string", kind="Empty")
    lines = _candidate_lines(text)
    actionable: list[tuple[ActionSpec, str, Optional[str], list[str]]] = []
    unknown_explicit: Optional[str] = None
    for line, explicit in lines:
        name, bracket, loose = _split_line(line)
        if not name:
            continue
        spec = space.find(name)
        if spec is None:
            if explicit and unknown_explicit is None:
                unknown_explicit = name
            continue
        actionable.append((spec, line, bracket, loose))
    if not actionable:
        if unknown_explicit is not None:
            raise ParseError(f"unknown action '{unknown_explicit}'", kind="UnknownAction")
        raise ParseError("no action found", kind="Empty")

    spec, line, bracket, loose = actionable[0]
    if spec.arity == 0:
        args: list[str] = []
    elif spec.verbatim:
        args = [bracket.strip() if bracket is not None else " ".join(loose)]
    else:
        if bracket is not None:
            args = [a.strip() for a in bracket.split(",") if a.strip()]
        else:
            args = [tok for tok in loose if tok.lower() not in _CONNECTORS]
        if len(args) > spec.arity:
            args = args[: spec.arity]
        if len(args) != spec.arity:
            raise ParseError(
                f"action '{spec.name}' expects {spec.arity} argument(s), got {len(args)}",
                kind="ArityMismatch",
            )
    return ActionCall(spec=spec, args=args, raw=text, multi_action=len(actionable) > 1)


# ---------------------------------------------------------------------------
# Naming and resolution


def named(obj: ObjectEntity, naming: str, article: bool = False) -> str:
    if naming == "category":
        name = obj.category
        if article:
            art = "an" if name[:1].lower() in "aeiou" else "a"
            return f"{art} {name}"
        return name
    return obj.id


def _strip_article(ref: str) -> str:
    return re.sub(r"^(a|an|the)\s+", "", ref.strip(), flags=re.IGNORECASE)


def resolve_object(
    world: WorldState,
    agent: AgentBody,
    visible: VisibleSet,
    ref: str,
) -> Optional[ObjectEntity]:
    """Resolve an object reference: exact id, then category among what the
    agent can see or holds (nearest first, then lexicographic)."""
    ref = _strip_article(ref)
    if ref in world.objects:
        return world.objects[ref]
    lowered = ref.lower()
    for oid, obj in world.objects.items():
        if oid.lower() == lowered:
            return obj
    candidates: list[tuple[float, str]] = []
    for item in visible.items:
        obj = world.objects[item.object_id]
        if obj.category.lower() == lowered:
            candidates.append((item.distance, obj.id))
    for oid in agent.inventory:
        if world.objects[oid].category.lower() == lowered:
            candidates.append((-1.0, oid))
    if not candidates:
        return None
    candidates.sort()
    return world.objects[candidates[0][1]]


def resolve_anywhere(world: WorldState, ref: str) -> Optional[ObjectEntity]:
    """Resolve against the whole scene (belief-level macros, oracle queries)."""
    ref = _strip_article(ref)
    if ref in world.objects:
        return world.objects[ref]
    lowered = ref.lower()
    matches = sorted(
        oid for oid, obj in world.objects.items()
        if oid.lower() == lowered or obj.category.lower() == lowered
    )
    return world.objects[matches[0]] if matches else None


def _distance_sq(a: Cell, b: Cell) -> int:
    return (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2


def _fmt_steps(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else str(value)


# ---------------------------------------------------------------------------
# Validation


def _check_reachable_target(
    world: WorldState,
    agent: AgentBody,
    visible: VisibleSet,
    ref: str,
    naming: str,
    affordance: Optional[str],
    action_name: str,
) -> Violation | ObjectEntity:
    target = resolve_object(world, agent, visible, ref)
    if target is None:
        return Violation("NoSuchObject", MESSAGES["no_such_object"].format(ref=ref))
    disp = named(target, naming)
    held_by_me = target.id in agent.inventory
    if target.id not in visible and not held_by_me:
        return Violation("NotVisible", MESSAGES["not_visible"].format(name=disp))
    manip = agent.config.manipulate_distance
    if not held_by_me:
        if manip <= 1:
            if target.cell != agent.pose.ahead(1):
                if action_name == "pick_up":
                    return Violation("OutOfRange", MESSAGES["pickup_range"].format(name=disp))
                return Violation("OutOfRange", MESSAGES["front_range"])
        elif _distance_sq(target.cell, agent.pose.cell) > manip * manip:
            return Violation(
                "OutOfRange",
                MESSAGES["out_of_range"].format(name=disp, distance=_fmt_steps(manip)),
            )
    if affordance and not target.has(affordance):
        return Violation(
            "AffordanceMissing",
            MESSAGES["affordance"].format(name=disp, what=_affordance_phrase(affordance)),
        )
    return target


def _affordance_phrase(affordance: str) -> str:
    if affordance in ("receptacle", "heater", "cooler", "cleaner"):
        return f"a {affordance}"
    return affordance


def _movement_target(agent: AgentBody, name: str) -> Cell:
    heading = agent.pose.heading
    if name == "move_back":
        heading = heading.turn_right().turn_right()
    elif name == "pan_left":
        heading = heading.turn_left()
    elif name == "pan_right":
        heading = heading.turn_right()
    dx, dy = heading.vector
    return (agent.pose.cell[0] + dx, agent.pose.cell[1] + dy)


def validate_action(
    world: WorldState,
    agent_id: str,
    call: ActionCall,
    naming: str = "id",
    visible: Optional[VisibleSet] = None,
) -> Optional[Violation]:
    """First violation in the fixed check order, or None when executable.

    Never mutates the world. Populates call.resolved with target object ids.
    """
    agent = world.agents[agent_id]
    name = call.spec.name
    call.resolved = []

    if name in _MOVE_DIRECTIONS:
        target_cell = _movement_target(agent, name)
        grid = occupancy_grid(world, for_agent=agent_id)
        src = agent.pose.cell
        if not grid.is_free(target_cell) or world.has_wall(src, target_cell):
            return Violation("Obstacle", MESSAGES[_MOVE_DIRECTIONS[name][1]])
        return None
    if name in ("turn_left", "turn_right", "no_op") or call.spec.level == "communicative":
        return None
    if call.spec.terminal:
        return None

    if visible is None:
        visible = field_of_view(world, agent_id)

    if name == "pick_up":
        outcome = _check_reachable_target(
            world, agent, visible, call.args[0], naming, "pickupable", name
        )
        if isinstance(outcome, Violation):
            return outcome
        if outcome.id in agent.inventory:
            return Violation("AlreadyInState", MESSAGES["already"].format(
                name=named(outcome, naming), state="in your inventory"))
        if len(agent.inventory) >= agent.config.inventory_capacity:
            return Violation(
                "InventoryFull",
                MESSAGES["inventory_full"].format(capacity=agent.config.inventory_capacity),
            )
        call.resolved = [outcome.id]
        return None

    if name == "drop":
        if not agent.inventory:
            return Violation("InventoryEmpty", MESSAGES["holding_nothing"])
        held = resolve_object(world, agent, visible, call.args[0])
        if held is None or held.id not in agent.inventory:
            shown = held and named(held, naming) or _strip_article(call.args[0])
            return Violation("InventoryEmpty", MESSAGES["not_holding"].format(name=shown))
        front = agent.pose.ahead(1)
        grid = occupancy_grid(world, for_agent=agent_id)
        if not grid.is_free(front) or world.has_wall(agent.pose.cell, front):
            return Violation("Blocked", MESSAGES["drop_blocked"])
        call.resolved = [held.id]
        return None

    if name in ("put", "place"):
        recep_ref = call.args[1] if name == "put" else call.args[0]
        outcome = _check_reachable_target(
            world, agent, visible, recep_ref, naming, "receptacle", name
        )
        if isinstance(outcome, Violation):
            return outcome
        recep = outcome
        if recep.has("openable") and not recep.state.open:
            return Violation(
                "AffordanceMissing", MESSAGES["recep_closed"].format(name=named(recep, naming))
            )
        if not agent.inventory:
            return Violation("InventoryEmpty", MESSAGES["holding_nothing"])
        if name == "put":
            held = resolve_object(world, agent, visible, call.args[0])
            if held is None or held.id not in agent.inventory:
                shown = held and named(held, naming) or _strip_article(call.args[0])
                return Violation("InventoryEmpty", MESSAGES["not_holding"].format(name=shown))
        else:
            held = world.objects[agent.inventory[0]]
        call.resolved = [held.id, recep.id]
        return None

    if name in ("open", "close", "toggle_on", "toggle_off", "toggle", "slice"):
        affordance = call.spec.affordance_required or {
            "open": "openable",
            "close": "openable",
            "toggle_on": "toggleable",
            "toggle_off": "toggleable",
            "toggle": "toggleable",
            "slice": "sliceable",
        }[name]
        outcome = _check_reachable_target(
            world, agent, visible, call.args[0], naming, affordance, name
        )
        if isinstance(outcome, Violation):
            return outcome
        disp = named(outcome, naming)
        state = outcome.state
        already = {
            "open": (state.open, "open"),
            "close": (not state.open, "closed"),
            "toggle_on": (state.toggled, "toggled on"),
            "toggle_off": (not state.toggled, "toggled off"),
            "slice": (state.sliced, "sliced"),
        }.get(name)
        if already and already[0]:
            return Violation(
                "AlreadyInState", MESSAGES["already"].format(name=disp, state=already[1])
            )
        call.resolved = [outcome.id]
        return None

    if name in ("heat", "cool", "clean"):
        if not agent.inventory:
            return Violation("InventoryEmpty", MESSAGES["holding_nothing"])
        held = resolve_object(world, agent, visible, call.args[0])
        if held is None or held.id not in agent.inventory:
            shown = held and named(held, naming) or _strip_article(call.args[0])
            return Violation("InventoryEmpty", MESSAGES["not_holding"].format(name=shown))
        outcome = _check_reachable_target(
            world, agent, visible, call.args[1], naming, call.spec.instrument_affordance, name
        )
        if isinstance(outcome, Violation):
            return outcome
        instrument = outcome
        if instrument.has("toggleable") and not instrument.state.toggled:
            return Violation(
                "AffordanceMissing",
                MESSAGES["instrument_off"].format(name=named(instrument, naming)),
            )
        call.resolved = [held.id, instrument.id]
        return None

    return None


# ---------------------------------------------------------------------------
# Execution


def _sync_held(world: WorldState, agent: AgentBody) -> None:
    for oid in agent.inventory:
        obj = world.objects[oid]
        obj.cell = agent.pose.cell
        for cid in obj.contents:
            world.objects[cid].cell = agent.pose.cell


def _detach(world: WorldState, object_id: str) -> None:
    container = world.container_of(object_id)
    if container is not None:
        container.contents.remove(object_id)


def _meters_or_step(world: WorldState, direction: str) -> str:
    if world.step_size_meters == 1.0:
        return MESSAGES["moved_step"].format(direction=direction)
    return MESSAGES["moved_meters"].format(direction=direction, meters=world.step_size_meters)


def execute_action(
    world: WorldState,
    agent_id: str,
    call: ActionCall,
    naming: str = "id",
) -> tuple[WorldState, Feedback]:
    """Validate then apply a low-level action in place.

    Returns the same WorldState instance; on failure it is untouched.
    """
    agent = world.agents[agent_id]
    name = call.spec.name
    violation = validate_action(world, agent_id, call, naming=naming)
    if violation is not None:
        return world, Feedback(False, violation.message, reason=violation.reason, call=call)

    if name in _MOVE_DIRECTIONS:
        agent.pose.cell = _movement_target(agent, name)
        _sync_held(world, agent)
        direction = _MOVE_DIRECTIONS[name][0]
        return world, Feedback(True, _meters_or_step(world, direction), call=call)
    if name == "turn_left":
        agent.pose = agent.pose.turned_left()
        return world, Feedback(True, MESSAGES["turned"].format(side="left"), call=call)
    if name == "turn_right":
        agent.pose = agent.pose.turned_right()
        return world, Feedback(True, MESSAGES["turned"].format(side="right"), call=call)
    if name == "no_op" or call.spec.level == "communicative" or call.spec.terminal:
        return world, Feedback(True, MESSAGES["plain_ok"], call=call)

    if name == "pick_up":
        target = world.objects[call.resolved[0]]
        _detach(world, target.id)
        target.holder = agent_id
        target.cell = agent.pose.cell
        agent.inventory.append(target.id)
        return world, Feedback(
            True, MESSAGES["picked"].format(name=named(target, naming, article=True)), call=call
        )
    if name == "drop":
        target = world.objects[call.resolved[0]]
        agent.inventory.remove(target.id)
        target.holder = None
        target.cell = agent.pose.ahead(1)
        for cid in target.contents:
            world.objects[cid].cell = target.cell
        return world, Feedback(
            True, MESSAGES["dropped"].format(name=named(target, naming)), call=call
        )
    if name in ("put", "place"):
        held = world.objects[call.resolved[0]]
        recep = world.objects[call.resolved[1]]
        agent.inventory.remove(held.id)
        held.holder = None
        recep.contents.append(held.id)
        held.cell = recep.cell
        for cid in held.contents:
            world.objects[cid].cell = held.cell
        return world, Feedback(
            True,
            MESSAGES["put"].format(name=named(held, naming), recep=named(recep, naming)),
            call=call,
        )
    if name in ("open", "close"):
        target = world.objects[call.resolved[0]]
        target.state.open = name == "open"
        key = "opened" if name == "open" else "closed"
        return world, Feedback(
            True, MESSAGES[key].format(name=named(target, naming)), call=call
        )
    if name in ("toggle_on", "toggle_off", "toggle"):
        target = world.objects[call.resolved[0]]
        if name == "toggle":
            target.state.toggled = not target.state.toggled
            msg = MESSAGES["toggled"].format(name=named(target, naming))
        else:
            target.state.toggled = name == "toggle_on"
            key = "toggled_on" if name == "toggle_on" else "toggled_off"
            msg = MESSAGES[key].format(name=named(target, naming))
        return world, Feedback(True, msg, call=call)
    if name == "slice":
        target = world.objects[call.resolved[0]]
        target.state.sliced = True
        return world, Feedback(
            True, MESSAGES["sliced"].format(name=named(target, naming)), call=call
        )
    if name in ("heat", "cool", "clean"):
        held = world.objects[call.resolved[0]]
        if name == "heat":
            held.state.temperature = "hot"
            key = "heated"
        elif name == "cool":
            held.state.temperature = "cold"
            key = "cooled"
        else:
            held.state.dirty = False
            key = "cleaned"
        return world, Feedback(
            True,
            MESSAGES[key].format(
                name=named(held, naming), instrument=named(world.objects[call.resolved[1]], naming)
            ),
            call=call,
        )
    raise ValueError(f"execute_action does not handle {name!r}")


# ---------------------------------------------------------------------------
# High-level macros


def _run_route(world: WorldState, agent_id: str, route: list[str], naming: str) -> Optional[Feedback]:
    for step_name in route:
        step_call = ActionCall(spec=primitive(step_name), args=[], raw=step_name)
        _, feedback = execute_action(world, agent_id, step_call, naming=naming)
        if not feedback.ok:
            return feedback
    return None


def _goto_target(world: WorldState, agent_id: str, target: ObjectEntity, naming: str) -> Optional[Feedback]:
    agent = world.agents[agent_id]
    if agent.pose.ahead(1) == target.cell:
        return None
    grid = occupancy_grid(world, for_agent=agent_id)
    try:
        route = nav.plan_adjacent(grid, agent.pose, target.cell, world.has_wall)
    except NoPath:
        return Feedback(
            False,
            MESSAGES["no_path"].format(name=named(target, naming)),
            reason="NoPath",
        )
    return _run_route(world, agent_id, route, naming)


def expand_high_level(
    world: WorldState,
    agent_id: str,
    call: ActionCall,
    naming: str = "id",
) -> tuple[WorldState, Feedback]:
    """Apply a macro action atomically; counts as one step for metrics."""
    agent = world.agents[agent_id]
    name = call.spec.name

    if name == "go_explore":
        ref = call.args[0].strip()
        room = next(
            (r for r in world.rooms if r.id == ref or r.category == ref.lower()), None
        )
        if room is None:
            return world, Feedback(
                False, MESSAGES["no_such_room"].format(ref=ref), reason="NoSuchObject", call=call
            )
        grid = occupancy_grid(world, for_agent=agent_id)
        landing = next((cell for cell in room.cells() if grid.is_free(cell)), None)
        if landing is None:
            return world, Feedback(
                False, MESSAGES["no_path"].format(name=room.id), reason="NoPath", call=call
            )
        agent.pose.cell = landing
        agent.pose.heading = Heading.NORTH
        _sync_held(world, agent)
        call.resolved = [room.id]
        return world, Feedback(True, MESSAGES["went_to"].format(name=room.id), call=call)

    if name in ("go_to", "go_check", "go_grab", "go_put"):
        target = resolve_anywhere(world, call.args[0])
        if target is None:
            return world, Feedback(
                False,
                MESSAGES["no_such_object"].format(ref=call.args[0]),
                reason="NoSuchObject",
                call=call,
            )
        if name == "go_to":
            visible = field_of_view(world, agent_id)
            if target.id not in visible:
                return world, Feedback(
                    False,
                    MESSAGES["not_visible"].format(name=named(target, naming)),
                    reason="NotVisible",
                    call=call,
                )
        if name == "go_grab" and len(agent.inventory) >= agent.config.inventory_capacity:
            return world, Feedback(
                False,
                MESSAGES["inventory_full"].format(capacity=agent.config.inventory_capacity),
                reason="InventoryFull",
                call=call,
            )
        if name == "go_put" and not agent.inventory:
            return world, Feedback(
                False, MESSAGES["holding_nothing"], reason="InventoryEmpty", call=call
            )
        blocker = _goto_target(world, agent_id, target, naming)
        if blocker is not None:
            blocker.call = call
            return world, blocker
        if name == "go_to":
            call.resolved = [target.id]
            return world, Feedback(
                True, MESSAGES["went_to"].format(name=named(target, naming)), call=call
            )
        if name == "go_check":
            call.resolved = [target.id]
            if target.has("openable") and not target.state.open:
                target.state.open = True
                return world, Feedback(
                    True, MESSAGES["opened"].format(name=named(target, naming)), call=call
                )
            return world, Feedback(
                True, MESSAGES["checked"].format(name=named(target, naming)), call=call
            )
        if name == "go_grab":
            opened_here = None
            container = world.container_of(target.id)
            if container is not None and container.has("openable") and not container.state.open:
                container.state.open = True
                opened_here = container
            inner = ActionCall(spec=primitive("pick_up"), args=[target.id], raw=call.raw)
            _, feedback = execute_action(world, agent_id, inner, naming=naming)
            if opened_here is not None and feedback.ok:
                opened_here.state.open = False
            feedback.call = call
            call.resolved = [target.id]
            return world, feedback
        # go_put: a closed receptacle is opened for the insert and re-closed
        held = world.objects[agent.inventory[0]]
        agent.inventory.remove(held.id)
        held.holder = None
        target.contents.append(held.id)
        held.cell = target.cell
        for cid in held.contents:
            world.objects[cid].cell = held.cell
        call.resolved = [held.id, target.id]
        return world, Feedback(
            True,
            MESSAGES["put_on"].format(name=named(held, naming), recep=named(target, naming)),
            call=call,
        )

    raise ValueError(f"not a macro action: {name!r}")
