"""Egocentric perception: field of view under occlusion, direction language,
and rendering of visible sets to the engine's observation styles.

All geometry is exact integer arithmetic on cell centers. Sight lines are
segments between centers; a line is occluded by any crossed wall edge or by
any blocking-object cell it touches. Passing exactly through a grid corner is
conservative: any wall edge incident to that corner blocks, and both corner
side cells count as touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import MissingBelief, OutOfRoom, SamePoint, UnknownAgent
from .world import AgentBody, Cell, GridPose, ObjectEntity, Room, WorldState, wall_edge

DIRECTIONS_8 = (
    "front",
    "front-left",
    "front-right",
    "left",
    "right",
    "rear-left",
    "rear-right",
    "rear",
)

_BUCKET_ORDER = {name: i for i, name in enumerate(DIRECTIONS_8)}

EMPTY_EGO_SCENE = (
    "You see nothing. You can try to take action like move_ahead, "
    "turn_left or turn_right to explore the room."
)
EMPTY_EGO_GRID = "You can see nothing ahead."


@dataclass(frozen=True)
class VisibleItem:
    object_id: str
    direction: str
    distance: float
    contents_visible: bool


@dataclass
class VisibleSet:
    items: list[VisibleItem] = field(default_factory=list)

    @property
    def ids(self) -> list[str]:
        return [item.object_id for item in self.items]

    def __contains__(self, object_id: str) -> bool:
        return any(item.object_id == object_id for item in self.items)

    def get(self, object_id: str) -> Optional[VisibleItem]:
        for item in self.items:
            if item.object_id == object_id:
                return item
        return None


@dataclass
class Observation:
    text: str
    visible: VisibleSet
    style: str
    manipulable: list[str] = field(default_factory=list)


@dataclass
class AgentSighting:
    room_id: str
    holding: list[str]
    step: int


@dataclass
class BeliefState:
    """Monotone per-agent memory accumulated over an episode."""

    explored_rooms: set[str] = field(default_factory=set)
    checked_containers: set[str] = field(default_factory=set)
    found_objects: dict[str, str] = field(default_factory=dict)  # object id -> room id
    last_seen_agents: dict[str, AgentSighting] = field(default_factory=dict)
    placed_objects: list[str] = field(default_factory=list)
    goal_receptacle: Optional[str] = None


# ---------------------------------------------------------------------------
# Direction geometry


def direction_bucket_from_angle(angle_deg: float) -> str:
    """8-way bucket for a signed bearing (positive = left of heading).

    Sector boundaries (odd multiples of 22.5 degrees) fall to the
    more-frontal bucket.
    """
    magnitude = abs(angle_deg)
    k = magnitude / 45.0
    idx = math.floor(k)
    frac = k - idx
    if frac > 0.5:
        idx += 1
    # frac == 0.5 exactly: keep idx (the more-frontal sector)
    idx = min(idx, 4)
    if idx == 0:
        return "front"
    if idx == 4:
        return "rear"
    side = "left" if angle_deg > 0 else "right"
    return ("front-{}", "{}", "rear-{}")[idx - 1].format(side)


def bearing_degrees(pose: GridPose, point: Cell) -> float:
    """Signed angle from the heading to the point; positive = left."""
    vx = point[0] - pose.cell[0]
    vy = point[1] - pose.cell[1]
    if vx == 0 and vy == 0:
        raise SamePoint(f"point {point} equals observer cell")
    fx, fy = pose.heading.vector
    dot = fx * vx + fy * vy
    cross = fx * vy - fy * vx
    return math.degrees(math.atan2(cross, dot))


def relative_direction(observer_pose: GridPose, point: Cell) -> str:
    return direction_bucket_from_angle(bearing_degrees(observer_pose, point))


def ego_section(direction: str) -> str:
    """Collapse the 8-way bucket into the front/left/right sections used by
    egocentric observation text."""
    if direction == "front":
        return "front"
    if direction.endswith("left"):
        return "left"
    if direction.endswith("right"):
        return "right"
    return "rear"


_OCTANT_NAMES = (
    ("southwest", "south", "southeast"),
    ("west", "center", "east"),
    ("northwest", "north", "northeast"),
)


def compass_octant(room_bounds: tuple[int, int, int, int], point: Cell) -> str:
    """Partition a room into a 3x3 tiling of thirds; middle tile is center."""
    x0, y0, x1, y1 = room_bounds
    x, y = point
    if not (x0 <= x <= x1 and y0 <= y <= y1):
        raise OutOfRoom(f"point {point} outside bounds {room_bounds}")
    width = x1 - x0 + 1
    height = y1 - y0 + 1
    col = min(2, ((x - x0) * 3) // width)
    row = min(2, ((y - y0) * 3) // height)
    return _OCTANT_NAMES[row][col]


# ---------------------------------------------------------------------------
# Exact line of sight


def _columns_spanned(a: Cell, b: Cell) -> Iterable[tuple[int, int, int]]:
    """Per-column touched row ranges (col, row_lo, row_hi) for segment a-b."""
    ax, ay = a
    bx, by = b
    dx = bx - ax
    dy = by - ay
    if dx == 0:
        lo, hi = sorted((ay, by))
        yield ax, lo, hi
        return
    # doubled coordinates keep all boundary values integral
    x_lo, x_hi = sorted((2 * ax, 2 * bx))
    for col in range(min(ax, bx), max(ax, bx) + 1):
        cx_lo = max(2 * col - 1, x_lo)
        cx_hi = min(2 * col + 1, x_hi)
        # y2(x2) = 2*ay + dy*(x2 - 2*ax)/dx, denominator normalized positive
        n_a = 2 * ay * dx + dy * (cx_lo - 2 * ax)
        n_b = 2 * ay * dx + dy * (cx_hi - 2 * ax)
        den = dx
        if den < 0:
            n_a, n_b, den = -n_a, -n_b, -den
        n_lo, n_hi = (n_a, n_b) if n_a <= n_b else (n_b, n_a)
        # rows r with [n_lo/den, n_hi/den] intersecting [2r-1, 2r+1]
        row_lo = -((-(n_lo - den)) // (2 * den))  # ceil((n_lo - den) / (2 den))
        row_hi = (n_hi + den) // (2 * den)
        yield col, row_lo, row_hi


def touched_cells(a: Cell, b: Cell) -> set[Cell]:
    """Every cell whose closed unit square the center-to-center segment touches."""
    out: set[Cell] = set()
    for col, row_lo, row_hi in _columns_spanned(a, b):
        for row in range(row_lo, row_hi + 1):
            out.add((col, row))
    return out


def _corner_blocked(world: WorldState, cx: int, cy: int) -> bool:
    """Sight through the grid corner between cells (cx,cy) and (cx+1,cy+1):
    any wall edge incident to that corner blocks."""
    edges = (
        ((cx, cy), (cx + 1, cy)),
        ((cx, cy + 1), (cx + 1, cy + 1)),
        ((cx, cy), (cx, cy + 1)),
        ((cx + 1, cy), (cx + 1, cy + 1)),
    )
    return any(wall_edge(p, q) in world.walls for p, q in edges)


def line_of_sight(world: WorldState, blocked_cells: set[Cell], a: Cell, b: Cell) -> bool:
    """True when no wall crossing and no blocking cell interrupts segment a-b.

    The endpoints' own cells never block.
    """
    if a == b:
        return True
    ax, ay = a
    bx, by = b
    dx = bx - ax
    dy = by - ay
    # vertical boundaries between columns c and c+1
    for c in range(min(ax, bx), max(ax, bx)):
        num = 2 * ay * dx + dy * (2 * c + 1 - 2 * ax)
        den = dx
        if den < 0:
            num, den = -num, -den
        if num % den == 0 and (num // den) % 2 != 0:
            corner_row = (num // den - 1) // 2
            if _corner_blocked(world, c, corner_row):
                return False
        else:
            row = (num + den) // (2 * den)
            if wall_edge((c, row), (c + 1, row)) in world.walls:
                return False
    # horizontal boundaries between rows r and r+1 (corners already handled)
    for r in range(min(ay, by), max(ay, by)):
        num = 2 * ax * dy + dx * (2 * r + 1 - 2 * ay)
        den = dy
        if den < 0:
            num, den = -num, -den
        if num % den == 0 and (num // den) % 2 != 0:
            continue
        col = (num + den) // (2 * den)
        if wall_edge((col, r), (col, r + 1)) in world.walls:
            return False
    if blocked_cells:
        for cell in touched_cells(a, b):
            if cell != a and cell != b and cell in blocked_cells:
                return False
    return True


# ---------------------------------------------------------------------------
# Field of view


def _in_view_shape(agent: AgentBody, target: Cell) -> bool:
    vx = target[0] - agent.pose.cell[0]
    vy = target[1] - agent.pose.cell[1]
    if vx == 0 and vy == 0:
        return False
    fx, fy = agent.pose.heading.vector
    forward = fx * vx + fy * vy
    lateral = fx * vy - fy * vx
    shape = agent.config.view_shape
    if shape.kind == "rect":
        return 0 <= forward <= agent.config.view_distance and abs(lateral) <= shape.side_steps
    dist_sq = vx * vx + vy * vy
    if dist_sq > agent.config.view_distance * agent.config.view_distance:
        return False
    half = shape.half_angle
    if half >= 90.0:
        return forward >= 0
    if forward <= 0:
        return False
    tan_sq = math.tan(math.radians(half)) ** 2
    return lateral * lateral <= tan_sq * forward * forward


def concealed(world: WorldState, object_id: str) -> bool:
    """True when any strict container ancestor is a closed openable receptacle."""
    parent = world.container_of(object_id)
    while parent is not None:
        if parent.has("openable") and not parent.state.open:
            return True
        parent = world.container_of(parent.id)
    return False


def blocking_cells(world: WorldState) -> set[Cell]:
    out: set[Cell] = set()
    for obj in world.objects.values():
        if obj.has("blocking") and obj.holder is None and world.container_of(obj.id) is None:
            out.add(obj.cell)
    return out


def contents_visible(entity: ObjectEntity) -> bool:
    if not entity.has("receptacle"):
        return False
    return entity.state.open or not entity.has("openable")


def field_of_view(world: WorldState, agent_id: str) -> VisibleSet:
    if agent_id not in world.agents:
        raise UnknownAgent(agent_id)
    agent = world.agents[agent_id]
    origin = agent.pose.cell
    occluders = blocking_cells(world)
    cell_visible: dict[Cell, bool] = {}

    def visible_cell(cell: Cell) -> bool:
        if cell not in cell_visible:
            if agent.config.oracle_vision:
                ok = cell != origin
            else:
                ok = _in_view_shape(agent, cell) and line_of_sight(world, occluders, origin, cell)
            cell_visible[cell] = ok
        return cell_visible[cell]

    items: list[tuple[int, int, str, VisibleItem]] = []
    for obj in world.objects.values():
        if obj.holder is not None:
            continue
        if concealed(world, obj.id):
            continue
        if obj.cell == origin:
            continue
        if not visible_cell(obj.cell):
            continue
        direction = relative_direction(agent.pose, obj.cell)
        dx = obj.cell[0] - origin[0]
        dy = obj.cell[1] - origin[1]
        dist_sq = dx * dx + dy * dy
        item = VisibleItem(
            object_id=obj.id,
            direction=direction,
            distance=math.sqrt(dist_sq),
            contents_visible=contents_visible(obj),
        )
        items.append((_BUCKET_ORDER[direction], dist_sq, obj.id, item))
    items.sort(key=lambda t: (t[0], t[1], t[2]))
    return VisibleSet([t[3] for t in items])


# ---------------------------------------------------------------------------
# Rendering


def display_name(obj: ObjectEntity, naming: str) -> str:
    """'category' naming reads like prose ("red box"); 'id' naming is literal."""
    return obj.category if naming == "category" else obj.id


def _article(name: str) -> str:
    return "an" if name[:1].lower() in "aeiou" else "a"


def _ego_grid_text(world: WorldState, visible: VisibleSet) -> str:
    sections: dict[str, list[str]] = {"front": [], "left": [], "right": []}
    for item in visible.items:
        section = ego_section(item.direction)
        if section == "rear":
            continue
        obj = world.objects[item.object_id]
        name = display_name(obj, "category")
        sections[section].append(f"{_article(name)} {name}")
    parts = []
    for section, location in (
        ("front", "in front of you"),
        ("left", "on your left"),
        ("right", "on your right"),
    ):
        if sections[section]:
            parts.append(f"You can see {', '.join(sections[section])} {location}")
    if not parts:
        return EMPTY_EGO_GRID
    return "; ".join(parts) + "."


def _scene_item_text(world: WorldState, item: VisibleItem) -> str:
    obj = world.objects[item.object_id]
    if obj.has("openable"):
        prefix = "an opened " if obj.state.open else "a closed "
    else:
        prefix = "a "
    text = prefix + obj.id
    if item.contents_visible:
        inner = [cid for cid in obj.contents if not concealed(world, cid)]
        if inner:
            listed = ", ".join(f"a {cid}" for cid in inner)
            text += f", there is {listed} in/on it"
        elif obj.has("openable") and obj.state.open:
            text += ", it's empty"
    return text


def _ego_scene_text(world: WorldState, visible: VisibleSet) -> str:
    contained: set[str] = set()
    for item in visible.items:
        if item.contents_visible:
            contained.update(world.objects[item.object_id].contents)
    sections: dict[str, list[str]] = {"front": [], "left": [], "right": []}
    for item in visible.items:
        if item.object_id in contained:
            continue
        section = ego_section(item.direction)
        if section == "rear":
            continue
        sections[section].append(_scene_item_text(world, item))
    parts = []
    for section, header in (
        ("front", "In front of you, You see"),
        ("left", "On your left, you see"),
        ("right", "On your right, you see"),
    ):
        if sections[section]:
            parts.append(f"{header} {'; '.join(sections[section])}.")
    if not parts:
        return EMPTY_EGO_SCENE
    return " ".join(parts)


def render_contents(world: WorldState, receptacle_id: str) -> str:
    """Post-check contents report for a just-opened container."""
    contents = world.objects[receptacle_id].contents
    if not contents:
        return "In it you see nothing"
    return "In it you see " + ", ".join(contents)


def _holding_text(ids: list[str]) -> str:
    return ", ".join(ids) if ids else "nothing"


def _room_display(room: Room) -> str:
    return room.category if room.category != "generic" else room.id


def _container_pieces(world: WorldState, belief: BeliefState, room: Room) -> tuple[list[str], list[str]]:
    """Known receptacles in a room: (plain receptacle ids, unchecked openable ids)."""
    plain: list[str] = []
    unchecked: list[str] = []
    for oid, room_id in belief.found_objects.items():
        if room_id != room.id or oid not in world.objects:
            continue
        obj = world.objects[oid]
        if not obj.has("receptacle"):
            continue
        if obj.has("openable"):
            # a container someone left open is visibly already checked
            if oid not in belief.checked_containers and not obj.state.open:
                unchecked.append(oid)
        else:
            plain.append(oid)
    return sorted(plain), sorted(unchecked)


def _unchecked_phrase(ids: list[str]) -> str:
    if len(ids) == 1:
        return f"an unchecked container {ids[0]}"
    return "unchecked containers " + ", ".join(ids)


def _room_summary_text(world: WorldState, agent: AgentBody, belief: BeliefState) -> str:
    sentences: list[str] = []
    if belief.placed_objects and belief.goal_receptacle:
        listed = ", ".join(belief.placed_objects)
        sentences.append(
            f"You have already found and put {listed} onto the {belief.goal_receptacle}."
        )
    sentences.append(f"You are holding {_holding_text(agent.inventory)}.")

    current = world.room_at(agent.pose.cell)
    if current is not None:
        plain, unchecked = _container_pieces(world, belief, current)
        pieces = []
        if plain:
            pieces.append(", ".join(plain))
        if unchecked:
            pieces.append(_unchecked_phrase(unchecked))
        found = " and ".join(pieces) if pieces else "nothing"
        sentences.append(f"You are in the {_room_display(current)}, where you found {found}.")

    for other in sorted(world.agents.values(), key=lambda a: a.id):
        if other.id == agent.id:
            continue
        name = other.display_name
        other_room = world.room_at(other.pose.cell)
        pron = other.pronoun
        verb = "are" if pron == "they" else "is"
        if current is not None and other_room is not None and other_room.id == current.id:
            sentences.append(
                f"You also see {name} here in the {_room_display(current)}, "
                f"{pron} {verb} holding {_holding_text(other.inventory)}."
            )
        elif name in belief.last_seen_agents or other.id in belief.last_seen_agents:
            sighting = belief.last_seen_agents.get(other.id) or belief.last_seen_agents[name]
            seen_room = next((r for r in world.rooms if r.id == sighting.room_id), None)
            room_name = _room_display(seen_room) if seen_room else sighting.room_id
            verb_past = "were" if pron == "they" else "was"
            sentences.append(
                f"Last time you saw {name} was in the {room_name}, "
                f"{pron} {verb_past} holding {_holding_text(sighting.holding)}."
            )
        else:
            sentences.append(f"You don't know where {name} is.")

    for room in world.rooms:
        if current is not None and room.id == current.id:
            continue
        name = _room_display(room)
        if room.id not in belief.explored_rooms:
            sentences.append(f"The {name} is unexplored.")
            continue
        plain, unchecked = _container_pieces(world, belief, room)
        pieces = []
        if plain:
            pieces.append(", ".join(plain))
        if unchecked:
            pieces.append(_unchecked_phrase(unchecked))
        if pieces:
            sentences.append(f"You found {' and '.join(pieces)} in the {name}.")
        else:
            sentences.append(f"You found nothing in the {name}.")
    return " ".join(sentences)


def render_observation(
    world: WorldState,
    agent_id: str,
    style: str,
    belief: Optional[BeliefState] = None,
) -> Observation:
    if agent_id not in world.agents:
        raise UnknownAgent(agent_id)
    agent = world.agents[agent_id]
    visible = field_of_view(world, agent_id)
    if style == "ego_grid":
        text = _ego_grid_text(world, visible)
    elif style == "ego_scene":
        text = _ego_scene_text(world, visible)
    elif style == "room_summary":
        if belief is None:
            raise MissingBelief("room_summary requires a BeliefState")
        text = _room_summary_text(world, agent, belief)
    else:
        raise ValueError(f"unknown observation style {style!r}")
    manipulable = [
        item.object_id
        for item in visible.items
        if item.direction == "front" and item.distance <= agent.config.manipulate_distance
    ]
    return Observation(text=text, visible=visible, style=style, manipulable=manipulable)


_OCTANT_ORDER = (
    "north",
    "northeast",
    "east",
    "southeast",
    "south",
    "southwest",
    "west",
    "northwest",
    "center",
)


def narrate_scene(world: WorldState, room_id: Optional[str] = None) -> str:
    """Ground-truth room narration grouped by compass octant, with receptacle
    contents revealed. Used as the rearrangement memory block."""
    room = world.rooms[0] if room_id is None else next(r for r in world.rooms if r.id == room_id)
    groups: dict[str, list[str]] = {name: [] for name in _OCTANT_ORDER}
    for oid in sorted(world.objects):
        obj = world.objects[oid]
        if obj.holder is not None or world.container_of(oid) is not None:
            continue
        if not room.contains(obj.cell):
            continue
        text = f"a {oid}"
        if obj.contents:
            inner = ", ".join(f"a {cid}" for cid in obj.contents)
            text += f", in/on it you can see {inner}"
        groups[compass_octant(room.bounds, obj.cell)].append(text)
    sentences = []
    for octant in _OCTANT_ORDER:
        if groups[octant]:
            sentences.append(
                f"In the {octant} of the room, there is {'; '.join(groups[octant])}."
            )
    return " ".join(sentences)


# ---------------------------------------------------------------------------
# Belief updates


def _reveal_room(belief: BeliefState, world: WorldState, room: Room) -> None:
    belief.explored_rooms.add(room.id)
    for obj in world.objects.values():
        if obj.has("receptacle") and obj.holder is None and room.contains(obj.cell):
            if world.container_of(obj.id) is None:
                belief.found_objects.setdefault(obj.id, room.id)


def _record_sightings(belief: BeliefState, world: WorldState, agent_id: str, step: int) -> None:
    me = world.agents[agent_id]
    my_room = world.room_at(me.pose.cell)
    if my_room is None:
        return
    for other in world.agents.values():
        if other.id == agent_id:
            continue
        other_room = world.room_at(other.pose.cell)
        if other_room is not None and other_room.id == my_room.id:
            belief.last_seen_agents[other.id] = AgentSighting(
                room_id=my_room.id, holding=list(other.inventory), step=step
            )


def update_belief(
    belief: BeliefState,
    world: WorldState,
    agent_id: str,
    event: object,
    step: int = 0,
) -> BeliefState:
    """Accumulate exploration, checks, placements, and sightings. Idempotent."""
    agent = world.agents[agent_id]
    room = world.room_at(agent.pose.cell)
    if room is not None and room.id in belief.explored_rooms:
        _reveal_room(belief, world, room)  # newly revealed receptacles stay current

    call = getattr(event, "call", None)
    ok = getattr(event, "ok", True)
    if call is not None and ok:
        name = call.spec.name
        if name == "go_explore" and room is not None:
            _reveal_room(belief, world, room)
        elif name == "go_check" and call.resolved:
            recep_id = call.resolved[0]
            belief.checked_containers.add(recep_id)
            recep = world.objects.get(recep_id)
            if recep is not None:
                recep_room = world.room_at(recep.cell)
                if recep_room is not None:
                    belief.found_objects.setdefault(recep_id, recep_room.id)
                    for cid in recep.contents:
                        belief.found_objects.setdefault(cid, recep_room.id)
        elif name in ("go_put", "put", "place") and call.resolved:
            recep_id = call.resolved[-1]
            if belief.goal_receptacle and recep_id == belief.goal_receptacle:
                recep = world.objects.get(recep_id)
                placed_now = recep.contents if recep else []
                for cid in placed_now:
                    if cid not in belief.placed_objects:
                        belief.placed_objects.append(cid)
    _record_sightings(belief, world, agent_id, step)
    return belief
