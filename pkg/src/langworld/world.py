"""Ground-truth world state: rooms, objects, agents, occupancy, and state diffs.

The world is a plain value. One episode owns one WorldState; mutation happens
only through the action system, and `clone()` gives the scratch copies the
planner simulates on.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Optional

from .errors import ConsistencyError, IdMismatch, SchemaError

SCENE_SCHEMA = "langworld/scene@1"

AFFORDANCES = frozenset(
    {
        "pickupable",
        "openable",
        "toggleable",
        "sliceable",
        "receptacle",
        "heater",
        "cooler",
        "cleaner",
        "blocking",
    }
)

ROOM_CATEGORIES = frozenset({"livingroom", "kitchen", "bedroom", "bathroom", "generic"})

TEMPERATURES = ("room", "hot", "cold")

Cell = tuple[int, int]


class Heading(str, Enum):
    NORTH = "north"
    EAST = "east"
    SOUTH = "south"
    WEST = "west"

    @property
    def vector(self) -> Cell:
        return _HEADING_VECTORS[self]

    def turn_right(self) -> "Heading":
        return _ORDER[(_ORDER.index(self) + 1) % 4]

    def turn_left(self) -> "Heading":
        return _ORDER[(_ORDER.index(self) - 1) % 4]


_ORDER = [Heading.NORTH, Heading.EAST, Heading.SOUTH, Heading.WEST]

# x grows East, y grows North.
_HEADING_VECTORS = {
    Heading.NORTH: (0, 1),
    Heading.EAST: (1, 0),
    Heading.SOUTH: (0, -1),
    Heading.WEST: (-1, 0),
}


@dataclass
class GridPose:
    cell: Cell
    heading: Heading

    def ahead(self, steps: int = 1) -> Cell:
        dx, dy = self.heading.vector
        return (self.cell[0] + dx * steps, self.cell[1] + dy * steps)

    def turned_right(self) -> "GridPose":
        return GridPose(self.cell, self.heading.turn_right())

    def turned_left(self) -> "GridPose":
        return GridPose(self.cell, self.heading.turn_left())


@dataclass
class ObjectState:
    open: bool = False
    toggled: bool = False
    sliced: bool = False
    dirty: bool = False
    temperature: str = "room"


@dataclass
class ObjectEntity:
    id: str
    category: str
    cell: Cell
    affordances: frozenset[str] = frozenset()
    state: ObjectState = field(default_factory=ObjectState)
    contents: list[str] = field(default_factory=list)
    holder: Optional[str] = None

    def has(self, affordance: str) -> bool:
        return affordance in self.affordances


@dataclass
class ViewShape:
    kind: str  # "cone" | "rect"
    half_angle: float = 60.0  # cone only, degrees, (0, 90]
    side_steps: int = 3  # rect only


@dataclass
class AgentConfig:
    view_distance: float = 8.0
    view_shape: ViewShape = field(default_factory=lambda: ViewShape("cone"))
    focal_length: Optional[float] = None
    manipulate_distance: float = 1.0
    inventory_capacity: int = 1
    oracle_vision: bool = False


@dataclass
class AgentBody:
    id: str
    pose: GridPose
    name: Optional[str] = None
    pronoun: str = "they"
    inventory: list[str] = field(default_factory=list)
    config: AgentConfig = field(default_factory=AgentConfig)

    @property
    def display_name(self) -> str:
        return self.name or self.id


@dataclass
class Room:
    id: str
    category: str
    bounds: tuple[int, int, int, int]  # x0, y0, x1, y1 inclusive cells

    def contains(self, cell: Cell) -> bool:
        x0, y0, x1, y1 = self.bounds
        return x0 <= cell[0] <= x1 and y0 <= cell[1] <= y1

    def cells(self) -> Iterable[Cell]:
        x0, y0, x1, y1 = self.bounds
        for y in range(y0, y1 + 1):
            for x in range(x0, x1 + 1):
                yield (x, y)


WallEdge = tuple[Cell, Cell]


def wall_edge(a: Cell, b: Cell) -> WallEdge:
    """Normalized wall edge between two 4-adjacent cells."""
    if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
        raise ConsistencyError(f"wall edge cells not adjacent: {a} {b}")
    return (a, b) if a <= b else (b, a)


@dataclass
class WorldState:
    rooms: list[Room]
    walls: frozenset[WallEdge]
    objects: dict[str, ObjectEntity]
    agents: dict[str, AgentBody]
    step_size_meters: float = 1.0
    seed: int = 0

    def clone(self) -> "WorldState":
        return copy.deepcopy(self)

    def room_at(self, cell: Cell) -> Optional[Room]:
        for room in self.rooms:
            if room.contains(cell):
                return room
        return None

    def in_bounds(self, cell: Cell) -> bool:
        return self.room_at(cell) is not None

    def container_of(self, object_id: str) -> Optional[ObjectEntity]:
        for obj in self.objects.values():
            if object_id in obj.contents:
                return obj
        return None

    def has_wall(self, a: Cell, b: Cell) -> bool:
        return wall_edge(a, b) in self.walls

    def validate(self) -> None:
        """Raise ConsistencyError on any broken invariant."""
        seen_cells: dict[Cell, str] = {}
        for agent in self.agents.values():
            if agent.pose.cell in seen_cells:
                raise ConsistencyError(
                    f"agents {seen_cells[agent.pose.cell]} and {agent.id} share a cell"
                )
            seen_cells[agent.pose.cell] = agent.id
            if not self.in_bounds(agent.pose.cell):
                raise ConsistencyError(f"agent {agent.id} outside all rooms")
            if len(agent.inventory) > agent.config.inventory_capacity:
                raise ConsistencyError(f"agent {agent.id} over inventory capacity")
            if agent.config.manipulate_distance > agent.config.view_distance:
                raise ConsistencyError(
                    f"agent {agent.id}: manipulate_distance exceeds view_distance"
                )
        containers: dict[str, str] = {}
        for obj in self.objects.values():
            if obj.contents and not obj.has("receptacle"):
                raise ConsistencyError(f"{obj.id} has contents but is not a receptacle")
            if obj.state.open and not obj.has("openable"):
                raise ConsistencyError(f"{obj.id} is open but not openable")
            if obj.holder is not None and not obj.has("pickupable"):
                raise ConsistencyError(f"{obj.id} is held but not pickupable")
            for cid in obj.contents:
                if cid == obj.id:
                    raise ConsistencyError(f"{obj.id} contains itself")
                if cid not in self.objects:
                    raise ConsistencyError(f"{obj.id} contains unknown id {cid}")
                if cid in containers:
                    raise ConsistencyError(f"{cid} appears in two receptacles")
                containers[cid] = obj.id
            if obj.holder is not None:
                if obj.holder not in self.agents:
                    raise ConsistencyError(f"{obj.id} held by unknown agent {obj.holder}")
                if obj.cell != self.agents[obj.holder].pose.cell:
                    raise ConsistencyError(f"held object {obj.id} does not mirror holder cell")
            elif obj.id not in containers and not self.in_bounds(obj.cell):
                pass  # checked below once containers is complete
        for obj in self.objects.values():
            if obj.holder is None and obj.id not in containers and not self.in_bounds(obj.cell):
                raise ConsistencyError(f"object {obj.id} outside all rooms")
            if obj.id in containers:
                parent = self.objects[containers[obj.id]]
                if obj.cell != parent.cell:
                    raise ConsistencyError(f"contained object {obj.id} does not mirror {parent.id}")


class OccupancyGrid:
    """free/blocked view of a world, with wall edges for step checks."""

    def __init__(self, world: WorldState, for_agent: Optional[str] = None):
        self._world = world
        self._blocked: set[Cell] = set()
        for obj in world.objects.values():
            if obj.has("blocking") and obj.holder is None and world.container_of(obj.id) is None:
                self._blocked.add(obj.cell)
        self._agent_cells: set[Cell] = set()
        if for_agent is not None:
            for agent in world.agents.values():
                if agent.id != for_agent:
                    self._agent_cells.add(agent.pose.cell)

    def is_free(self, cell: Cell) -> bool:
        if cell in self._blocked or cell in self._agent_cells:
            return False
        return self._world.in_bounds(cell)

    def can_step(self, src: Cell, dst: Cell) -> bool:
        """True when an agent standing on src may move onto 4-adjacent dst."""
        if abs(src[0] - dst[0]) + abs(src[1] - dst[1]) != 1:
            return False
        if not self.is_free(dst):
            return False
        return not self._world.has_wall(src, dst)

    def cells(self) -> dict[Cell, str]:
        out: dict[Cell, str] = {}
        for room in self._world.rooms:
            for cell in room.cells():
                out[cell] = "free" if self.is_free(cell) else "blocked"
        return out


def occupancy_grid(world: WorldState, for_agent: Optional[str] = None) -> OccupancyGrid:
    return OccupancyGrid(world, for_agent)


@dataclass(frozen=True)
class DiffEntry:
    object_id: str
    kind: str  # moved | openness | toggled | sliced | temperature | dirty | held
    start_value: Any
    target_value: Any


@dataclass
class StatusDiff:
    entries: list[DiffEntry] = field(default_factory=list)

    @property
    def object_ids(self) -> set[str]:
        return {e.object_id for e in self.entries}

    def __bool__(self) -> bool:
        return bool(self.entries)


_DIFF_DIMS = (
    ("moved", lambda o: o.cell),
    ("openness", lambda o: o.state.open),
    ("toggled", lambda o: o.state.toggled),
    ("sliced", lambda o: o.state.sliced),
    ("temperature", lambda o: o.state.temperature),
    ("dirty", lambda o: o.state.dirty),
    ("held", lambda o: o.holder),
)


def compare_status(start: WorldState, target: WorldState) -> StatusDiff:
    """One entry per (object, dimension) that differs; cells compared exactly."""
    if set(start.objects) != set(target.objects):
        raise IdMismatch(
            f"object id sets differ: {sorted(set(start.objects) ^ set(target.objects))}"
        )
    entries: list[DiffEntry] = []
    for oid in sorted(start.objects):
        a, b = start.objects[oid], target.objects[oid]
        for kind, getter in _DIFF_DIMS:
            va, vb = getter(a), getter(b)
            if va != vb:
                entries.append(DiffEntry(oid, kind, va, vb))
    return StatusDiff(entries)


# ---------------------------------------------------------------------------
# Scene loading


def _snap(value: Any) -> int:
    """Continuous coordinates snap to the nearest grid cell (half rounds up)."""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"coordinate is not a number: {value!r}")
    return math.floor(float(value) + 0.5)


def _snap_cell(raw: Any, where: str) -> Cell:
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise SchemaError(f"{where}: cell must be a 2-element array, got {raw!r}")
    return (_snap(raw[0]), _snap(raw[1]))


def _require(doc: dict, key: str, where: str) -> Any:
    if key not in doc:
        raise SchemaError(f"{where}: missing required field '{key}'")
    return doc[key]


def _load_view_shape(cfg: dict) -> ViewShape:
    kind = cfg.get("view_shape", "cone")
    if kind == "cone":
        half = float(cfg.get("half_angle", 0.0))
        focal = cfg.get("focal_length")
        if half <= 0.0 and focal is not None:
            # pinhole with unit sensor width; preserves "shorter focal, wider view"
            half = math.degrees(math.atan(1.0 / (2.0 * float(focal))))
        if half <= 0.0:
            half = 60.0
        if not 0.0 < half <= 90.0:
            raise SchemaError(f"cone half_angle must be in (0, 90], got {half}")
        return ViewShape("cone", half_angle=half)
    if kind == "rect":
        side = int(cfg.get("side_steps", 3))
        if side < 0:
            raise SchemaError("rect side_steps must be >= 0")
        return ViewShape("rect", side_steps=side)
    raise SchemaError(f"unknown view_shape {kind!r}")


def _load_agent(doc: dict) -> AgentBody:
    aid = _require(doc, "id", "agent")
    cell = _snap_cell(_require(doc, "cell", f"agent {aid}"), f"agent {aid}")
    heading_raw = str(doc.get("heading", "north")).lower()
    try:
        heading = Heading(heading_raw)
    except ValueError:
        raise SchemaError(f"agent {aid}: unknown heading {heading_raw!r}")
    cfg_doc = doc.get("config", {})
    if not isinstance(cfg_doc, dict):
        raise SchemaError(f"agent {aid}: config must be an object")
    config = AgentConfig(
        view_distance=float(cfg_doc.get("view_distance", 8.0)),
        view_shape=_load_view_shape(cfg_doc),
        focal_length=cfg_doc.get("focal_length"),
        manipulate_distance=float(cfg_doc.get("manipulate_distance", 1.0)),
        inventory_capacity=int(cfg_doc.get("inventory_capacity", 1)),
        oracle_vision=bool(cfg_doc.get("oracle_vision", False)),
    )
    if config.view_distance <= 0:
        raise SchemaError(f"agent {aid}: view_distance must be positive")
    if config.inventory_capacity < 0:
        raise SchemaError(f"agent {aid}: inventory_capacity must be >= 0")
    return AgentBody(
        id=aid,
        pose=GridPose(cell, heading),
        name=doc.get("name"),
        pronoun=doc.get("pronoun", "they"),
        config=config,
    )


def _load_object(doc: dict) -> tuple[ObjectEntity, Optional[str]]:
    oid = _require(doc, "id", "object")
    category = doc.get("category", oid.rsplit("_", 1)[0])
    affordances = doc.get("affordances", [])
    if not isinstance(affordances, (list, tuple)):
        raise SchemaError(f"object {oid}: affordances must be an array")
    bad = set(affordances) - AFFORDANCES
    if bad:
        raise SchemaError(f"object {oid}: unknown affordances {sorted(bad)}")
    state_doc = doc.get("state", {})
    if not isinstance(state_doc, dict):
        raise SchemaError(f"object {oid}: state must be an object")
    temperature = state_doc.get("temperature", "room")
    if temperature not in TEMPERATURES:
        raise SchemaError(f"object {oid}: bad temperature {temperature!r}")
    state = ObjectState(
        open=bool(state_doc.get("open", False)),
        toggled=bool(state_doc.get("toggled", False)),
        sliced=bool(state_doc.get("sliced", False)),
        dirty=bool(state_doc.get("dirty", False)),
        temperature=temperature,
    )
    container = doc.get("container")
    if container is None and "cell" not in doc:
        raise SchemaError(f"object {oid}: needs either cell or container")
    cell = _snap_cell(doc["cell"], f"object {oid}") if "cell" in doc else (0, 0)
    obj = ObjectEntity(
        id=oid,
        category=category,
        cell=cell,
        affordances=frozenset(affordances),
        state=state,
    )
    return obj, container


def load_scene(scene_doc: dict) -> WorldState:
    """Build a validated WorldState from a `langworld/scene@1` document."""
    if not isinstance(scene_doc, dict):
        raise SchemaError("scene document must be an object")
    schema = scene_doc.get("schema", SCENE_SCHEMA)
    if schema != SCENE_SCHEMA:
        raise SchemaError(f"unsupported scene schema {schema!r}")
    rooms: list[Room] = []
    room_ids: set[str] = set()
    for rdoc in _require(scene_doc, "rooms", "scene"):
        rid = _require(rdoc, "id", "room")
        if rid in room_ids:
            raise ConsistencyError(f"duplicate room id {rid}")
        room_ids.add(rid)
        category = rdoc.get("category", "generic")
        if category not in ROOM_CATEGORIES:
            raise SchemaError(f"room {rid}: unknown category {category!r}")
        bounds_raw = _require(rdoc, "bounds", f"room {rid}")
        if not isinstance(bounds_raw, (list, tuple)) or len(bounds_raw) != 4:
            raise SchemaError(f"room {rid}: bounds must be [x0, y0, x1, y1]")
        x0, y0, x1, y1 = (_snap(v) for v in bounds_raw)
        if x1 < x0 or y1 < y0:
            raise SchemaError(f"room {rid}: empty bounds")
        rooms.append(Room(rid, category, (x0, y0, x1, y1)))
    if not rooms:
        raise SchemaError("scene has no rooms")

    walls: set[WallEdge] = set()
    for pair in scene_doc.get("walls", []):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise SchemaError(f"wall entry must be [cellA, cellB], got {pair!r}")
        a = _snap_cell(pair[0], "wall")
        b = _snap_cell(pair[1], "wall")
        walls.add(wall_edge(a, b))

    objects: dict[str, ObjectEntity] = {}
    containers: dict[str, str] = {}
    for odoc in scene_doc.get("objects", []):
        obj, container = _load_object(odoc)
        if obj.id in objects:
            raise ConsistencyError(f"duplicate object id {obj.id}")
        objects[obj.id] = obj
        if container is not None:
            containers[obj.id] = container

    for oid, parent_id in containers.items():
        if parent_id not in objects:
            raise ConsistencyError(f"object {oid}: container {parent_id} does not exist")
        parent = objects[parent_id]
        if not parent.has("receptacle"):
            raise ConsistencyError(f"object {oid}: container {parent_id} is not a receptacle")
        parent.contents.append(oid)
    for oid in containers:
        chain = {oid}
        walk = oid
        while walk in containers:
            walk = containers[walk]
            if walk in chain:
                raise ConsistencyError(f"containment cycle through {oid}")
            chain.add(walk)
    # nested receptacles: propagate cells down containment chains
    for _ in range(len(containers)):
        for oid, parent_id in containers.items():
            objects[oid].cell = objects[parent_id].cell

    agents: dict[str, AgentBody] = {}
    for adoc in scene_doc.get("agents", []):
        agent = _load_agent(adoc)
        if agent.id in agents:
            raise ConsistencyError(f"duplicate agent id {agent.id}")
        agents[agent.id] = agent

    world = WorldState(
        rooms=rooms,
        walls=frozenset(walls),
        objects=objects,
        agents=agents,
        step_size_meters=float(scene_doc.get("step_size_meters", 1.0)),
        seed=int(scene_doc.get("seed", 0)),
    )
    if world.step_size_meters <= 0:
        raise SchemaError("step_size_meters must be positive")
    world.validate()
    return world


def scene_to_doc(world: WorldState) -> dict:
    """Serialize a WorldState back into a `langworld/scene@1` document."""
    doc: dict = {
        "schema": SCENE_SCHEMA,
        "step_size_meters": world.step_size_meters,
        "seed": world.seed,
        "rooms": [
            {"id": r.id, "category": r.category, "bounds": list(r.bounds)} for r in world.rooms
        ],
        "walls": sorted([list(a), list(b)] for a, b in world.walls),
        "objects": [],
        "agents": [],
    }
    for obj in world.objects.values():
        entry: dict = {
            "id": obj.id,
            "category": obj.category,
            "affordances": sorted(obj.affordances),
            "state": {
                "open": obj.state.open,
                "toggled": obj.state.toggled,
                "sliced": obj.state.sliced,
                "dirty": obj.state.dirty,
                "temperature": obj.state.temperature,
            },
        }
        container = world.container_of(obj.id)
        if container is not None:
            entry["container"] = container.id
        else:
            entry["cell"] = list(obj.cell)
        doc["objects"].append(entry)
    for agent in world.agents.values():
        shape = agent.config.view_shape
        cfg: dict = {
            "view_distance": agent.config.view_distance,
            "view_shape": shape.kind,
            "manipulate_distance": agent.config.manipulate_distance,
            "inventory_capacity": agent.config.inventory_capacity,
            "oracle_vision": agent.config.oracle_vision,
        }
        if shape.kind == "cone":
            cfg["half_angle"] = shape.half_angle
        else:
            cfg["side_steps"] = shape.side_steps
        entry = {
            "id": agent.id,
            "cell": list(agent.pose.cell),
            "heading": agent.pose.heading.value,
            "config": cfg,
        }
        if agent.name:
            entry["name"] = agent.name
        if agent.pronoun != "they":
            entry["pronoun"] = agent.pronoun
        doc["agents"].append(entry)
    return doc
