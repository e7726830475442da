"""A* search over (cell, heading) with unit costs for steps and turns."""

from __future__ import annotations

import heapq
from typing import Optional

from .errors import NoPath
from .world import Cell, GridPose, Heading, OccupancyGrid

MOVE, LEFT, RIGHT = "move_ahead", "turn_left", "turn_right"


def heading_toward(src: Cell, dst: Cell) -> Heading:
    """Heading that faces 4-adjacent dst from src."""
    dx, dy = dst[0] - src[0], dst[1] - src[1]
    for heading in Heading:
        if heading.vector == (dx, dy):
            return heading
    raise NoPath(f"{dst} is not adjacent to {src}")


def _manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def plan_route(
    grid: OccupancyGrid,
    start: GridPose,
    goals: set[tuple[Cell, Optional[Heading]]],
) -> list[str]:
    """Minimum-cost action sequence from start to any goal (cell, heading).

    A heading of None accepts any orientation at that cell. Expansion order is
    move_ahead, turn_left, turn_right with an insertion counter for ties, so
    equal-cost plans resolve deterministically.
    """
    if not goals:
        raise NoPath("no goal states")
    goal_cells = {cell for cell, _ in goals}

    def h(cell: Cell) -> int:
        return min(_manhattan(cell, g) for g in goal_cells)

    def is_goal(cell: Cell, heading: Heading) -> bool:
        return (cell, heading) in goals or (cell, None) in goals

    start_state = (start.cell, start.heading)
    counter = 0
    frontier: list[tuple[int, int, tuple[Cell, Heading]]] = [(h(start.cell), counter, start_state)]
    g_cost = {start_state: 0}
    parent: dict[tuple[Cell, Heading], tuple[tuple[Cell, Heading], str]] = {}
    closed: set[tuple[Cell, Heading]] = set()

    while frontier:
        _, _, state = heapq.heappop(frontier)
        if state in closed:
            continue
        closed.add(state)
        cell, heading = state
        if is_goal(cell, heading):
            actions: list[str] = []
            cursor = state
            while cursor in parent:
                cursor, action = parent[cursor]
                actions.append(action)
            actions.reverse()
            return actions
        base = g_cost[state]
        ahead = (cell[0] + heading.vector[0], cell[1] + heading.vector[1])
        successors = []
        if grid.can_step(cell, ahead):
            successors.append((MOVE, (ahead, heading)))
        successors.append((LEFT, (cell, heading.turn_left())))
        successors.append((RIGHT, (cell, heading.turn_right())))
        for action, nxt in successors:
            cost = base + 1
            if nxt not in g_cost or cost < g_cost[nxt]:
                g_cost[nxt] = cost
                parent[nxt] = (state, action)
                counter += 1
                heapq.heappush(frontier, (cost + h(nxt[0]), counter, nxt))
    raise NoPath(f"no route from {start.cell} to any of {sorted(goal_cells)}")


def plan_to_cell(
    grid: OccupancyGrid,
    start: GridPose,
    goal_cell: Cell,
    face: Optional[Heading] = None,
) -> list[str]:
    return plan_route(grid, start, {(goal_cell, face)})


def approach_goals(
    grid: OccupancyGrid,
    target: Cell,
    world_has_wall,
) -> set[tuple[Cell, Optional[Heading]]]:
    """Free 4-neighbors of target, each paired with the heading that faces it."""
    goals: set[tuple[Cell, Optional[Heading]]] = set()
    for heading in Heading:
        dx, dy = heading.vector
        neighbor = (target[0] - dx, target[1] - dy)
        if grid.is_free(neighbor) and not world_has_wall(neighbor, target):
            goals.add((neighbor, heading))
    return goals


def plan_adjacent(
    grid: OccupancyGrid,
    start: GridPose,
    target: Cell,
    world_has_wall,
) -> list[str]:
    """Route to a free neighbor of target, ending facing the target."""
    goals = approach_goals(grid, target, world_has_wall)
    if not goals:
        raise NoPath(f"no open approach to {target}")
    return plan_route(grid, start, goals)
