"""langworld: a deterministic textual embodied-world engine.

Partially observable grid worlds rendered to natural language, a parsed and
validated action system, six task families with goal checkers and metrics,
an optimal expert-trajectory generator, and a prompting harness for LLM,
scripted, and human agents.
"""

from .world import (
    AgentBody,
    AgentConfig,
    GridPose,
    Heading,
    ObjectEntity,
    ObjectState,
    Room,
    StatusDiff,
    ViewShape,
    WorldState,
    compare_status,
    load_scene,
    occupancy_grid,
)

__version__ = "0.1.0"

__all__ = [
    "AgentBody",
    "AgentConfig",
    "GridPose",
    "Heading",
    "ObjectEntity",
    "ObjectState",
    "Room",
    "StatusDiff",
    "ViewShape",
    "WorldState",
    "compare_status",
    "load_scene",
    "occupancy_grid",
]
