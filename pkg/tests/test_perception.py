from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from langworld.actions import ActionCall, execute_action, primitive
from langworld.errors import MissingBelief, OutOfRoom, SamePoint, UnknownAgent
from langworld.perception import (
    EMPTY_EGO_SCENE,
    BeliefState,
    compass_octant,
    direction_bucket_from_angle,
    field_of_view,
    relative_direction,
    render_observation,
    update_belief,
)
from langworld.world import GridPose, Heading, load_scene

from .oracles import oracle_visible_set, visible_triples
from .scenes import corridor_doc, kitchen_doc, kitchen_world, minimal_doc, random_scene_doc


class TestFieldOfView:
    def test_object_straight_ahead_rect(self):
        world = load_scene(corridor_doc())
        visible = field_of_view(world, "agent_0")
        ball = visible.get("ball_0")
        assert ball is not None and ball.direction == "front"

    def test_closed_receptacle_conceals_until_opened(self):
        doc = kitchen_doc()
        doc["objects"].append(
            {"id": "potato_0", "category": "potato", "container": "fridge_0",
             "affordances": ["pickupable"]}
        )
        doc["agents"][0]["cell"] = [7, 6]
        world = load_scene(doc)
        assert "potato_0" not in field_of_view(world, "agent_0")
        world.objects["fridge_0"].state.open = True
        assert "potato_0" in field_of_view(world, "agent_0")

    def test_wall_edge_occludes(self):
        # oracle cross-check on a wall directly across the line of sight
        doc = minimal_doc()
        doc["objects"] = [{"id": "ball_0", "category": "ball", "cell": [0, 2],
                           "affordances": ["pickupable"]}]
        doc["walls"] = [[[0, 1], [0, 2]]]
        doc["agents"][0]["config"] = {"view_shape": "rect", "view_distance": 7, "side_steps": 3}
        world = load_scene(doc)
        got = visible_triples(field_of_view(world, "agent_0").items)
        assert got == oracle_visible_set(world, "agent_0")
        assert got == set()

    def test_blocking_object_occludes_behind_it(self):
        doc = minimal_doc()
        doc["objects"] = [
            {"id": "crate_0", "category": "crate", "cell": [0, 1], "affordances": ["blocking"]},
            {"id": "ball_0", "category": "ball", "cell": [0, 2], "affordances": ["pickupable"]},
        ]
        doc["agents"][0]["config"] = {"view_shape": "rect", "view_distance": 7, "side_steps": 3}
        world = load_scene(doc)
        ids = field_of_view(world, "agent_0").ids
        assert "crate_0" in ids and "ball_0" not in ids

    def test_unknown_agent(self):
        with pytest.raises(UnknownAgent):
            field_of_view(kitchen_world(), "ghost")

    def test_oracle_vision_sees_everything_not_concealed(self):
        doc = kitchen_doc()
        doc["agents"][0]["config"]["oracle_vision"] = True
        world = load_scene(doc)
        ids = set(field_of_view(world, "agent_0").ids)
        assert "egg_0" not in ids  # still inside the closed fridge
        assert {"fridge_0", "cabinet_0", "mug_0", "lettuce_0"} <= ids

    @pytest.mark.parametrize("seed", range(150))
    def test_matches_bruteforce_oracle(self, seed):
        rng = random.Random(9000 + seed)
        world = load_scene(random_scene_doc(rng))
        got = visible_triples(field_of_view(world, "agent_0").items)
        assert got == oracle_visible_set(world, "agent_0")

    @pytest.mark.parametrize("seed", range(60))
    def test_rotational_consistency(self, seed):
        rng = random.Random(500 + seed)
        doc = random_scene_doc(rng, max_side=8)
        world = load_scene(doc)
        base = visible_triples(field_of_view(world, "agent_0").items)

        rotated = _rotate_doc_minus_90(doc)
        rotated_world = load_scene(rotated)
        spun = visible_triples(field_of_view(rotated_world, "agent_0").items)
        assert base == spun

    def test_deterministic_ordering(self):
        world = kitchen_world()
        first = field_of_view(world, "agent_0").items
        second = field_of_view(world, "agent_0").items
        assert first == second
        order = [( -1 if i.direction == "front" else 0, ) for i in first]
        assert order == sorted(order)


def _rotate_doc_minus_90(doc):
    """Rotate the scene clockwise and the agent heading with it."""
    out = {"schema": doc["schema"], "rooms": [], "objects": [], "agents": [], "walls": []}

    def rot(cell):
        x, y = cell
        return [y, -x]

    for room in doc["rooms"]:
        x0, y0, x1, y1 = room["bounds"]
        nx0, ny0 = y0, -x1
        nx1, ny1 = y1, -x0
        out["rooms"].append({**room, "bounds": [nx0, ny0, nx1, ny1]})
    for obj in doc.get("objects", []):
        entry = dict(obj)
        if "cell" in entry:
            entry["cell"] = rot(entry["cell"])
        out["objects"].append(entry)
    for a, b in doc.get("walls", []):
        out["walls"].append([rot(a), rot(b)])
    spin = {"north": "east", "east": "south", "south": "west", "west": "north"}
    for agent in doc["agents"]:
        entry = dict(agent)
        entry["cell"] = rot(entry["cell"])
        entry["heading"] = spin[entry.get("heading", "north")]
        out["agents"].append(entry)
    return out


class TestRelativeDirection:
    def test_straight_ahead(self):
        assert relative_direction(GridPose((0, 0), Heading.NORTH), (0, 3)) == "front"

    def test_behind_left(self):
        assert relative_direction(GridPose((0, 0), Heading.NORTH), (-2, -2)) == "rear-left"

    def test_exact_diagonal_is_front_left(self):
        assert relative_direction(GridPose((0, 0), Heading.NORTH), (-1, 1)) == "front-left"

    def test_same_point(self):
        with pytest.raises(SamePoint):
            relative_direction(GridPose((2, 2), Heading.NORTH), (2, 2))

    def test_boundary_angles_fall_frontward(self):
        # enumerate all eight sector boundaries on each side
        expectations = {
            22.5: "front",
            67.5: "front-left",
            112.5: "left",
            157.5: "rear-left",
            -22.5: "front",
            -67.5: "front-right",
            -112.5: "right",
            -157.5: "rear-right",
        }
        for angle, bucket in expectations.items():
            assert direction_bucket_from_angle(angle) == bucket, angle

    def test_sector_centers(self):
        centers = {
            0.0: "front",
            45.0: "front-left",
            90.0: "left",
            135.0: "rear-left",
            180.0: "rear",
            -45.0: "front-right",
            -90.0: "right",
            -135.0: "rear-right",
        }
        for angle, bucket in centers.items():
            assert direction_bucket_from_angle(angle) == bucket, angle


class TestCompassOctant:
    BOUNDS = (0, 0, 8, 8)

    def test_top_middle_is_north(self):
        assert compass_octant(self.BOUNDS, (4, 7)) == "north"

    def test_top_right_is_northeast(self):
        assert compass_octant(self.BOUNDS, (7, 7)) == "northeast"

    def test_center(self):
        assert compass_octant(self.BOUNDS, (4, 4)) == "center"

    def test_out_of_room(self):
        with pytest.raises(OutOfRoom):
            compass_octant(self.BOUNDS, (9, 0))

    def test_all_nine_tiles(self):
        seen = {compass_octant(self.BOUNDS, (x, y)) for x in (1, 4, 7) for y in (1, 4, 7)}
        assert seen == {
            "northwest", "north", "northeast",
            "west", "center", "east",
            "southwest", "south", "southeast",
        }


class TestRenderObservation:
    def test_empty_ego_scene_exact_string(self):
        doc = minimal_doc()
        doc["agents"][0]["config"] = {"view_shape": "cone", "half_angle": 60, "view_distance": 8.0}
        world = load_scene(doc)
        obs = render_observation(world, "agent_0", "ego_scene")
        assert obs.text == EMPTY_EGO_SCENE

    def test_ego_grid_red_box_on_right(self):
        doc = minimal_doc()
        doc["agents"][0]["cell"] = [0, 1]
        doc["agents"][0]["config"] = {"view_shape": "rect", "view_distance": 7, "side_steps": 3}
        doc["objects"] = [{"id": "box_0", "category": "red box", "cell": [2, 1],
                           "affordances": ["pickupable"]}]
        world = load_scene(doc)
        obs = render_observation(world, "agent_0", "ego_grid")
        assert "a red box on your right" in obs.text

    def test_ego_grid_empty(self):
        world = load_scene(minimal_doc())
        assert render_observation(world, "agent_0", "ego_grid").text == "You can see nothing ahead."

    def test_ego_scene_inlines_open_receptacle_contents(self):
        doc = kitchen_doc()
        doc["agents"][0]["cell"] = [7, 6]
        world = load_scene(doc)
        world.objects["fridge_0"].state.open = True
        obs = render_observation(world, "agent_0", "ego_scene")
        assert "an opened fridge_0, there is a egg_0 in/on it" in obs.text

    def test_room_summary_requires_belief(self):
        world = kitchen_world()
        with pytest.raises(MissingBelief):
            render_observation(world, "agent_0", "room_summary")

    def test_room_summary_checked_container_leaves_unchecked_list(self):
        world = kitchen_world()
        belief = BeliefState()
        belief.explored_rooms.add("kitchen_0")
        for oid in ("fridge_0", "cabinet_0", "microwave_0", "diningtable_0", "sink_0"):
            belief.found_objects[oid] = "kitchen_0"
        before = render_observation(world, "agent_0", "room_summary", belief).text
        assert "fridge_0" in before and "cabinet_0" in before
        belief.checked_containers.add("fridge_0")
        after = render_observation(world, "agent_0", "room_summary", belief).text
        unchecked_before = _unchecked_names(before)
        unchecked_after = _unchecked_names(after)
        assert unchecked_before - unchecked_after == {"fridge_0"}

    def test_rendering_injective_at_text_granularity(self):
        # distinct (id, section, contents) structures never collide in text
        world = kitchen_world()
        seen: dict[str, frozenset] = {}
        for x in range(9):
            for y in range(9):
                for heading in Heading:
                    if any(a.pose.cell == (x, y) for a in world.agents.values()):
                        pass
                    world.agents["agent_0"].pose = GridPose((x, y), heading)
                    if not world.in_bounds((x, y)):
                        continue
                    obs = render_observation(world, "agent_0", "ego_scene")
                    key = frozenset(
                        (i.object_id, i.direction, i.contents_visible)
                        for i in obs.visible.items
                    )
                    if obs.text in seen:
                        assert seen[obs.text] == key or _sections_match(obs, key, seen[obs.text])
                    else:
                        seen[obs.text] = key


def _sections_match(obs, key_a, key_b):
    from langworld.perception import ego_section

    def collapse(key):
        return frozenset((oid, ego_section(d), cv) for oid, d, cv in key)

    return collapse(key_a) == collapse(key_b)


def _unchecked_names(text: str) -> set[str]:
    marker = "unchecked containers "
    if marker not in text:
        return set()
    segment = text.split(marker, 1)[1].split(".", 1)[0]
    return {name.strip() for name in segment.split(",")}


class TestUpdateBelief:
    def _wah_world(self):
        doc = {
            "schema": "langworld/scene@1",
            "rooms": [
                {"id": "kitchen_0", "category": "kitchen", "bounds": [0, 0, 4, 4]},
                {"id": "livingroom_0", "category": "livingroom", "bounds": [5, 0, 9, 4]},
            ],
            "objects": [
                {"id": "cabinet_0", "category": "cabinet", "cell": [1, 1],
                 "affordances": ["openable", "receptacle"]},
                {"id": "wine_0", "category": "wine", "container": "cabinet_0",
                 "affordances": ["pickupable"]},
                {"id": "coffeetable_0", "category": "coffeetable", "cell": [7, 2],
                 "affordances": ["receptacle"]},
            ],
            "agents": [
                {"id": "alice", "name": "Alice", "pronoun": "she", "cell": [0, 0],
                 "config": {"inventory_capacity": 2}},
                {"id": "bob", "name": "Bob", "pronoun": "he", "cell": [3, 3],
                 "config": {"inventory_capacity": 2}},
            ],
        }
        return load_scene(doc)

    def test_go_check_marks_container(self):
        world = self._wah_world()
        belief = BeliefState()
        call = ActionCall(primitive("go_check"), ["cabinet_0"])
        call.resolved = ["cabinet_0"]
        feedback = _ok_feedback(call)
        update_belief(belief, world, "alice", feedback)
        assert "cabinet_0" in belief.checked_containers
        assert belief.found_objects.get("wine_0") == "kitchen_0"

    def test_idempotent(self):
        world = self._wah_world()
        belief = BeliefState()
        call = ActionCall(primitive("go_check"), ["cabinet_0"])
        call.resolved = ["cabinet_0"]
        feedback = _ok_feedback(call)
        update_belief(belief, world, "alice", feedback)
        snapshot = (
            set(belief.checked_containers),
            dict(belief.found_objects),
            set(belief.explored_rooms),
        )
        update_belief(belief, world, "alice", feedback)
        assert snapshot == (
            set(belief.checked_containers),
            dict(belief.found_objects),
            set(belief.explored_rooms),
        )

    def test_sighting_records_holding(self):
        world = self._wah_world()
        wine = world.objects["wine_0"]
        world.objects["cabinet_0"].contents.remove("wine_0")
        wine.holder = "bob"
        wine.cell = world.agents["bob"].pose.cell
        world.agents["bob"].inventory.append("wine_0")
        belief = BeliefState()
        obs = render_observation(world, "alice", "room_summary", belief)
        update_belief(belief, world, "alice", obs, step=4)
        sighting = belief.last_seen_agents["bob"]
        assert sighting.holding == ["wine_0"]
        assert sighting.room_id == "kitchen_0"
        assert sighting.step == 4


def _ok_feedback(call):
    from langworld.actions import Feedback

    return Feedback(True, "Action succeeded.", call=call)


class TestConcealmentProperty:
    @pytest.mark.parametrize("seed", range(40))
    def test_no_closed_ancestor_ever_visible(self, seed):
        rng = random.Random(seed)
        world = load_scene(random_scene_doc(rng))
        from langworld.perception import concealed

        for item in field_of_view(world, "agent_0").items:
            assert not concealed(world, item.object_id)
