from __future__ import annotations

import json
import socket
import threading
import urllib.error
import urllib.request

import pytest

from langworld.backends import expert_script
from langworld.service import make_server, resolve_task_doc
from langworld.tasks import load_task
from langworld.world import load_scene


@pytest.fixture(scope="module")
def service():
    server, manager = make_server()
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1", manager
    server.shutdown()


def _post(base: str, path: str, doc: dict) -> dict:
    request = urllib.request.Request(
        base + path,
        data=json.dumps(doc).encode(),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(request) as response:
        return json.loads(response.read())


def _get(base: str, path: str) -> dict:
    with urllib.request.urlopen(base + path) as response:
        return json.loads(response.read())


def _expert_lines(task_ref: str) -> list[str]:
    task_doc = resolve_task_doc(task_ref)
    task = load_task(task_doc)
    world = load_scene(task_doc["scene"])
    return expert_script(world, task, naming="category")


class TestSessionLifecycle:
    def test_create_session_awaits_human_with_observation(self, service):
        base, _ = service
        desc = _post(base, "/sessions", {"task_ref": "IG:2", "human_roles": ["solo"]})
        assert desc["status"] == "awaiting_human"
        assert desc["waiting_human"] == "agent_0"
        assert "Obs: " in desc["pending_prompt"]
        palette = desc["action_palettes"]["agent_0"]["actions"]
        assert [a["name"] for a in palette] == [
            "move_ahead", "turn_left", "turn_right", "pick_up", "drop", "toggle", "stop",
        ]

    def test_human_plays_expert_line_to_success(self, service):
        base, _ = service
        desc = _post(base, "/sessions", {"task_ref": "IG:2", "human_roles": ["solo"]})
        sid = desc["session_id"]
        final = None
        for line in _expert_lines("IG:2"):
            result = _post(base, f"/sessions/{sid}/input", {"kind": "action", "text": line})
            assert result["feedback"] is None or result["feedback"].startswith(
                ("Action succeeded.", "Action failed.")
            )
            if result.get("final_report"):
                final = result["final_report"]
                break
        assert final is not None and final["outcome"] == "Success"

    def test_feedback_matches_terminal_path(self, service):
        # transport-parse equivalence: HTTP input and direct engine text agree
        base, _ = service
        desc = _post(base, "/sessions", {"task_ref": "IG:2", "human_roles": ["solo"]})
        sid = desc["session_id"]
        result = _post(base, f"/sessions/{sid}/input", {"kind": "action", "text": "turn_right"})
        assert result["feedback"] == "Action succeeded. Turned right by '90' degrees."

    def test_unknown_task(self, service):
        base, _ = service
        with pytest.raises(urllib.error.HTTPError) as err:
            _post(base, "/sessions", {"task_ref": "Nonsense:0", "human_roles": []})
        assert err.value.code == 404

    def test_unknown_role_conflict(self, service):
        base, _ = service
        with pytest.raises(urllib.error.HTTPError) as err:
            _post(base, "/sessions", {"task_ref": "IG:0", "human_roles": ["pilot"]})
        assert err.value.code == 409

    def test_input_after_finish_is_conflict(self, service):
        base, _ = service
        desc = _post(base, "/sessions", {"task_ref": "IG:2", "human_roles": ["solo"]})
        sid = desc["session_id"]
        for line in _expert_lines("IG:2"):
            result = _post(base, f"/sessions/{sid}/input", {"kind": "action", "text": line})
            if result.get("final_report"):
                break
        with pytest.raises(urllib.error.HTTPError) as err:
            _post(base, f"/sessions/{sid}/input", {"kind": "action", "text": "turn_left"})
        assert err.value.code == 409

    def test_parse_error_surfaces_as_feedback(self, service):
        base, _ = service
        desc = _post(base, "/sessions", {"task_ref": "IG:3", "human_roles": ["solo"]})
        sid = desc["session_id"]
        result = _post(
            base, f"/sessions/{sid}/input", {"kind": "action", "text": "do a barrel roll"}
        )
        # unparseable input is acknowledged and re-prompted, not a transport error
        assert result["status"] == "awaiting_human"


class TestEventStream:
    def _read_stream(self, base: str, sid: str, cursor: int, max_events: int) -> list[dict]:
        url = f"{base}/sessions/{sid}/events?cursor={cursor}"
        out: list[dict] = []
        with urllib.request.urlopen(url, timeout=10) as response:
            buffer = b""
            while len(out) < max_events:
                chunk = response.read1(65536)
                if not chunk:
                    break
                buffer += chunk
                while b"\n\n" in buffer:
                    frame, buffer = buffer.split(b"\n\n", 1)
                    lines = frame.decode().splitlines()
                    fields = {}
                    for line in lines:
                        key, _, value = line.partition(": ")
                        fields.setdefault(key, value)
                    if fields.get("event") == "end":
                        return out
                    if "data" in fields:
                        out.append(json.loads(fields["data"]))
        return out

    def test_subscribe_from_zero_gets_setup_and_observation(self, service):
        base, _ = service
        desc = _post(base, "/sessions", {"task_ref": "IG:1", "human_roles": ["solo"]})
        sid = desc["session_id"]
        events = self._read_stream(base, sid, 0, 2)
        assert events[0]["kind"] == "system"
        assert events[0]["payload"]["subkind"] == "setup"
        assert events[1]["kind"] == "observation"

    def test_reconnect_resumes_at_cursor(self, service):
        base, _ = service
        desc = _post(base, "/sessions", {"task_ref": "IG:1", "human_roles": ["solo"]})
        sid = desc["session_id"]
        first = self._read_stream(base, sid, 0, 2)
        cursor = first[-1]["index"] + 1
        _post(base, f"/sessions/{sid}/input", {"kind": "action", "text": "turn_left"})
        resumed = self._read_stream(base, sid, cursor, 1)
        assert resumed
        assert resumed[0]["index"] == cursor

    def test_two_subscribers_identical(self, service):
        base, _ = service
        desc = _post(base, "/sessions", {"task_ref": "IG:1", "human_roles": ["solo"]})
        sid = desc["session_id"]
        one = self._read_stream(base, sid, 0, 2)
        two = self._read_stream(base, sid, 0, 2)
        assert one == two


class TestSessionIsolation:
    def test_concurrent_sessions_do_not_mix_events(self, service):
        base, manager = service
        a = _post(base, "/sessions", {"task_ref": "IG:1", "human_roles": ["solo"]})
        b = _post(base, "/sessions", {"task_ref": "IG:4", "human_roles": ["solo"]})
        _post(base, f"/sessions/{a['session_id']}/input", {"kind": "action", "text": "turn_left"})
        _post(base, f"/sessions/{b['session_id']}/input", {"kind": "action", "text": "turn_right"})
        events_a = manager.get(a["session_id"]).events
        events_b = manager.get(b["session_id"]).events
        acts_a = [e for e in events_a if e["kind"] == "action"]
        acts_b = [e for e in events_b if e["kind"] == "action"]
        assert [e["payload"]["name"] for e in acts_a] == ["turn_left"]
        assert [e["payload"]["name"] for e in acts_b] == ["turn_right"]


class TestAskThroughService:
    def test_agent_ask_blocks_until_answer(self, service):
        base, _ = service
        task_doc = resolve_task_doc("Household:0")
        task_doc["roles"][0]["action_space"] = "household_ask"
        lines = ["Act: ask [Which receptacle should I use?]", "Act: stop []"]
        desc = _post(base, "/sessions", {
            "task": task_doc,
            "human_roles": [],
            "backend": {"kind": "scripted", "lines": lines},
        })
        sid = desc["session_id"]
        state = _get(base, f"/sessions/{sid}")
        assert state["status"] == "awaiting_human"
        assert state["pending_ask"] == "Which receptacle should I use?"
        result = _post(base, f"/sessions/{sid}/input", {"kind": "answer", "text": "The table."})
        assert result["status"] == "finished"
        episode = _get(base, f"/episodes/{sid}")
        kinds = [e["kind"] for e in episode["events"]]
        assert "ask" in kinds and "human_answer" in kinds


class TestEpisodeEndpoint:
    def test_full_transcript_matches_session_stream(self, service):
        base, manager = service
        desc = _post(base, "/sessions", {"task_ref": "IG:2", "human_roles": ["solo"]})
        sid = desc["session_id"]
        for line in _expert_lines("IG:2"):
            result = _post(base, f"/sessions/{sid}/input", {"kind": "action", "text": line})
            if result.get("final_report"):
                break
        episode = _get(base, f"/episodes/{sid}")
        session_events = manager.get(sid).events
        assert episode["events"] == session_events
        assert episode["outcome"] == "Success"
