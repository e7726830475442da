from __future__ import annotations

import json
import pathlib
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from hypothesis import given, settings, strategies as st

from langworld.actions import load_space
from langworld.backends import EchoBackend, ScriptedBackend
from langworld.errors import BackendError, UnboundSlot
from langworld.generator import FAMILIES, generate
from langworld.promptkit import (
    STRATEGIES,
    Strategy,
    build_system_prompt,
    first_task_message,
    llm_complete,
    parse_agent_reply,
    reflect,
)
from langworld.tasks import load_task
from langworld.world import load_scene

FIXTURE_DIR = pathlib.Path(__file__).parent / "fixtures" / "prompts"

MEMORY_SAMPLE = (
    "In the last trial I walked past the target room; this time turn right at the start."
)


def _fixture_text(family: str, strategy_kind: str) -> str:
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


class TestPromptFixtures:
    @pytest.mark.parametrize("family", FAMILIES)
    @pytest.mark.parametrize("strategy", STRATEGIES)
    def test_byte_match_golden_fixture(self, family, strategy):
        name = f"{family.lower().replace('-', '_')}_{strategy.lower()}.txt"
        golden = (FIXTURE_DIR / name).read_text()
        assert _fixture_text(family, strategy) == golden

    def test_ig_view_substring(self):
        text = (FIXTURE_DIR / "ig_act.txt").read_text()
        assert (
            "You can see at most 7 step(s) in front of you, 3 step(s) on your left" in text
        )

    def test_cone_view_substring(self):
        text = (FIXTURE_DIR / "rearrangement_act.txt").read_text()
        assert (
            "You can see at most 8.0 step(s) in front of you; 60 degrees on your left" in text
        )

    def test_reflexion_memory_slot(self):
        text = (FIXTURE_DIR / "ig_reflexionemmem.txt").read_text()
        assert "Your memory from last trails is:" in text

    def test_handshake_line_everywhere(self):
        for path in FIXTURE_DIR.glob("*.txt"):
            assert "Respond YES if you can play this game." in path.read_text(), path

    def test_strategy_separation(self):
        act = (FIXTURE_DIR / "household_act.txt").read_text()
        assert "Thought" not in act
        emmem = (FIXTURE_DIR / "household_reactemmem.txt").read_text()
        assert "I have taken 0 steps and I am facing NORTH now" in emmem
        react = (FIXTURE_DIR / "household_react.txt").read_text()
        assert 'State your thought or think process starting with "Thought: "' in react
        assert "Your memory from last trails is:" not in react

    def test_memory_rendered_empty_on_first_trial(self):
        scene_doc, task_doc = generate("IG", 0)
        task = load_task(task_doc)
        world = load_scene(scene_doc)
        prompt = build_system_prompt(
            task, world.agents["agent_0"], Strategy("Reflexion"), memory=""
        )
        assert "Your memory from last trails is: \n" in prompt + "\n"

    def test_unbound_slot_raises(self):
        scene_doc, task_doc = generate("MA-WAH", 0)
        task = load_task(task_doc)
        task.roles = task.roles[:1]  # strip the peer: {peer_name} has a fallback
        world = load_scene(scene_doc)
        prompt = build_system_prompt(task, world.agents[task.roles[0].agent_id], Strategy("Act"))
        assert "{peer_name}" not in prompt


class TestParseAgentReply:
    SPACE = load_space("household")

    def test_thought(self):
        reply = parse_agent_reply("Thought: Found it!", self.SPACE)
        assert reply.kind == "thought"
        assert reply.text == "Found it!"
        assert not reply.warning

    def test_iqa_bracket_thought(self):
        reply = parse_agent_reply("thought [Found it!]")
        assert reply.kind == "thought"
        assert reply.text == "Found it!"

    def test_stop_with_answer(self):
        reply = parse_agent_reply(
            "Act: stop [examined the phone by the light of the lamp]", self.SPACE
        )
        assert reply.kind == "stop"
        assert reply.text == "examined the phone by the light of the lamp"

    def test_chat(self):
        reply = parse_agent_reply("chat [Where can I find lettuce?]")
        assert reply.kind == "chat"
        assert reply.text == "Where can I find lettuce?"

    def test_act(self):
        reply = parse_agent_reply("Act: pick_up [cup_0]", self.SPACE)
        assert reply.kind == "act"
        assert reply.call is not None and reply.call.args == ["cup_0"]

    def test_thought_and_act_yields_thought_with_pending_act(self):
        reply = parse_agent_reply(
            "Thought: I should turn right.\nAct: turn_right.", self.SPACE
        )
        assert reply.kind == "thought"
        assert reply.pending_act is not None
        assert reply.pending_act.spec.name == "turn_right"

    def test_unparseable_is_warning_thought(self):
        reply = parse_agent_reply("??? total nonsense ???", self.SPACE)
        assert reply.kind == "thought"
        assert reply.warning

    @settings(max_examples=300, deadline=None)
    @given(st.text(max_size=800))
    def test_total_on_arbitrary_text(self, text):
        reply = parse_agent_reply(text, self.SPACE)
        assert reply.kind in ("thought", "act", "chat", "ask", "stop")

    def test_first_action_rule_on_multi_action(self):
        reply = parse_agent_reply("Act: move_ahead\nAct: turn_left", self.SPACE)
        assert reply.kind == "act"
        assert reply.call.spec.name == "move_ahead"
        assert reply.call.multi_action


class TestFirstTaskMessage:
    def test_emmem_suffix(self):
        _, task_doc = generate("IG", 0)
        task = load_task(task_doc)
        text = first_task_message(task, Strategy("ReActEmMem"), "You can see nothing ahead.")
        assert text.endswith(
            "What is your next step? Try to summarize your status, recall what you have done "
            "and think before act."
        )

    def test_rearrangement_includes_original_status(self):
        _, task_doc = generate("Rearrangement", 0)
        task = load_task(task_doc)
        text = first_task_message(task, Strategy("Act"), "Obs text.")
        assert text.startswith("Original status: In the ")


class TestReflect:
    def test_mock_round_trip(self):
        backend = EchoBackend("Go straight to the fridge next time.")
        backend.complete([])  # consume the YES
        memory = reflect("Task failed after 10 steps.", backend)
        assert memory == "Go straight to the fridge next time."


class _FlakyHandler(BaseHTTPRequestHandler):
    failures = 2
    seen_bodies: list[dict] = []

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        type(self).seen_bodies.append(body)
        if type(self).failures > 0:
            type(self).failures -= 1
            self.send_response(429)
            self.end_headers()
            return
        reply = {
            "id": "chatcmpl-test",
            "choices": [
                {"index": 0, "message": {"role": "assistant", "content": "Act: move_ahead"}}
            ],
        }
        payload = json.dumps(reply).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def flaky_server():
    _FlakyHandler.failures = 2
    _FlakyHandler.seen_bodies = []
    server = ThreadingHTTPServer(("127.0.0.1", 0), _FlakyHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions"
    server.shutdown()


class TestLLMComplete:
    def test_two_429_then_success(self, flaky_server):
        text = llm_complete(
            [{"role": "user", "content": "hello"}],
            {"endpoint": flaky_server, "max_retries": 3, "retry_base_s": 0.01},
        )
        assert text == "Act: move_ahead"
        assert len(_FlakyHandler.seen_bodies) == 3
        assert _FlakyHandler.seen_bodies[0]["model"] == "gpt-3.5-turbo"
        assert _FlakyHandler.seen_bodies[0]["temperature"] == 1.0

    def test_retries_exhausted(self, flaky_server):
        _FlakyHandler.failures = 10
        with pytest.raises(BackendError) as err:
            llm_complete(
                [{"role": "user", "content": "hello"}],
                {"endpoint": flaky_server, "max_retries": 1, "retry_base_s": 0.01},
            )
        assert err.value.status == 429


class TestScriptedBackend:
    def test_yes_handshake_then_script(self):
        backend = ScriptedBackend(["Act: move_ahead", "Act: stop []"])
        assert backend.complete([]) == "YES"
        assert backend.complete([]) == "Act: move_ahead"
        assert backend.complete([]) == "Act: stop []"
        assert backend.complete([]) == "Act: stop []"  # exhausted fallback
        assert backend.exhausted
