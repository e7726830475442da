"""The episode loop: observation -> agent turn -> parse -> execute -> feedback,
with multi-agent scheduling, chat/ask routing, persistence, and replay.

Episodes are byte-deterministic given (scene, task, seed, scripted backends):
events carry no wall-clock data, every backend reply is recorded verbatim,
and replay re-runs the loop from those recorded replies and compares streams.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Any, Optional

from .actions import (
    ActionCall,
    ActionSpace,
    Feedback,
    MESSAGES,
    execute_action,
    expand_high_level,
    load_space,
    resolve_anywhere,
)
from .errors import ConfigError, HumanTimeout, NoRecipient, SchemaError
from .metrics import EpisodeScore, rearrangement_scores
from .perception import (
    BeliefState,
    relative_direction,
    render_contents,
    render_observation,
    update_belief,
)
from .promptkit import (
    Dialogue,
    Strategy,
    build_system_prompt,
    first_task_message,
    parse_agent_reply,
    reflect,
)
from .tasks import TaskSpec, check_goal, load_task, progress_check
from .world import WorldState, load_scene

EPISODE_SCHEMA = "langworld/episode@1"

SUCCESS_BANNER = "[SUCCESS] You have completed the task. Congratulations!"

FORMAT_REMINDER = (
    'Please respond with one action in the correct format, for example "Act: move_ahead" '
    'or "Act: pick_up [cup_0]".'
)

_DIRECTION_PHRASES = {
    "front": "in front of {name}",
    "front-left": "in front and left of {name}",
    "front-right": "in front and right of {name}",
    "left": "on the left of {name}",
    "right": "on the right of {name}",
    "rear": "behind {name}",
    "rear-left": "at the left rear of {name}",
    "rear-right": "at the right rear of {name}",
}


@dataclass
class TranscriptEvent:
    index: int
    step: int
    agent_id: str
    kind: str
    payload: dict

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "step": self.step,
            "agent": self.agent_id,
            "kind": self.kind,
            "payload": self.payload,
        }


@dataclass
class Episode:
    episode_id: str
    task_ref: str
    seed: int
    scene_doc: dict
    task_doc: dict
    strategy: str
    events: list[TranscriptEvent] = field(default_factory=list)
    outcome: str = "Failure"
    failure_reason: Optional[str] = None
    score: Optional[EpisodeScore] = None
    engine_seconds: float = 0.0
    engine_steps: int = 0

    def transcript_text(self) -> str:
        lines = []
        for event in self.events:
            payload = event.payload
            if event.kind == "observation":
                lines.append(f"Obs ({event.agent_id}): {payload['text']}")
            elif event.kind == "thought":
                lines.append(f"{event.agent_id}: Thought: {payload['text']}")
            elif event.kind == "action":
                lines.append(f"{event.agent_id}: Act: {payload['name']} {payload['args']}")
            elif event.kind == "feedback":
                lines.append(f"Feedback: {payload['message']}")
            elif event.kind == "chat":
                lines.append(f"{event.agent_id}: {payload['message']}")
            elif event.kind == "system":
                lines.append(f"System: {payload.get('text', '')}")
        return "\n".join(lines)

    def to_jsonl(self) -> str:
        header = {
            "schema": EPISODE_SCHEMA,
            "episode_id": self.episode_id,
            "task_ref": self.task_ref,
            "seed": self.seed,
            "strategy": self.strategy,
            "scene": self.scene_doc,
            "task": self.task_doc,
        }
        lines = [json.dumps(header, sort_keys=True)]
        for event in self.events:
            lines.append(json.dumps(event.to_dict(), sort_keys=True))
        tail = {
            "outcome": self.outcome,
            "failure_reason": self.failure_reason,
            "score": self.score.to_dict() if self.score else None,
        }
        lines.append(json.dumps(tail, sort_keys=True))
        return "\n".join(lines) + "\n"


@dataclass
class TurnPolicy:
    order: list[str]


def schedule_turns(task: TaskSpec) -> TurnPolicy:
    """Turn order: solo agent alone; MA-Teach strict commander/follower
    alternation; MA-WAH round-robin over peers in role order."""
    if task.task_type == "MA-Teach":
        commander = next(r.agent_id for r in task.roles if r.role == "commander")
        follower = next(r.agent_id for r in task.roles if r.role == "follower")
        return TurnPolicy([commander, follower])
    return TurnPolicy([r.agent_id for r in task.roles])


@dataclass
class Limits:
    step_limit: Optional[int] = None  # None -> task.step_limit
    llm_call_cap: int = 200
    ask_timeout_s: Optional[float] = None
    max_thoughts_per_turn: int = 4


class HumanChannel:
    """Answer source for agent `ask` actions."""

    def ask(self, question: str, timeout_s: Optional[float]) -> str:
        raise NoRecipient("no human channel bound")


class ScriptedHumanChannel(HumanChannel):
    def __init__(self, answers: list[str]):
        self._answers = list(answers)

    def ask(self, question: str, timeout_s: Optional[float]) -> str:
        if not self._answers:
            raise HumanTimeout("scripted human ran out of answers")
        return self._answers.pop(0)


class QueueHumanChannel(HumanChannel):
    """Service-mode channel: the asking turn blocks until submit()."""

    def __init__(self):
        import queue
        import threading

        self._inbox: "queue.Queue[str]" = queue.Queue()
        self.pending_question: Optional[str] = None
        self.waiting = threading.Event()
        self.entries = 0

    def submit(self, text: str) -> None:
        self._inbox.put(text)

    def ask(self, question: str, timeout_s: Optional[float]) -> str:
        import queue

        self.pending_question = question
        self.entries += 1
        self.waiting.set()
        try:
            if timeout_s is None:
                return self._inbox.get()
            try:
                return self._inbox.get(timeout=timeout_s)
            except queue.Empty:
                raise HumanTimeout(f"no human answer within {timeout_s}s")
        finally:
            self.waiting.clear()
            self.pending_question = None


class TerminalHumanChannel(HumanChannel):
    def ask(self, question: str, timeout_s: Optional[float]) -> str:
        print(f"[agent asks] {question}")
        return input("answer> ")


@dataclass
class _AgentState:
    agent_id: str
    role: str
    space: ActionSpace
    backend: Any
    dialogue: Dialogue = field(default_factory=Dialogue)
    belief: BeliefState = field(default_factory=BeliefState)
    pending_chats: list[str] = field(default_factory=list)
    pending_feedback: Optional[str] = None
    pending_inventory: Optional[str] = None
    pending_obs_override: Optional[str] = None
    pending_human_answer: Optional[str] = None
    started: bool = False


class _Clock:
    """Accumulates engine time, excluding backend waits."""

    def __init__(self):
        self.total = 0.0
        self._mark = None

    def start(self):
        self._mark = time.perf_counter()

    def pause(self):
        if self._mark is not None:
            self.total += time.perf_counter() - self._mark
            self._mark = None


class _EpisodeRun:
    def __init__(
        self,
        world: WorldState,
        task: TaskSpec,
        backends: dict[str, Any],
        strategy: Strategy,
        limits: Limits,
        human_channel: Optional[HumanChannel],
        seed: int,
        task_ref: str,
        scene_doc: dict,
        task_doc: dict,
        observer=None,
    ):
        self.initial_world = world
        self.task = task
        self.backends = backends
        self.strategy = strategy
        self.limits = limits
        self.human = human_channel
        self.observer = observer
        self.episode = Episode(
            episode_id=f"{task_ref}-seed{seed}",
            task_ref=task_ref,
            seed=seed,
            scene_doc=scene_doc,
            task_doc=task_doc,
            strategy=strategy.kind,
        )
        self.clock = _Clock()
        self.world: WorldState = world
        self.states: dict[str, _AgentState] = {}
        self.steps = 0
        self.llm_calls = 0
        self.final_answer: Optional[str] = None
        self.finished = False
        self.memories: dict[str, str] = {}

    # -- event plumbing ------------------------------------------------

    def emit(self, agent_id: str, kind: str, payload: dict) -> TranscriptEvent:
        event = TranscriptEvent(
            index=len(self.episode.events),
            step=self.steps,
            agent_id=agent_id,
            kind=kind,
            payload=payload,
        )
        self.episode.events.append(event)
        if self.observer is not None:
            self.observer(event)
        return event

    def _complete(self, state: _AgentState) -> str:
        messages = []
        for i, msg in enumerate(state.dialogue.messages):
            if msg["role"] == "system":
                messages.append(
                    {"role": "system" if i == 0 else "user", "content": msg["text"]}
                )
            else:
                messages.append({"role": "assistant", "content": msg["text"]})
        self.clock.pause()
        reply = state.backend.complete(messages)
        self.clock.start()
        self.llm_calls += 1
        return reply

    # -- observation / prompt assembly ---------------------------------

    def observe(self, state: _AgentState) -> tuple[str, list[str]]:
        if state.pending_obs_override is not None:
            text = state.pending_obs_override
            state.pending_obs_override = None
            return text, []
        style = state.space.observation_style
        obs = render_observation(self.world, state.agent_id, style, state.belief)
        if style == "room_summary":
            update_belief(state.belief, self.world, state.agent_id, obs, step=self.steps)
        return obs.text, obs.visible.ids

    def compose_turn_message(self, state: _AgentState) -> str:
        lines: list[str] = []
        for chat in state.pending_chats:
            lines.append(chat)
        state.pending_chats = []
        if state.pending_human_answer is not None:
            lines.append(f"Human: {state.pending_human_answer}")
            state.pending_human_answer = None
        if state.pending_feedback is not None:
            lines.append(f"Feedback: {state.pending_feedback}")
            state.pending_feedback = None
        if state.pending_inventory is not None:
            lines.append(f"Inventory: {state.pending_inventory}")
            state.pending_inventory = None
        text, visible = self.observe(state)
        self.emit(state.agent_id, "observation", {
            "text": text, "visible": visible, "style": state.space.observation_style,
        })
        lines.append(f"Obs: {text}")
        if not state.started:
            state.started = True
            return first_task_message(
                self.task, self.strategy, text, extra_blocks=lines[:-1] or None
            )
        return "\n".join(lines)

    # -- setup ----------------------------------------------------------

    def setup_agents(self) -> bool:
        for role in self.task.roles:
            agent_id = role.agent_id
            backend = self.backends[agent_id]
            space = load_space(role.action_space)
            state = _AgentState(agent_id=agent_id, role=role.role, space=space, backend=backend)
            self.states[agent_id] = state
            if space.observation_style == "room_summary":
                self._seed_belief(state)
            prompt = build_system_prompt(
                self.task,
                self.world.agents[agent_id],
                self.strategy,
                memory=self.memories.get(agent_id, ""),
            )
            state.dialogue.reflexion_memory = self.memories.get(agent_id, "")
            state.dialogue.add("system", prompt)
            reply = self._complete(state)
            state.dialogue.add("assistant", reply)
            self.emit(agent_id, "system", {"subkind": "setup", "raw": reply})
            if "YES" not in reply.upper():
                self.fail("SetupFailed")
                return False
        return True

    def _seed_belief(self, state: _AgentState) -> None:
        belief = state.belief
        agent = self.world.agents[state.agent_id]
        room = self.world.room_at(agent.pose.cell)
        if room is not None:
            from .perception import _reveal_room

            _reveal_room(belief, self.world, room)
        for cond in self.task.goal:
            if cond.kind == "ObjectIn" and cond.b:
                recep = resolve_anywhere(self.world, cond.b)
                if recep is not None:
                    belief.goal_receptacle = recep.id
                    belief.placed_objects = list(recep.contents)
                break

    # -- termination ----------------------------------------------------

    def fail(self, reason: str) -> None:
        self.finished = True
        self.episode.outcome = "Failure"
        self.episode.failure_reason = reason

    def succeed(self) -> None:
        self.finished = True
        self.episode.outcome = "Success"

    def goal_probe(self) -> None:
        report = check_goal(self.world, self.task, answer=self.final_answer)
        if report.success:
            self.emit("system", "system", {"subkind": "banner", "text": SUCCESS_BANNER})
            self.succeed()

    # -- communicative handling ------------------------------------------

    def route_chat(self, state: _AgentState, message: str) -> list[str]:
        recipients = [aid for aid in self.states if aid != state.agent_id]
        if not recipients:
            raise NoRecipient("chat requires at least one other agent")
        sender = self.world.agents[state.agent_id].display_name
        for recipient in recipients:
            self.states[recipient].pending_chats.append(f"{sender}: {message}")
        return recipients

    def handle_info_action(self, state: _AgentState, call: ActionCall) -> Feedback:
        name = call.spec.name
        if name == "open_progress_check":
            return progress_check(self.world, self.task)
        follower_role = next(
            (r for r in self.task.roles if r.agent_id != state.agent_id), None
        )
        if follower_role is None:
            return Feedback(False, "Action failed. There is no other agent to locate for.")
        follower = self.world.agents[follower_role.agent_id]
        target = resolve_anywhere(self.world, call.args[0])
        if target is None:
            return Feedback(
                False, MESSAGES["no_such_object"].format(ref=call.args[0]), reason="NoSuchObject"
            )
        if target.cell == follower.pose.cell:
            phrase = f"right at {follower.display_name}'s position"
        else:
            bucket = relative_direction(follower.pose, target.cell)
            phrase = _DIRECTION_PHRASES[bucket].format(name=follower.display_name)
        return Feedback(True, f"Action succeeded. {target.id} is {phrase}.")

    # -- the core turn -----------------------------------------------------

    def agent_turn(self, agent_id: str) -> None:
        state = self.states[agent_id]
        message = self.compose_turn_message(state)
        state.dialogue.add("system", message)
        reminded = False
        for _ in range(self.limits.max_thoughts_per_turn + 1):
            if self.llm_calls >= self.limits.llm_call_cap:
                self.fail("BudgetExceeded")
                return
            raw = self._complete(state)
            state.dialogue.add("assistant", raw)
            reply = parse_agent_reply(raw, state.space)
            if reply.kind == "thought" and reply.pending_act is None:
                self.emit(agent_id, "thought", {
                    "raw": raw, "text": reply.text, "warning": reply.warning,
                })
                if reply.warning:
                    if reminded:
                        return  # wasted turn
                    reminded = True
                    state.dialogue.add("system", FORMAT_REMINDER)
                    continue
                state.dialogue.add("system", "OK.")
                continue
            if reply.kind == "thought":
                self.emit(agent_id, "thought", {
                    "raw": raw, "text": reply.text, "warning": False,
                })
                state.dialogue.add("system", "OK.")
                # combined thought+act reply: the raw text is already recorded
                # on the thought event, so the action event must not repeat it
                self.perform(state, reply.pending_act, raw, record_raw=False)
                return
            if reply.kind == "chat":
                event_recipients = self.route_chat(state, reply.text)
                self.emit(agent_id, "chat", {
                    "raw": raw, "message": reply.text, "recipients": event_recipients,
                })
                state.pending_feedback = MESSAGES["plain_ok"]
                return
            if reply.kind == "ask":
                self.emit(agent_id, "ask", {"raw": raw, "message": reply.text})
                if self.human is None:
                    raise NoRecipient("ask requires a human channel")
                self.clock.pause()
                try:
                    answer = self.human.ask(reply.text, self.limits.ask_timeout_s)
                except HumanTimeout:
                    self.clock.start()
                    state.pending_feedback = "Action failed. Nobody answered."
                    return
                self.clock.start()
                self.emit(agent_id, "human_answer", {"text": answer})
                state.pending_human_answer = answer
                state.pending_feedback = MESSAGES["plain_ok"]
                return
            if reply.kind == "stop":
                self.emit(agent_id, "action", {
                    "raw": raw, "name": reply.call.spec.name,
                    "args": reply.call.args, "macro": False,
                })
                self.finish_with_stop(state, reply.text)
                return
            # plain action
            self.perform(state, reply.call, raw)
            return

    def perform(
        self, state: _AgentState, call: ActionCall, raw: str, record_raw: bool = True
    ) -> None:
        name = call.spec.name
        raw_payload = raw if record_raw else ""
        if call.spec.level == "communicative":
            feedback = self.handle_info_action(state, call)
            self.emit(state.agent_id, "action", {
                "raw": raw_payload, "name": name, "args": call.args, "macro": False,
            })
            self.emit(state.agent_id, "feedback", {
                "ok": feedback.ok, "message": feedback.message, "reason": feedback.reason,
            })
            state.pending_feedback = feedback.message
            return
        inventory_before = list(self.world.agents[state.agent_id].inventory)
        if call.spec.level == "high":
            self.world, feedback = expand_high_level(
                self.world, state.agent_id, call, naming=state.space.naming
            )
        else:
            self.world, feedback = execute_action(
                self.world, state.agent_id, call, naming=state.space.naming
            )
        self.steps += 1
        self.episode.engine_steps += 1
        self.emit(state.agent_id, "action", {
            "raw": raw_payload, "name": name, "args": call.args,
            "macro": call.spec.level == "high",
        })
        self.emit(state.agent_id, "feedback", {
            "ok": feedback.ok, "message": feedback.message, "reason": feedback.reason,
        })
        state.pending_feedback = feedback.message
        inventory_now = self.world.agents[state.agent_id].inventory
        if feedback.ok and inventory_now != inventory_before:
            state.pending_inventory = ", ".join(inventory_now) if inventory_now else "Empty"
        if state.space.observation_style == "room_summary":
            update_belief(state.belief, self.world, state.agent_id, feedback, step=self.steps)
            if feedback.ok and name == "go_check" and call.resolved:
                state.pending_obs_override = render_contents(self.world, call.resolved[0])
        self.goal_probe()
        if not self.finished and self.steps >= self.step_limit:
            self.fail("StepLimit")

    def finish_with_stop(self, state: _AgentState, answer: str) -> None:
        self.final_answer = answer
        self.emit("system", "system", {"subkind": "stop", "text": "You stopped the game."})
        report = check_goal(self.world, self.task, answer=answer or None)
        self.emit(state.agent_id, "goal_check", {
            "success": report.success, "satisfied": report.satisfied, "total": report.total,
        })
        if self.task.task_type == "Rearrangement":
            scores = rearrangement_scores(
                self.initial_world, self.world, self.task.target_state
            )
            self.emit("system", "system", {
                "subkind": "scores",
                "text": "{{'misplaced': {0}, 'fixed': {1}}}".format(
                    scores["misplaced_pct"] / 100.0, scores["fixed_strict_pct"] / 100.0
                ),
            })
        if self.task.task_type == "IQA":
            verdict = "You are right!" if report.success else "You are wrong."
            self.emit("system", "system", {"subkind": "verdict", "text": verdict})
        if report.success:
            self.emit("system", "system", {"subkind": "banner", "text": SUCCESS_BANNER})
            self.succeed()
        else:
            self.fail("Stopped")

    @property
    def step_limit(self) -> int:
        return self.limits.step_limit or self.task.step_limit

    # -- trial loop -------------------------------------------------------

    def run_trial(self) -> None:
        self.world = self.initial_world.clone()
        self.steps = 0
        self.finished = False
        if not self.setup_agents():
            return
        order = schedule_turns(self.task).order
        while not self.finished:
            for agent_id in order:
                if self.finished:
                    break
                self.agent_turn(agent_id)

    def run(self) -> Episode:
        self.clock.start()
        for trial in range(self.strategy.max_trials):
            if trial > 0:
                self.emit("system", "system", {"subkind": "trial", "text": f"TRIAL {trial + 1}"})
            self.states = {}
            self.run_trial()
            for state in self.states.values():
                state.dialogue.trial_index = trial
            if self.episode.outcome == "Success" or self.episode.failure_reason in (
                "SetupFailed",
                "BudgetExceeded",
            ):
                break
            if trial + 1 < self.strategy.max_trials and self.strategy.is_reflexion:
                transcript = self.episode.transcript_text()
                for agent_id, state in self.states.items():
                    self.clock.pause()
                    memory = reflect(transcript, state.backend)
                    self.clock.start()
                    self.llm_calls += 1
                    self.memories[agent_id] = memory
                    self.emit(agent_id, "system", {"subkind": "reflection", "raw": memory})
            else:
                break
        self.clock.pause()
        self.episode.engine_seconds = self.clock.total
        self.finalize_score()
        return self.episode

    def finalize_score(self) -> None:
        report = check_goal(self.world, self.task, answer=self.final_answer)
        goal_sr = report.satisfied / report.total if report.total else 0.0
        score = EpisodeScore(
            success=self.episode.outcome == "Success",
            goal_sr=goal_sr,
            steps=self.steps,
            llm_calls=self.llm_calls,
        )
        if self.task.task_type == "Rearrangement":
            scores = rearrangement_scores(
                self.initial_world, self.world, self.task.target_state
            )
            score.misplaced_pct = scores["misplaced_pct"]
            score.fixed_strict_pct = scores["fixed_strict_pct"]
        if self.task.task_type == "IQA":
            score.answer_correct = report.success
            score.question_type = self.task.question_type
        score.expert_len = self._expert_length()
        self.episode.score = score

    def _expert_length(self) -> Optional[int]:
        from .errors import LangworldError
        from .planner import EXPERT_FAMILIES, generate_trajectory

        if self.task.task_type not in EXPERT_FAMILIES:
            return None
        try:
            return len(generate_trajectory(self.initial_world.clone(), self.task))
        except LangworldError:
            return None


def run_episode(
    world: WorldState,
    task: TaskSpec,
    agents: dict[str, Any],
    limits: Optional[Limits] = None,
    strategy: Optional[Strategy] = None,
    human_channel: Optional[HumanChannel] = None,
    seed: int = 0,
    task_ref: str = "task",
    scene_doc: Optional[dict] = None,
    task_doc: Optional[dict] = None,
    observer=None,
) -> Episode:
    """Drive one episode to termination. `agents` maps agent ids (or role
    names) to backends."""
    backends: dict[str, Any] = {}
    for role in task.roles:
        backend = agents.get(role.agent_id) or agents.get(role.role)
        if backend is None:
            raise ConfigError(f"no backend bound for role {role.role} ({role.agent_id})")
        backends[role.agent_id] = backend
    from .world import scene_to_doc
    from .tasks import task_to_doc

    runner = _EpisodeRun(
        world=world,
        task=task,
        backends=backends,
        strategy=strategy or Strategy("Act"),
        limits=limits or Limits(),
        human_channel=human_channel,
        seed=seed,
        task_ref=task_ref,
        scene_doc=scene_doc or scene_to_doc(world),
        task_doc=task_doc or task_to_doc(task, scene_doc=scene_doc or scene_to_doc(world)),
        observer=observer,
    )
    return runner.run()


# ---------------------------------------------------------------------------
# Persistence and replay


@dataclass
class ReplayReport:
    consistent: bool
    first_divergence: Optional[dict] = None


def persist_episode(episode: Episode, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(episode.to_jsonl())


def read_episode_doc(path: str) -> tuple[dict, list[dict], dict]:
    with open(path) as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if len(lines) < 2:
        raise SchemaError("episode file too short")
    header = json.loads(lines[0])
    if header.get("schema") != EPISODE_SCHEMA:
        raise SchemaError(f"unsupported episode schema {header.get('schema')!r}")
    tail = json.loads(lines[-1])
    events = [json.loads(line) for line in lines[1:-1]]
    return header, events, tail


def _replies_by_agent(events: list[dict]) -> dict[str, list[str]]:
    """Every raw backend reply per agent, in call order (handshake included).

    Action events with an empty raw came from a combined thought+act reply
    already captured by the preceding thought event.
    """
    replies: dict[str, list[str]] = {}
    for event in events:
        payload = event["payload"]
        agent = event["agent"]
        if event["kind"] == "system" and payload.get("subkind") in ("setup", "reflection"):
            replies.setdefault(agent, []).append(payload["raw"])
        elif event["kind"] in ("thought", "action", "chat", "ask") and payload.get("raw"):
            replies.setdefault(agent, []).append(payload["raw"])
    return replies


def _human_answers(events: list[dict]) -> list[str]:
    return [e["payload"]["text"] for e in events if e["kind"] == "human_answer"]


def replay_episode(path: str) -> ReplayReport:
    """Re-run a persisted episode from its recorded replies and verify every
    event byte-matches."""
    header, recorded_events, recorded_tail = read_episode_doc(path)
    world = load_scene(header["scene"])
    task = load_task(header["task"])
    replies = _replies_by_agent(recorded_events)

    from .backends import ScriptedBackend

    backends = {
        role.agent_id: ScriptedBackend(replies.get(role.agent_id, []), yes_first=False)
        for role in task.roles
    }
    human = ScriptedHumanChannel(_human_answers(recorded_events))
    episode = run_episode(
        world,
        task,
        backends,
        strategy=Strategy(header.get("strategy", "Act")),
        human_channel=human,
        seed=header.get("seed", 0),
        task_ref=header.get("task_ref", "task"),
        scene_doc=header["scene"],
        task_doc=header["task"],
    )
    fresh_events = [event.to_dict() for event in episode.events]
    for i, recorded in enumerate(recorded_events):
        if i >= len(fresh_events):
            return ReplayReport(False, {"index": i, "reason": "replay ended early"})
        if fresh_events[i] != recorded:
            return ReplayReport(
                False,
                {"index": i, "recorded": recorded, "replayed": fresh_events[i]},
            )
    if len(fresh_events) != len(recorded_events):
        return ReplayReport(
            False, {"index": len(recorded_events), "reason": "replay produced extra events"}
        )
    fresh_tail = {
        "outcome": episode.outcome,
        "failure_reason": episode.failure_reason,
        "score": episode.score.to_dict() if episode.score else None,
    }
    if fresh_tail != recorded_tail:
        return ReplayReport(False, {"index": len(recorded_events), "reason": "score mismatch",
                                    "recorded": recorded_tail, "replayed": fresh_tail})
    return ReplayReport(True)
