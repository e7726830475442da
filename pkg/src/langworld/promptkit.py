"""System-prompt construction, agent-reply parsing, reflection, and the LLM
wire client.

Prompts are assembled from per-family templates with numeric slots filled
from the live agent configuration, so the exact text agents see is a pure
function of (task, agent, strategy) and can be pinned as golden fixtures.
"""

from __future__ import annotations

import json
import re
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Any, Optional

from .actions import ActionCall, ActionSpace, load_space, parse_action, _PRIMITIVES
from .errors import BackendError, MissingTemplate, ParseError, Timeout, UnboundSlot
from .tasks import TaskSpec
from .world import AgentBody

STRATEGIES = ("Act", "ReAct", "ReActEmMem", "Reflexion", "ReflexionEmMem")


@dataclass(frozen=True)
class Strategy:
    kind: str
    max_trials: int = 0  # 0 -> default per kind

    def __post_init__(self) -> None:
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}")
        if self.max_trials == 0:
            object.__setattr__(self, "max_trials", 2 if self.is_reflexion else 1)
        if self.max_trials < 1:
            raise ValueError("max_trials must be >= 1")

    @property
    def is_reflexion(self) -> bool:
        return self.kind.startswith("Reflexion")

    @property
    def is_emmem(self) -> bool:
        return self.kind.endswith("EmMem")

    @property
    def has_thought(self) -> bool:
        return self.kind != "Act"


@dataclass
class Dialogue:
    messages: list[dict[str, str]] = field(default_factory=list)
    pending_feedback: Optional[str] = None
    trial_index: int = 0
    reflexion_memory: str = ""

    def add(self, role: str, text: str) -> None:
        self.messages.append({"role": role, "text": text})


@dataclass
class AgentReply:
    kind: str  # thought | act | chat | ask | stop
    raw: str
    text: str = ""
    call: Optional[ActionCall] = None
    pending_act: Optional[ActionCall] = None
    warning: bool = False


# ---------------------------------------------------------------------------
# Templates

_CATCHALL_SPACE = ActionSpace(
    id="_all", naming="id", observation_style="ego_scene", specs=list(_PRIMITIVES.values())
)

_INTROS = {
    "IG": (
        "You are an autonomous intelligent agent tasked with completing a minigrid game. "
        "These tasks will be accomplished through the use of specific actions you can issue."
    ),
    "Rearrangement": (
        "You are an autonomous intelligent agent tasked with rearranging a virtual home. "
        "System will randomly change between 1 to 5 objects in the room. Your goal is to "
        "identify which objects have changed and reset those objects to their original state."
    ),
    "IQA": (
        "You are a robot that can move, see and open objects in a 2D grid kitchen "
        "environment. You will be given a question about the environment; explore the room "
        "and conclude the answer with the answer action."
    ),
    "Household": (
        "You are an autonomous intelligent agent tasked with navigating a virtual home. "
        "You will be given a household task. These tasks will be accomplished through the "
        "use of specific actions you can issue."
    ),
}

_MA_TEACH_INTROS = {
    "commander": (
        "You are commander, an autonomous intelligent agent tasked with navigating a "
        "virtual home. You will be given a household task. These tasks will be accomplished "
        "through specific actions you post and through collaboration with follower. Note "
        "that you cannot interact with objects. You can only view the scene and guide "
        "follower to complete the task by using `chat`. You can not know the action history "
        "of follower."
    ),
    "follower": (
        "You are follower, an autonomous intelligent agent tasked with navigating a "
        "virtual home. You will be given a household task. These tasks will be accomplished "
        "through specific actions you post and through collaboration with commander. Note "
        "that you can interact with objects but have no access to task information. You can "
        "use `chat` to ask commander for information to accomplish the task."
    ),
}

_WAH_INTRO = (
    "You are an autonomous intelligent agent tasked with navigating a virtual home. Your "
    "name is {name}. You are in a hurry to finish a housework with your friend {peer} "
    "together. There are four kinds of rooms, livingroom, kitchen, bedroom, bathroom. You "
    "will be given a household task. These tasks will be accomplished through the use of "
    "specific actions you and your friend can issue. You have two hands to pickup, hold, "
    "put and check objects."
)

_EMMEM_EXEMPLAR = """Task: go to the red box.
Obs: You can see nothing ahead.
>Thought: I see nothing, it could be I have reached the border or I am in a middle grid but there is nothing in front of me. I have taken 0 steps and I am facing NORTH now. I should remember what I saw, so that I can find them easily when necessary; I need to find a red box.
>OK.
>Act: move_ahead
>Feedback: Action failed. Can not move ahead, because there is an obstacle ahead.
Obs: You can see nothing ahead.
>Thought: I can't move ahead because of an obstacle but I saw nothing in front of me. so I have reached the border, I have taken 0 step and am facing NORTH now since last action failed. Next I will try to look around.
>OK.
>Act: turn_right
>Feedback: Action succeeded. Turned right by '90' degrees.
Obs: You can see a red box in front of you.
>Thought: I have reached the border when facing NORTH. I have taken 2 steps and am facing EAST after turn right at last step. The border is on my leftside. Now I find the red box. Next I need to go to it.
>OK.
>Act: move_ahead
>Feedback: Action succeeded. Moved forward by 1 step.
Obs: You can see a red box in front of you.
>Thought: I see a red box ahead, I have taken 3 steps and am still facing EAST after move ahead at last step. I have reached the red box.
>OK.
>Act: stop []"""

_EXEMPLARS_ACT = {
    "IG": """Task: go to the red box.
Obs: You can see a blue key in front of you; You can see a red box on your right.
Manipulable object: A blue key.
>Act: turn_right.""",
    "Rearrangement": """Original status: In the north of the room, there is a armchair_0; a pen_1. In the east of the room, there is a chair_0.
Obs: You can see nothing ahead.
>Act: move_ahead""",
    "IQA": """Question: Is there a mug in the room?
Obs: In front of you, You see a basketball_1; a spoon_1; a stool_1. On your left, you see a baseball_1.
>Act: move_ahead
Feedback: Action succeeded. Moved forward by 1 step.
Obs: In front of you, You see a mug_1; a pot_1; a fridge_1.
>Act: answer [True]""",
    "Household": """Task: put a clean lettuce in diningtable.
Obs: You can see nothing ahead.
>Act: move_ahead""",
    "commander": """Task: put a clean lettuce on diningtable.
Obs: You can see nothing ahead.
>Act: open_progress_check
Feedback: Action failed. One clean lettuce needs to be on diningtable.
>Act: chat [Please put a clean lettuce in diningtable.]
Feedback: Action succeeded.
follower: Where can I find lettuce?
>Act: select_oid [lettuce_0]
Feedback: Action succeeded. lettuce_0 is in front and left of follower.""",
    "follower": """Task: You can use `chat` to ask commander for task information.
Obs: You can see nothing ahead.
>Act: no_op
Feedback: Action succeeded.
commander: Please put a clean lettuce in diningtable.
>Act: chat [Where can I find lettuce?]
Feedback: Action succeeded.
Obs: In front of you, You see a lettuce_0.
>Act: pick_up [lettuce_0]""",
    "MA-WAH": """Task: Find and put 1 wine onto the coffeetable_0.
Obs: You are holding nothing. You are in the kitchen, where you found an unchecked container kitchencabinet_0. The livingroom is unexplored.
>Act: go_check [kitchencabinet_0].
Feedback: Action succeeded. You opened kitchencabinet_0.
Obs: In it you see wine_0
>Act: go_grab [wine_0]""",
}

_THOUGHTS = {
    "IG": ">Thought: To solve this task, I need to find a red box. There is a blue key just before me and blocked my way. The red box is on my right, so I should turn_right first to go to the red box.\n>OK.\n",
    "Rearrangement": ">Thought: To solve the task, I need to explore the room to find out what objects have been changed, then pick them up and put them back.\n>OK.\n",
    "IQA": ">Thought: I should try my best to find the mug in the room.\n>OK.\n",
    "Household": ">Thought: To solve the task, I need to find and take a lettuce, then clean it with sinkbasin, then put it in diningtable.\n>OK.\n",
    "commander": ">Thought: I need to check the task progress first, then guide follower.\n>OK.\n",
    "follower": ">Thought: I need to wait for information from commander.\n>OK.\n",
    "MA-WAH": ">Thought: The wine could be in any of the unchecked containers, I will check them one by one.\n>OK.\n",
}


def _fmt_number(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else str(value)


def _view_clause(agent: AgentBody) -> str:
    shape = agent.config.view_shape
    if shape.kind == "rect":
        depth = _fmt_number(agent.config.view_distance)
        side = shape.side_steps
        return (
            f"You can see at most {depth} step(s) in front of you, "
            f"{side} step(s) on your left, {side} step(s) on your right."
        )
    dist = str(agent.config.view_distance)
    half = _fmt_number(shape.half_angle)
    return (
        f"You can see at most {dist} step(s) in front of you; "
        f"{half} degrees on your left, {half} degrees on your right."
    )


def _action_block(space: ActionSpace, agent: AgentBody, doc_specs: list[dict]) -> str:
    lines = []
    for entry in doc_specs:
        description = entry.get("description", "")
        description = description.replace(
            "{manipulate_distance}", _fmt_number(agent.config.manipulate_distance)
        )
        lines.append(f"`{entry.get('signature', entry['name'])}`: {description}")
    return "\n".join(lines)


def _rules(task: TaskSpec, strategy: Strategy, agent: AgentBody) -> str:
    thought = strategy.has_thought
    rules = []
    rules.append(
        "You should only issue a action or your thought that is valid given the current observation"
        if thought
        else "You should only issue a action that is valid given the current observation"
    )
    rules.append("You should only issue ONE action at a time, and ONLY action is enough.")
    rules.append(
        'Generate the action in the correct format starting with "Act: ". '
        'For example, "Act: pick_up [cup_0]".'
    )
    if thought:
        rules.append('State your thought or think process starting with "Thought: "')
    if strategy.is_emmem:
        rules.append(
            "You can only operate the object in your sight, if the object is in front of you, "
            "on your left or right, take action like move_ahead, turn_left, turn_right to "
            "approach it until it is in your sight;"
        )
    else:
        rules.append(
            "You can only operate the object you are facing, if the object is in front of you, "
            "on your left or right, take action like move_ahead, turn_left, turn_right to "
            "approach it until you are facing it;"
        )
    rules.append(
        "Issue stop action when you think you have achieved the objective. "
        "Don't generate anything after stop."
    )
    if strategy.is_emmem:
        heading = "NORTH"
        if task.roles and agent.id in {r.agent_id for r in task.roles}:
            heading = agent.pose.heading.value.upper()
        rules.append(f"Remember you are facing {heading} at the begining.")
    return "\n".join(f"{i + 1}. {rule}" for i, rule in enumerate(rules))


def _default_exemplar(task: TaskSpec, role: str, strategy: Strategy) -> str:
    if strategy.is_emmem:
        return _EMMEM_EXEMPLAR
    key = task.task_type
    if task.task_type == "MA-Teach":
        key = role
    if key not in _EXEMPLARS_ACT:
        key = "MA-WAH" if task.task_type == "MA-WAH" else "Household"
    base = _EXEMPLARS_ACT[key]
    if strategy.has_thought:
        lines = base.split("\n")
        for i, line in enumerate(lines):
            if line.startswith(">Act:"):
                lines.insert(i, _THOUGHTS[key].rstrip("\n"))
                break
        return "\n".join(lines)
    return base


def _space_doc(space_id: str) -> list[dict]:
    from importlib import resources

    data = resources.files("langworld.data.spaces").joinpath(f"{space_id}.json").read_text()
    return json.loads(data)["actions"]


def build_system_prompt(
    task: TaskSpec,
    agent: AgentBody,
    strategy: Strategy,
    examples: Optional[list[str]] = None,
    memory: str = "",
) -> str:
    """Render the full system instruction for one agent role. Byte-stable."""
    role_entry = next((r for r in task.roles if r.agent_id == agent.id), None)
    if role_entry is None:
        raise MissingTemplate(f"agent {agent.id} has no role in task")
    role = role_entry.role
    try:
        space = load_space(role_entry.action_space)
        doc_specs = _space_doc(role_entry.action_space)
    except FileNotFoundError as err:
        raise MissingTemplate(f"no action space manifest {role_entry.action_space!r}") from err

    if task.task_type == "MA-Teach":
        intro = _MA_TEACH_INTROS.get(role)
        if intro is None:
            raise MissingTemplate(f"MA-Teach role {role!r} has no template")
    elif task.task_type == "MA-WAH":
        peers = [r.agent_id for r in task.roles if r.agent_id != agent.id]
        peer = peers[0] if peers else "your friend"
        intro = _WAH_INTRO.format(name=agent.display_name, peer=peer)
    else:
        intro = _INTROS.get(task.task_type)
        if intro is None:
            raise MissingTemplate(f"no template for task type {task.task_type!r}")

    info_lines = ["Here's the information you'll have:"]
    if task.task_type == "Rearrangement":
        info_lines.append(
            "Original status: The original room status that you should remember, pay your "
            "attention to the position and openness states of each of the objects. Then find "
            "out all the changed objects and reset them to their original states."
        )
    if task.task_type == "IQA":
        info_lines.append("Question: This is the question you are trying to answer.")
    else:
        info_lines.append("Task: This is the task you are trying to accomplish.")
    info_lines.append(f"Obs: These are the objects you can see. {_view_clause(agent)}")
    if task.task_type == "IG":
        info_lines.append(
            "Manipulable object: The object that you are facing and you can take an operate "
            "action like pick_up [object_name], toggle [object_name] on it."
        )
    capacity = agent.config.inventory_capacity
    info_lines.append(
        "Inventory: These are the objects you are holding. "
        f"You can hold at most {capacity} objects."
    )
    info_lines.append("Feedback: Whether the action is succeed or not and why is it.")

    example_blocks = examples if examples is not None else [
        _default_exemplar(task, role, strategy)
    ]

    parts = [
        intro,
        "",
        "\n".join(info_lines),
        "",
        "At each step, you can choose to think your plan or execute an action from one of the following:",
        _action_block(space, agent, doc_specs),
        "",
        "To be successful, it is very important to follow the following rules:",
        _rules(task, strategy, agent),
        "",
        "Here are some examples:",
        "\n\n".join(example_blocks),
        "",
    ]
    if strategy.is_reflexion:
        parts.append(f"Your memory from last trails is: {memory}")
    parts.append("Respond YES if you can play this game.")
    text = "\n".join(parts)
    if task.task_type == "MA-WAH":
        peers = [r.agent_id for r in task.roles if r.agent_id != agent.id]
        # chat descriptions name the peer explicitly
        text = text.replace("{peer_name}", peers[0] if peers else "your friend")
    leftover = re.findall(r"\{[a-z_]+\}", text)
    if leftover:
        raise UnboundSlot(f"unfilled template slots: {sorted(set(leftover))}")
    return text


def first_task_message(task: TaskSpec, strategy: Strategy, observation_text: str,
                       extra_blocks: Optional[list[str]] = None) -> str:
    """The opening turn after the YES handshake."""
    label = "Question" if task.task_type == "IQA" else "Task"
    lines = [f"{label}: {task.instruction}"]
    if task.original_status:
        lines.insert(0, f"Original status: {task.original_status}")
    if extra_blocks:
        lines.extend(extra_blocks)
    lines.append(f"Obs: {observation_text}")
    suffix = "What is your next step?"
    if strategy.is_emmem:
        suffix += " Try to summarize your status, recall what you have done and think before act."
    elif strategy.has_thought:
        suffix += " Try to think before act."
    lines.append(suffix)
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Reply parsing

_THOUGHT_LINE = re.compile(r"^\s*>*\s*thought\s*:\s*(.*)$", re.IGNORECASE)
_THOUGHT_BRACKET = re.compile(r"^\s*>*\s*thought\s*\[(.*)\]\s*\.?\s*$", re.IGNORECASE)


def parse_agent_reply(text: str, space: Optional[ActionSpace] = None) -> AgentReply:
    """Classify one backend reply. Total: unparseable input becomes a Thought
    with a warning flag so the loop can re-prompt."""
    if space is None:
        space = _CATCHALL_SPACE
    if not isinstance(text, str):
        return AgentReply(kind="thought", raw=repr(text), text=repr(text), warning=True)
    thoughts: list[str] = []
    for line in text.splitlines():
        match = _THOUGHT_LINE.match(line) or _THOUGHT_BRACKET.match(line)
        if match:
            thoughts.append(match.group(1).strip())
    call: Optional[ActionCall] = None
    try:
        call = parse_action(text, space)
    except ParseError:
        call = None
    if call is not None:
        if call.spec.name == "chat":
            reply = AgentReply(kind="chat", raw=text, text=call.args[0], call=call)
        elif call.spec.name == "ask":
            reply = AgentReply(kind="ask", raw=text, text=call.args[0], call=call)
        elif call.spec.terminal:
            reply = AgentReply(kind="stop", raw=text, text=call.args[0], call=call)
        else:
            reply = AgentReply(kind="act", raw=text, call=call)
        if thoughts:
            return AgentReply(
                kind="thought",
                raw=text,
                text=" ".join(thoughts),
                pending_act=reply.call,
            )
        return reply
    if thoughts:
        return AgentReply(kind="thought", raw=text, text=" ".join(thoughts))
    return AgentReply(kind="thought", raw=text, text=text.strip(), warning=True)


# ---------------------------------------------------------------------------
# Reflection

REFLECTION_REQUEST = (
    "The trial above did not complete the task. In a few sentences, reflect on what went "
    "wrong and state a concrete plan to succeed next time. Respond with the reflection only."
)


def reflect(transcript: str, backend: Any) -> str:
    """Ask the backend to verbalize lessons from a failed trial."""
    messages = [
        {"role": "system", "content": transcript},
        {"role": "system", "content": REFLECTION_REQUEST},
    ]
    return backend.complete(messages).strip()


# ---------------------------------------------------------------------------
# LLM wire client

DEFAULT_PARAMS = {
    "model": "gpt-3.5-turbo",
    "temperature": 1.0,
    "max_tokens": None,
    "endpoint": "https://api.openai.com/v1/chat/completions",
    "max_retries": 3,
    "retry_base_s": 0.5,
    "timeout_s": 60.0,
    "api_key": None,
}


def llm_complete(messages: list[dict[str, str]], params: dict[str, Any]) -> str:
    """POST a chat-completions request; retry 429/5xx with exponential backoff.

    Endpoint, model, and credentials fall back to LANGWORLD_ENDPOINT,
    LANGWORLD_MODEL, and LANGWORLD_API_KEY (or OPENAI_API_KEY).
    """
    import os

    env_defaults = {
        "endpoint": os.environ.get("LANGWORLD_ENDPOINT"),
        "model": os.environ.get("LANGWORLD_MODEL"),
        "api_key": os.environ.get("LANGWORLD_API_KEY") or os.environ.get("OPENAI_API_KEY"),
    }
    merged = {**DEFAULT_PARAMS, **{k: v for k, v in env_defaults.items() if v}, **params}
    body: dict[str, Any] = {
        "model": merged["model"],
        "messages": messages,
        "temperature": merged["temperature"],
    }
    if merged["max_tokens"] is not None:
        body["max_tokens"] = merged["max_tokens"]
    payload = json.dumps(body).encode()
    headers = {"Content-Type": "application/json"}
    if merged["api_key"]:
        headers["Authorization"] = f"Bearer {merged['api_key']}"
    attempts = int(merged["max_retries"]) + 1
    last_status = None
    for attempt in range(attempts):
        request = urllib.request.Request(
            merged["endpoint"], data=payload, headers=headers, method="POST"
        )
        try:
            with urllib.request.urlopen(request, timeout=merged["timeout_s"]) as response:
                data = json.loads(response.read().decode())
                return data["choices"][0]["message"]["content"]
        except urllib.error.HTTPError as err:
            last_status = err.code
            if err.code == 429 or err.code >= 500:
                if attempt + 1 < attempts:
                    time.sleep(merged["retry_base_s"] * (2**attempt))
                    continue
            raise BackendError(f"backend returned {err.code}", status=err.code) from err
        except TimeoutError as err:
            raise Timeout(f"backend timed out after {merged['timeout_s']}s") from err
        except urllib.error.URLError as err:
            if isinstance(err.reason, TimeoutError):
                raise Timeout(f"backend timed out after {merged['timeout_s']}s") from err
            raise BackendError(f"backend unreachable: {err.reason}") from err
    raise BackendError(f"backend returned {last_status}", status=last_status)
