"""Agent backends: scripted replay, mock echo, HTTP chat-completions, human.

Every backend exposes complete(messages) -> str where messages are
chat-completions-shaped dicts ({role, content}).
"""

from __future__ import annotations

import queue
import threading
from typing import Any, Callable, Optional

from .actions import named
from .errors import BackendError, ConfigError, HumanTimeout
from .planner import generate_trajectory
from .promptkit import llm_complete
from .tasks import TaskSpec
from .world import WorldState


class ScriptedBackend:
    """Replays a fixed list of replies; answers the setup handshake first."""

    def __init__(self, lines: list[str], yes_first: bool = True, name: str = "scripted"):
        self._lines = list(lines)
        self._cursor = 0
        self._yes_pending = yes_first
        self.name = name
        self.exhausted = False

    def complete(self, messages: list[dict[str, str]]) -> str:
        if self._yes_pending:
            self._yes_pending = False
            return "YES"
        if self._cursor >= len(self._lines):
            self.exhausted = True
            return "Act: stop []"
        line = self._lines[self._cursor]
        self._cursor += 1
        return line


class EchoBackend:
    """Returns a constant reply; setup handshake included."""

    def __init__(self, reply: str):
        self._reply = reply
        self._yes_pending = True

    def complete(self, messages: list[dict[str, str]]) -> str:
        if self._yes_pending:
            self._yes_pending = False
            return "YES"
        return self._reply


class CallbackBackend:
    """Delegates to a function of the message list (tests, custom policies)."""

    def __init__(self, fn: Callable[[list[dict[str, str]]], str]):
        self._fn = fn

    def complete(self, messages: list[dict[str, str]]) -> str:
        return self._fn(messages)


class HTTPBackend:
    """Chat-completions client; thread-safe, one call in flight per lock."""

    def __init__(self, params: dict[str, Any]):
        self.params = dict(params)
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, messages: list[dict[str, str]]) -> str:
        with self._lock:
            self.calls += 1
        return llm_complete(messages, self.params)


class HumanBackend:
    """Blocking queue bridge for terminal or service-driven human turns.

    The episode loop blocks in complete() until someone calls submit().
    """

    def __init__(self, prompt_sink: Optional[Callable[[str], None]] = None,
                 timeout_s: Optional[float] = None):
        self._inbox: "queue.Queue[str]" = queue.Queue()
        self._prompt_sink = prompt_sink
        self.timeout_s = timeout_s
        self.waiting = threading.Event()
        self.entries = 0  # grows every time the loop blocks on this human
        self.last_prompt: Optional[str] = None

    def submit(self, text: str) -> None:
        self._inbox.put(text)

    def complete(self, messages: list[dict[str, str]]) -> str:
        if messages:
            self.last_prompt = messages[-1]["content"]
            if self._prompt_sink is not None:
                self._prompt_sink(self.last_prompt)
        self.entries += 1
        self.waiting.set()
        try:
            if self.timeout_s is None:
                return self._inbox.get()
            try:
                return self._inbox.get(timeout=self.timeout_s)
            except queue.Empty:
                raise HumanTimeout(f"no human input within {self.timeout_s}s")
        finally:
            self.waiting.clear()


class TerminalHumanBackend:
    """Reads human turns from stdin for the `play` subcommand."""

    def __init__(self, echo: Callable[[str], None] = print):
        self._echo = echo
        self._yes_pending = True

    def complete(self, messages: list[dict[str, str]]) -> str:
        if messages:
            self._echo(messages[-1]["content"])
        if self._yes_pending:
            self._yes_pending = False
            return "YES"
        return input("> ")


def expert_script(world: WorldState, task: TaskSpec, naming: str = "id") -> list[str]:
    """Format an expert trajectory as agent reply lines."""
    lines = []
    for call in generate_trajectory(world, task):
        args = call.args
        if naming == "category" and not call.spec.verbatim:
            shown = []
            for arg in args:
                obj = world.objects.get(arg)
                shown.append(named(obj, "category") if obj is not None else arg)
            args = shown
        if call.spec.arity == 0:
            lines.append(f"Act: {call.spec.name}")
        else:
            lines.append(f"Act: {call.spec.name} [{', '.join(args)}]")
    return lines


def make_backend(config: dict[str, Any], *, world: Optional[WorldState] = None,
                 task: Optional[TaskSpec] = None, role_agent: Optional[str] = None):
    """Instantiate a backend from a run-manifest config block."""
    kind = config.get("kind", "mock")
    if kind in ("scripted", "mock"):
        return ScriptedBackend(config.get("lines", []), name=config.get("name", "scripted"))
    if kind == "echo":
        return EchoBackend(config.get("reply", "Act: stop []"))
    if kind == "expert":
        if world is None or task is None:
            raise ConfigError("expert backend needs world and task")
        naming = config.get("naming", "id")
        return ScriptedBackend(expert_script(world, task, naming=naming), name="expert")
    if kind == "http":
        return HTTPBackend(config.get("params", {}))
    if kind == "human":
        return HumanBackend(timeout_s=config.get("timeout_s"))
    if kind == "terminal":
        return TerminalHumanBackend()
    raise ConfigError(f"unknown backend kind {kind!r}")
