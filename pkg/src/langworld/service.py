"""HTTP session service: live human play over JSON + server-sent events.

Endpoints (all under /v1):
    POST /sessions                          create a session
    GET  /sessions/{id}                     descriptor + status
    POST /sessions/{id}/input               human action / chat / ask answer
    GET  /sessions/{id}/events?cursor=k     SSE stream, resumable by cursor
    GET  /episodes/{id}                     finished episode document

A session runs its episode loop on a worker thread; human turns block on
queue-backed backends until input arrives over HTTP.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Optional
from urllib.parse import parse_qs, urlparse

from .actions import load_space
from .backends import HumanBackend, ScriptedBackend, make_backend
from .errors import (
    ConfigError,
    LangworldError,
    NotYourTurn,
    RoleConflict,
    SchemaError,
    SessionFinished,
    UnknownSession,
    UnknownTask,
)
from .generator import FAMILIES, generate
from .promptkit import Strategy
from .runtime import Episode, Limits, QueueHumanChannel, run_episode
from .tasks import TaskSpec, load_task
from .world import load_scene


def resolve_task_doc(task_ref: str, task_dir: Optional[str] = None) -> dict:
    """`family:seed` generates procedurally; otherwise resolve a JSON file."""
    if ":" in task_ref:
        family, _, seed_text = task_ref.partition(":")
        matched = next((f for f in FAMILIES if f.lower() == family.lower()), None)
        if matched is None:
            raise UnknownTask(f"unknown task family {family!r}")
        try:
            seed = int(seed_text)
        except ValueError:
            raise UnknownTask(f"bad seed in task ref {task_ref!r}")
        _, task_doc = generate(matched, seed)
        return task_doc
    import os

    candidates = [task_ref]
    if task_dir:
        candidates.append(os.path.join(task_dir, task_ref))
        candidates.append(os.path.join(task_dir, f"{task_ref}.json"))
    for path in candidates:
        if os.path.isfile(path):
            with open(path) as fh:
                return json.load(fh)
    raise UnknownTask(f"cannot resolve task ref {task_ref!r}")


@dataclass
class Session:
    session_id: str
    task: TaskSpec
    task_doc: dict
    human_roles: set[str]
    events: list[dict] = field(default_factory=list)
    episode: Optional[Episode] = None
    error: Optional[str] = None
    humans: dict[str, HumanBackend] = field(default_factory=dict)
    ask_channel: QueueHumanChannel = field(default_factory=QueueHumanChannel)
    lock: threading.Lock = field(default_factory=threading.Lock)
    changed: threading.Condition = field(default_factory=threading.Condition)
    thread: Optional[threading.Thread] = None

    @property
    def finished(self) -> bool:
        return self.episode is not None or self.error is not None

    def status(self) -> str:
        if self.finished:
            return "finished"
        if any(h.waiting.is_set() for h in self.humans.values()) or (
            self.ask_channel.waiting.is_set()
        ):
            return "awaiting_human"
        return "agent_turn"

    def waiting_human(self) -> Optional[str]:
        for agent_id, human in self.humans.items():
            if human.waiting.is_set():
                return agent_id
        return None

    def record_event(self, event) -> None:
        with self.changed:
            self.events.append(event.to_dict())
            self.changed.notify_all()

    def notify(self) -> None:
        with self.changed:
            self.changed.notify_all()


class SessionManager:
    def __init__(self, task_dir: Optional[str] = None):
        self.task_dir = task_dir
        self.sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create_session(self, request: dict) -> Session:
        task_ref = request.get("task_ref")
        task_doc = request.get("task")
        if task_doc is None:
            if not task_ref:
                raise SchemaError("request needs task_ref or an inline task")
            task_doc = resolve_task_doc(task_ref, self.task_dir)
        task = load_task(task_doc)
        scene_doc = task_doc.get("scene")
        if scene_doc is None:
            raise SchemaError("task document must embed its scene")
        world = load_scene(scene_doc)

        role_names = {r.role for r in task.roles} | {r.agent_id for r in task.roles}
        human_roles = set(request.get("human_roles", []))
        unknown = human_roles - role_names
        if unknown:
            raise RoleConflict(f"unknown roles: {sorted(unknown)}")

        session = Session(
            session_id=uuid.uuid4().hex[:12],
            task=task,
            task_doc=task_doc,
            human_roles=human_roles,
        )
        backends: dict[str, Any] = {}
        backend_cfg = request.get("backend", {"kind": "expert"})
        for role in task.roles:
            if role.role in human_roles or role.agent_id in human_roles:
                human = HumanBackend()
                # humans answer the handshake implicitly
                human_wrapped = _AutoYes(human)
                session.humans[role.agent_id] = human
                backends[role.agent_id] = human_wrapped
            else:
                backends[role.agent_id] = make_backend(
                    backend_cfg, world=world.clone(), task=task, role_agent=role.agent_id
                )

        strategy = Strategy(request.get("strategy", "Act"))
        limits = Limits(
            step_limit=request.get("step_limit"),
            ask_timeout_s=request.get("ask_timeout_s", 120.0),
        )
        seed = int(request.get("seed", task_doc.get("scene", {}).get("seed", 0)))

        def run() -> None:
            try:
                episode = run_episode(
                    world,
                    task,
                    backends,
                    limits=limits,
                    strategy=strategy,
                    human_channel=session.ask_channel,
                    seed=seed,
                    task_ref=task_ref or task.scene_ref,
                    scene_doc=scene_doc,
                    task_doc=task_doc,
                    observer=session.record_event,
                )
                session.episode = episode
            except LangworldError as err:
                session.error = f"{type(err).__name__}: {err}"
            except Exception as err:  # defensive: surface loop crashes to clients
                session.error = f"{type(err).__name__}: {err}"
            session.notify()

        session.thread = threading.Thread(target=run, daemon=True)
        with self._lock:
            self.sessions[session.session_id] = session
        session.thread.start()
        # give the loop a moment to reach the first human turn
        self._wait_for_quiescence(session)
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id not in self.sessions:
                raise UnknownSession(session_id)
            return self.sessions[session_id]

    @staticmethod
    def _block_entries(session: Session) -> int:
        return sum(h.entries for h in session.humans.values()) + session.ask_channel.entries

    def _wait_for_quiescence(
        self, session: Session, after: int = 0, timeout: float = 10.0
    ) -> None:
        """Block until the loop enters a new human wait or finishes."""
        import time

        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if session.finished or self._block_entries(session) > after:
                return
            time.sleep(0.002)

    def post_input(self, session_id: str, payload: dict) -> dict:
        session = self.get(session_id)
        if session.finished:
            raise SessionFinished(session_id)
        kind = payload.get("kind", "action")
        text = payload.get("text", "")
        cursor = len(session.events)
        snapshot = self._block_entries(session)
        if kind == "answer":
            if not session.ask_channel.waiting.is_set():
                raise NotYourTurn("no ask is pending")
            session.ask_channel.submit(text)
        else:
            agent_id = session.waiting_human()
            if agent_id is None:
                raise NotYourTurn("no human turn is pending")
            wanted = payload.get("agent_id")
            if wanted and wanted != agent_id:
                raise NotYourTurn(f"it is {agent_id}'s turn")
            session.humans[agent_id].submit(text)
        self._wait_for_quiescence(session, after=snapshot)
        fresh = session.events[cursor:]
        feedback = next(
            (e["payload"]["message"] for e in fresh if e["kind"] == "feedback"), None
        )
        observation = next(
            (e["payload"]["text"] for e in reversed(fresh) if e["kind"] == "observation"),
            None,
        )
        result: dict[str, Any] = {
            "status": session.status(),
            "feedback": feedback,
            "next_observation": observation,
            "events_cursor": len(session.events),
        }
        if session.finished and session.episode is not None:
            result["final_report"] = {
                "outcome": session.episode.outcome,
                "failure_reason": session.episode.failure_reason,
                "score": session.episode.score.to_dict() if session.episode.score else None,
            }
        if session.error:
            result["error"] = session.error
        return result

    def descriptor(self, session_id: str) -> dict:
        session = self.get(session_id)
        task = session.task
        palettes = {}
        for role in task.roles:
            space = load_space(role.action_space)
            palettes[role.agent_id] = {
                "space_id": space.id,
                "naming": space.naming,
                "observation_style": space.observation_style,
                "actions": [
                    {
                        "name": s.name,
                        "arity": s.arity,
                        "level": s.level,
                        "description": s.description,
                    }
                    for s in space.specs
                ],
            }
        pending_ask = session.ask_channel.pending_question
        waiting = session.waiting_human()
        pending_prompt = session.humans[waiting].last_prompt if waiting else None
        return {
            "session_id": session.session_id,
            "status": session.status(),
            "pending_prompt": pending_prompt,
            "task_type": task.task_type,
            "instruction": task.instruction,
            "roles": [
                {
                    "agent_id": r.agent_id,
                    "role": r.role,
                    "human": r.agent_id in session.humans,
                    "action_space": r.action_space,
                }
                for r in task.roles
            ],
            "waiting_human": session.waiting_human(),
            "pending_ask": pending_ask,
            "action_palettes": palettes,
            "events_cursor": len(session.events),
            "error": session.error,
        }

    def episode_doc(self, session_id: str) -> dict:
        session = self.get(session_id)
        if session.episode is None:
            raise SessionFinished("episode not finished yet")
        episode = session.episode
        return {
            "schema": "langworld/episode@1",
            "episode_id": episode.episode_id,
            "task_ref": episode.task_ref,
            "seed": episode.seed,
            "strategy": episode.strategy,
            "outcome": episode.outcome,
            "failure_reason": episode.failure_reason,
            "score": episode.score.to_dict() if episode.score else None,
            "events": [event.to_dict() for event in episode.events],
        }


class _AutoYes:
    """Wrap a human backend so the setup handshake needs no keystroke."""

    def __init__(self, inner: HumanBackend):
        self.inner = inner
        self._yes_pending = True

    def complete(self, messages):
        if self._yes_pending:
            self._yes_pending = False
            return "YES"
        return self.inner.complete(messages)


# ---------------------------------------------------------------------------
# HTTP layer


def _make_handler(manager: SessionManager):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):
            pass

        def _send_json(self, status: int, doc: dict) -> None:
            payload = json.dumps(doc).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(payload)

        def _error(self, status: int, err: Exception) -> None:
            self._send_json(status, {"error": type(err).__name__, "detail": str(err)})

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if not length:
                return {}
            return json.loads(self.rfile.read(length))

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_POST(self):
            parsed = urlparse(self.path)
            parts = [p for p in parsed.path.split("/") if p]
            try:
                if parts == ["v1", "sessions"]:
                    session = manager.create_session(self._read_body())
                    self._send_json(201, manager.descriptor(session.session_id))
                elif len(parts) == 4 and parts[:2] == ["v1", "sessions"] and parts[3] == "input":
                    result = manager.post_input(parts[2], self._read_body())
                    self._send_json(200, result)
                else:
                    self._send_json(404, {"error": "NotFound"})
            except (UnknownSession, UnknownTask) as err:
                self._error(404, err)
            except (NotYourTurn, SessionFinished, RoleConflict) as err:
                self._error(409, err)
            except (SchemaError, ConfigError, ValueError) as err:
                self._error(400, err)
            except LangworldError as err:
                self._error(500, err)

        def do_GET(self):
            parsed = urlparse(self.path)
            parts = [p for p in parsed.path.split("/") if p]
            try:
                if len(parts) == 3 and parts[:2] == ["v1", "sessions"]:
                    self._send_json(200, manager.descriptor(parts[2]))
                elif len(parts) == 4 and parts[:2] == ["v1", "sessions"] and parts[3] == "events":
                    query = parse_qs(parsed.query)
                    cursor = int(query.get("cursor", ["0"])[0])
                    self._stream_events(parts[2], cursor)
                elif len(parts) == 3 and parts[:2] == ["v1", "episodes"]:
                    self._send_json(200, manager.episode_doc(parts[2]))
                elif parts == ["v1", "health"]:
                    self._send_json(200, {"ok": True})
                else:
                    self._send_json(404, {"error": "NotFound"})
            except UnknownSession as err:
                self._error(404, err)
            except SessionFinished as err:
                self._error(409, err)
            except LangworldError as err:
                self._error(500, err)

        def _stream_events(self, session_id: str, cursor: int) -> None:
            session = manager.get(session_id)
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            try:
                while True:
                    with session.changed:
                        while cursor >= len(session.events) and not session.finished:
                            session.changed.wait(timeout=10.0)
                        batch = session.events[cursor:]
                        done = session.finished and cursor + len(batch) >= len(session.events)
                    for event in batch:
                        data = json.dumps(event)
                        frame = f"id: {event['index']}\ndata: {data}\n\n"
                        self.wfile.write(frame.encode())
                        cursor = event["index"] + 1
                    self.wfile.flush()
                    if done:
                        self.wfile.write(b"event: end\ndata: {}\n\n")
                        self.wfile.flush()
                        return
            except (BrokenPipeError, ConnectionResetError):
                return

    return Handler


def make_server(host: str = "127.0.0.1", port: int = 0,
                task_dir: Optional[str] = None) -> tuple[ThreadingHTTPServer, SessionManager]:
    manager = SessionManager(task_dir=task_dir)
    server = ThreadingHTTPServer((host, port), _make_handler(manager))
    return server, manager


def serve(host: str, port: int, task_dir: Optional[str] = None) -> None:
    server, _ = make_server(host, port, task_dir)
    print(f"langworld service on http://{host}:{server.server_port}/v1", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
