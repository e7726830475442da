"""Command-line entry points: run, expert-gen, replay, metrics, play, serve."""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Optional

from .actions import load_space
from .backends import ScriptedBackend, TerminalHumanBackend, expert_script, make_backend
from .errors import LangworldError, Unplannable
from .generator import FAMILIES, generate
from .metrics import EpisodeScore, aggregate, format_table
from .planner import generate_trajectory
from .promptkit import STRATEGIES, Strategy
from .runtime import (
    Limits,
    TerminalHumanChannel,
    persist_episode,
    replay_episode,
    run_episode,
)
from .service import resolve_task_doc, serve
from .tasks import load_task
from .world import load_scene


def _load_manifest(path: str) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema", "langworld/run@1") != "langworld/run@1":
        raise LangworldError(f"unsupported run manifest schema {doc.get('schema')!r}")
    return doc


def _task_refs(args: argparse.Namespace, manifest: Optional[dict]) -> list[str]:
    if manifest is not None:
        return list(manifest.get("tasks", []))
    refs: list[str] = []
    if args.task:
        refs.extend(args.task)
    if args.family:
        base = args.seed or 0
        refs.extend(f"{args.family}:{base + i}" for i in range(args.count))
    if not refs:
        raise LangworldError("no tasks given: use --task, --family/--count, or --manifest")
    return refs


def _run_one(
    task_ref: str,
    strategy: Strategy,
    backend_cfg: dict,
    seed: int,
    step_limit: Optional[int],
    task_dir: Optional[str],
    out_dir: Optional[str],
) -> tuple[EpisodeScore, str, bool]:
    task_doc = resolve_task_doc(task_ref, task_dir)
    if step_limit:
        task_doc["step_limit"] = step_limit
    task = load_task(task_doc)
    scene_doc = task_doc["scene"]
    world = load_scene(scene_doc)
    backends: dict[str, Any] = {}
    for role in task.roles:
        naming = load_space(role.action_space).naming
        cfg = dict(backend_cfg)
        cfg.setdefault("naming", naming)
        backends[role.agent_id] = make_backend(cfg, world=world.clone(), task=task)
    episode = run_episode(
        world,
        task,
        backends,
        limits=Limits(step_limit=step_limit),
        strategy=strategy,
        seed=seed,
        task_ref=task_ref,
        scene_doc=scene_doc,
        task_doc=task_doc,
    )
    score = episode.score
    path = ""
    consistent = True
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        safe_ref = task_ref.replace(":", "-").replace("/", "_")
        path = os.path.join(out_dir, f"episode_{safe_ref}.jsonl")
        persist_episode(episode, path)
        consistent = replay_episode(path).consistent
    return score, episode.outcome, consistent


def cmd_run(args: argparse.Namespace) -> int:
    manifest = _load_manifest(args.manifest) if args.manifest else None
    strategy = Strategy((manifest or {}).get("strategy", args.strategy))
    backend_cfg = (manifest or {}).get("backend") or json.loads(args.backend)
    out_dir = (manifest or {}).get("out", args.out)
    step_limit = (manifest or {}).get("step_limit", args.step_limit)
    seed = (manifest or {}).get("seed", args.seed or 0)
    refs = _task_refs(args, manifest)
    scores: dict[str, list[EpisodeScore]] = {}
    all_consistent = True
    for i, ref in enumerate(refs):
        score, outcome, consistent = _run_one(
            ref, strategy, backend_cfg, seed + i, step_limit, args.tasks, out_dir
        )
        all_consistent = all_consistent and consistent
        task_type = ref.split(":")[0] if ":" in ref else "tasks"
        scores.setdefault(task_type, []).append(score)
        print(f"[{i + 1}/{len(refs)}] {ref}: {outcome} steps={score.steps} "
              f"goal_sr={score.goal_sr:.2f} replay={'ok' if consistent else 'DIVERGED'}")
    groups = {name: aggregate(group) for name, group in scores.items()}
    table = format_table(groups)
    print(table)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "scores.json"), "w") as fh:
            json.dump(
                {
                    name: [s.to_dict() for s in group]
                    for name, group in scores.items()
                },
                fh,
                indent=2,
            )
        with open(os.path.join(out_dir, "metrics.json"), "w") as fh:
            json.dump({name: g.to_dict() for name, g in groups.items()}, fh, indent=2)
        with open(os.path.join(out_dir, "metrics.txt"), "w") as fh:
            fh.write(table + "\n")
    return 0 if all_consistent else 1


def cmd_expert_gen(args: argparse.Namespace) -> int:
    os.makedirs(args.out, exist_ok=True)
    failures = 0
    for i in range(args.count):
        seed = (args.seed or 0) + i
        ref = f"{args.family}:{seed}"
        task_doc = resolve_task_doc(ref, args.tasks)
        task = load_task(task_doc)
        world = load_scene(task_doc["scene"])
        try:
            trajectory = generate_trajectory(world, task)
        except Unplannable as err:
            print(f"{ref}: UNPLANNABLE ({err})", file=sys.stderr)
            failures += 1
            continue
        safe_ref = ref.replace(":", "-")
        task_path = os.path.join(args.out, f"task_{safe_ref}.json")
        with open(task_path, "w") as fh:
            json.dump(task_doc, fh, indent=2)
        trajectory_path = os.path.join(args.out, f"trajectory_{safe_ref}.jsonl")
        with open(trajectory_path, "w") as fh:
            for step, call in enumerate(trajectory):
                fh.write(json.dumps({
                    "step": step,
                    "agent": task.solo_agent,
                    "action": call.spec.name,
                    "args": call.args,
                }) + "\n")
        print(f"{ref}: {len(trajectory)} actions -> {trajectory_path}")
    return 1 if failures else 0


def cmd_replay(args: argparse.Namespace) -> int:
    diverged = 0
    for path in args.files:
        report = replay_episode(path)
        if report.consistent:
            print(f"{path}: consistent")
        else:
            diverged += 1
            print(f"{path}: DIVERGED at {report.first_divergence}", file=sys.stderr)
    return 1 if diverged else 0


def cmd_metrics(args: argparse.Namespace) -> int:
    groups: dict[str, list[EpisodeScore]] = {}
    for path in args.files:
        with open(path) as fh:
            doc = json.load(fh)
        for name, raw_scores in doc.items():
            groups.setdefault(name, []).extend(
                EpisodeScore.from_dict(raw) for raw in raw_scores
            )
    print(format_table({name: aggregate(group) for name, group in groups.items()}))
    return 0


def cmd_play(args: argparse.Namespace) -> int:
    task_doc = resolve_task_doc(args.task, args.tasks)
    if args.step_limit:
        task_doc["step_limit"] = args.step_limit
    task = load_task(task_doc)
    world = load_scene(task_doc["scene"])
    human_role = args.role or task.roles[0].agent_id
    backends: dict[str, Any] = {}
    for role in task.roles:
        if role.agent_id == human_role or role.role == human_role:
            backends[role.agent_id] = TerminalHumanBackend()
        else:
            naming = load_space(role.action_space).naming
            cfg = json.loads(args.backend)
            cfg.setdefault("naming", naming)
            backends[role.agent_id] = make_backend(cfg, world=world.clone(), task=task)
    print(f"Task: {task.instruction}")
    episode = run_episode(
        world,
        task,
        backends,
        limits=Limits(step_limit=args.step_limit, ask_timeout_s=None),
        strategy=Strategy(args.strategy),
        human_channel=TerminalHumanChannel(),
        seed=args.seed or 0,
        task_ref=args.task,
        scene_doc=task_doc["scene"],
        task_doc=task_doc,
    )
    print(f"Outcome: {episode.outcome}"
          + (f" ({episode.failure_reason})" if episode.failure_reason else ""))
    if args.out:
        persist_episode(episode, args.out)
        print(f"episode written to {args.out}")
    return 0 if episode.outcome == "Success" else 1


def cmd_serve(args: argparse.Namespace) -> int:
    serve(args.host, args.port, task_dir=args.tasks)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="langworld",
        description="Deterministic textual embodied-world engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--step-limit", type=int, default=None)
        p.add_argument("--strategy", choices=STRATEGIES, default="Act")
        p.add_argument("--backend", default='{"kind": "expert"}',
                       help="backend config as JSON")
        p.add_argument("--out", default=None)
        p.add_argument("--tasks", default=None, help="directory of task JSON files")

    p_run = sub.add_parser("run", help="benchmark a task set")
    common(p_run)
    p_run.add_argument("--manifest", help="run manifest JSON (langworld/run@1)")
    p_run.add_argument("--task", action="append", help="task ref (repeatable)")
    p_run.add_argument("--family", choices=FAMILIES)
    p_run.add_argument("--count", type=int, default=1)
    p_run.set_defaults(fn=cmd_run)

    p_gen = sub.add_parser("expert-gen", help="emit gold trajectories")
    common(p_gen)
    p_gen.add_argument("--family", choices=FAMILIES, required=True)
    p_gen.add_argument("--count", type=int, default=10)
    p_gen.set_defaults(fn=cmd_expert_gen)
    p_gen.set_defaults(out="trajectories")

    p_replay = sub.add_parser("replay", help="verify episode files")
    p_replay.add_argument("files", nargs="+")
    p_replay.set_defaults(fn=cmd_replay)

    p_metrics = sub.add_parser("metrics", help="aggregate score files")
    p_metrics.add_argument("files", nargs="+")
    p_metrics.set_defaults(fn=cmd_metrics)

    p_play = sub.add_parser("play", help="terminal human mode")
    common(p_play)
    p_play.add_argument("--task", required=True)
    p_play.add_argument("--role", default=None)
    p_play.set_defaults(fn=cmd_play)

    p_serve = sub.add_parser("serve", help="start the HTTP session service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8712)
    p_serve.add_argument("--tasks", default=None)
    p_serve.set_defaults(fn=cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except LangworldError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
