from __future__ import annotations

import json

import pytest

from langworld.cli import main
from langworld.runtime import read_episode_doc


class TestRun:
    def test_expert_run_writes_episodes_and_metrics(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main([
            "run", "--family", "IG", "--count", "2",
            "--backend", '{"kind": "expert"}', "--out", str(out),
        ])
        assert code == 0
        captured = capsys.readouterr().out
        assert "SR" in captured and "Avg Steps" in captured
        episodes = sorted(out.glob("episode_*.jsonl"))
        assert len(episodes) == 2
        scores = json.loads((out / "scores.json").read_text())
        assert len(scores["IG"]) == 2
        assert all(s["success"] for s in scores["IG"])

    def test_manifest_run(self, tmp_path):
        manifest = {
            "schema": "langworld/run@1",
            "tasks": ["Household:0", "Household:1"],
            "strategy": "Act",
            "backend": {"kind": "expert"},
            "seed": 0,
            "out": str(tmp_path / "bench"),
        }
        manifest_path = tmp_path / "run.json"
        manifest_path.write_text(json.dumps(manifest))
        assert main(["run", "--manifest", str(manifest_path)]) == 0
        assert (tmp_path / "bench" / "metrics.txt").exists()


class TestExpertGen:
    def test_writes_trajectories_that_follow_schema(self, tmp_path):
        out = tmp_path / "traj"
        code = main([
            "expert-gen", "--family", "Rearrangement", "--count", "3", "--out", str(out),
        ])
        assert code == 0
        files = sorted(out.glob("trajectory_*.jsonl"))
        assert len(files) == 3
        for path in files:
            for line in path.read_text().splitlines():
                record = json.loads(line)
                assert set(record) == {"step", "agent", "action", "args"}


class TestReplayCommand:
    def _make_episode(self, tmp_path) -> str:
        out = tmp_path / "out"
        assert main([
            "run", "--family", "IQA", "--count", "1",
            "--backend", '{"kind": "expert"}', "--out", str(out),
        ]) == 0
        return str(next(out.glob("episode_*.jsonl")))

    def test_replay_ok_exit_zero(self, tmp_path):
        path = self._make_episode(tmp_path)
        assert main(["replay", path]) == 0

    def test_tampered_file_nonzero_exit(self, tmp_path, capsys):
        path = self._make_episode(tmp_path)
        lines = open(path).read().splitlines()
        for i, line in enumerate(lines):
            doc = json.loads(line)
            if doc.get("kind") == "feedback":
                doc["payload"]["message"] = "Action succeeded. Hacked."
                lines[i] = json.dumps(doc, sort_keys=True)
                break
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        assert main(["replay", path]) == 1


class TestMetricsCommand:
    def test_aggregates_score_files(self, tmp_path, capsys):
        out = tmp_path / "out"
        main([
            "run", "--family", "IG", "--count", "2",
            "--backend", '{"kind": "expert"}', "--out", str(out),
        ])
        capsys.readouterr()
        assert main(["metrics", str(out / "scores.json")]) == 0
        table = capsys.readouterr().out
        assert "Goal-SR" in table and "IG" in table


class TestPlay:
    def test_terminal_play_matches_http_feedback(self, tmp_path, monkeypatch, capsys):
        # transport-parse equivalence: same text, same canonical feedback string
        from langworld.backends import expert_script
        from langworld.service import resolve_task_doc
        from langworld.tasks import load_task
        from langworld.world import load_scene

        task_doc = resolve_task_doc("IG:2")
        task = load_task(task_doc)
        world = load_scene(task_doc["scene"])
        lines = iter(expert_script(world, task, naming="category"))
        monkeypatch.setattr("builtins.input", lambda *a: next(lines))
        out = tmp_path / "played.jsonl"
        code = main(["play", "--task", "IG:2", "--out", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        header, events, tail = read_episode_doc(str(out))
        assert tail["outcome"] == "Success"
        feedback = [
            e["payload"]["message"] for e in events if e["kind"] == "feedback"
        ]
        assert feedback[0] in printed
        assert main(["replay", str(out)]) == 0
