"""Episode scoring and aggregation across task groups."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import DivisionUndefined, EmptyInput, NonPositiveLength
from .world import WorldState, compare_status


@dataclass
class EpisodeScore:
    success: bool
    goal_sr: float
    steps: int
    llm_calls: int = 0
    misplaced_pct: Optional[float] = None
    fixed_strict_pct: Optional[float] = None
    answer_correct: Optional[bool] = None
    question_type: Optional[str] = None
    expert_len: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.goal_sr <= 1.0:
            raise ValueError(f"goal_sr out of range: {self.goal_sr}")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "goal_sr": self.goal_sr,
            "steps": self.steps,
            "llm_calls": self.llm_calls,
            "misplaced_pct": self.misplaced_pct,
            "fixed_strict_pct": self.fixed_strict_pct,
            "answer_correct": self.answer_correct,
            "question_type": self.question_type,
            "expert_len": self.expert_len,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EpisodeScore":
        return cls(
            success=bool(doc["success"]),
            goal_sr=float(doc["goal_sr"]),
            steps=int(doc["steps"]),
            llm_calls=int(doc.get("llm_calls", 0)),
            misplaced_pct=doc.get("misplaced_pct"),
            fixed_strict_pct=doc.get("fixed_strict_pct"),
            answer_correct=doc.get("answer_correct"),
            question_type=doc.get("question_type"),
            expert_len=doc.get("expert_len"),
        )


def rearrangement_scores(
    start: WorldState, end: WorldState, target: WorldState
) -> dict[str, float]:
    """Misplaced and Fixed Strict percentages against the target state.

    Misplaced can exceed 100 when the agent disturbs objects that started
    correct; Fixed Strict zeroes out entirely in that case.
    """
    initially_wrong = compare_status(start, target).object_ids
    wrong_at_end = compare_status(end, target).object_ids
    if not initially_wrong:
        raise DivisionUndefined("no objects were shuffled; scores are undefined")
    newly_disturbed = wrong_at_end - initially_wrong
    fixed = len(initially_wrong - wrong_at_end)
    misplaced_pct = 100.0 * len(wrong_at_end) / len(initially_wrong)
    fixed_strict_pct = 0.0 if newly_disturbed else 100.0 * fixed / len(initially_wrong)
    return {"misplaced_pct": misplaced_pct, "fixed_strict_pct": fixed_strict_pct}


def path_weighted(score: float, expert_len: int, agent_len: int) -> float:
    """Penalize completions that took more actions than the expert."""
    if expert_len < 1 or agent_len < 1:
        raise NonPositiveLength(f"lengths must be >= 1, got {expert_len}, {agent_len}")
    if score < 0:
        raise ValueError("score must be non-negative")
    return score * expert_len / max(expert_len, agent_len)


@dataclass
class Summary:
    count: int
    sr: float
    goal_sr: float
    avg_steps: float
    avg_llm_calls: float
    misplaced: Optional[float] = None
    fixed_strict: Optional[float] = None
    acc_by_question: dict[str, float] = field(default_factory=dict)
    path_weighted_sr: Optional[float] = None
    path_weighted_goal_sr: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "SR": self.sr,
            "Goal-SR": self.goal_sr,
            "Avg Steps": self.avg_steps,
            "Avg LLM Calls": self.avg_llm_calls,
            "Misplaced": self.misplaced,
            "Fixed Strict": self.fixed_strict,
            "Acc": self.acc_by_question,
            "PW-SR": self.path_weighted_sr,
            "PW-Goal-SR": self.path_weighted_goal_sr,
        }


def _mean(values: list[float]) -> float:
    # summing in sorted order keeps aggregation bit-identical under permutation
    return sum(sorted(values)) / len(values)


def aggregate(scores: list[EpisodeScore]) -> Summary:
    """Group-level means; IQA accuracy reported per question sub-type."""
    if not scores:
        raise EmptyInput("no episode scores to aggregate")
    summary = Summary(
        count=len(scores),
        sr=100.0 * _mean([1.0 if s.success else 0.0 for s in scores]),
        goal_sr=100.0 * _mean([s.goal_sr for s in scores]),
        avg_steps=_mean([float(s.steps) for s in scores]),
        avg_llm_calls=_mean([float(s.llm_calls) for s in scores]),
    )
    misplaced = [s.misplaced_pct for s in scores if s.misplaced_pct is not None]
    fixed = [s.fixed_strict_pct for s in scores if s.fixed_strict_pct is not None]
    if misplaced:
        summary.misplaced = _mean(misplaced)
    if fixed:
        summary.fixed_strict = _mean(fixed)
    by_type: dict[str, list[bool]] = {}
    for s in scores:
        if s.question_type is not None and s.answer_correct is not None:
            by_type.setdefault(s.question_type, []).append(s.answer_correct)
    summary.acc_by_question = {
        qtype: 100.0 * _mean([1.0 if ok else 0.0 for ok in oks])
        for qtype, oks in sorted(by_type.items())
    }
    weighted = [s for s in scores if s.expert_len is not None]
    if weighted:
        summary.path_weighted_sr = 100.0 * _mean(
            [
                path_weighted(1.0 if s.success else 0.0, s.expert_len, max(s.steps, 1))
                for s in weighted
            ]
        )
        summary.path_weighted_goal_sr = 100.0 * _mean(
            [path_weighted(s.goal_sr, s.expert_len, max(s.steps, 1)) for s in weighted]
        )
    return summary


_COLUMNS = ("SR", "Goal-SR", "Avg Steps", "Misplaced", "Fixed Strict", "PW-SR", "PW-Goal-SR")


def format_table(groups: dict[str, Summary]) -> str:
    """Aligned text table, one row per task group, stable column order."""
    headers = ["Group", "N"] + list(_COLUMNS) + ["Acc"]
    rows = []
    for name in sorted(groups):
        summary = groups[name]
        data = summary.to_dict()
        row = [name, str(summary.count)]
        for column in _COLUMNS:
            value = data[column]
            row.append("-" if value is None else f"{value:.1f}")
        if summary.acc_by_question:
            row.append(
                " ".join(f"{k}:{v:.1f}" for k, v in summary.acc_by_question.items())
            )
        else:
            row.append("-")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows + [headers]) for i in range(len(headers))]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines)
