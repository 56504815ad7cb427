"""Expert score capture and distribution statistics.

Experts answer two questions per analyzed object: Q1 rates the
retrieved stylistic parallels, Q2 rates the generated chronological,
geographical and cultural attribution. Both use a four-level scale
where 4 is highly meaningful and 1 is not meaningful; scores of 2-4
count as meaningful.

Scores land in an append-only JSONL log. The current state is
last-write-wins per (object_id, question, rater_id), so a rater can
revise a judgment while the full audit trail is preserved.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Callable, Iterable

from .errors import NoScoresError, UnknownObjectError

QUESTIONS = ("Q1", "Q2")
SCORE_LEVELS = (1, 2, 3, 4)
MEANINGFUL_LEVELS = (2, 3, 4)


@dataclass(frozen=True)
class ExpertScore:
    object_id: str
    question: str
    rater_id: str
    score: int
    timestamp: float
    comment: str | None = None

    def __post_init__(self):
        if self.question not in QUESTIONS:
            raise ValueError(f"question must be one of {QUESTIONS}, got {self.question!r}")
        if self.score not in SCORE_LEVELS:
            raise ValueError(f"score must be in {SCORE_LEVELS}, got {self.score!r}")
        if not self.object_id:
            raise ValueError("object_id must be non-empty")
        if not self.rater_id:
            raise ValueError("rater_id must be non-empty")

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.object_id, self.question, self.rater_id)


def _round1(value: Decimal) -> float:
    return float(value.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class ScoreDistribution:
    question: str
    counts: dict[int, int]
    percentages: dict[int, float]  # exact values; rounding happens at render time
    meaningful_share: float

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def rounded(self) -> dict:
        """Presentation form: one decimal place, half-up."""
        total = Decimal(self.total)
        pct = {
            level: _round1(Decimal(self.counts[level] * 100) / total) for level in SCORE_LEVELS
        }
        meaningful = _round1(
            Decimal(sum(self.counts[level] for level in MEANINGFUL_LEVELS) * 100) / total
        )
        return {
            "question": self.question,
            "total": self.total,
            "counts": {str(level): self.counts[level] for level in SCORE_LEVELS},
            "percentages": {str(level): pct[level] for level in SCORE_LEVELS},
            "meaningful_share": meaningful,
        }

    def table(self) -> str:
        """Plain-text table for reports."""
        rounded = self.rounded()
        lines = [
            f"{self.question} score distribution ({self.total} scores)",
            "score  count  percent",
        ]
        for level in reversed(SCORE_LEVELS):
            lines.append(
                f"    {level}  {self.counts[level]:>5}  {rounded['percentages'][str(level)]:>6.1f}%"
            )
        lines.append(f"meaningful (2-4): {rounded['meaningful_share']:.1f}%")
        return "\n".join(lines)


def distribution_from_scores(question: str, scores: Iterable[int]) -> ScoreDistribution:
    counts = {level: 0 for level in SCORE_LEVELS}
    for s in scores:
        if s not in SCORE_LEVELS:
            raise ValueError(f"score {s!r} outside {SCORE_LEVELS}")
        counts[s] += 1
    total = sum(counts.values())
    if total == 0:
        raise NoScoresError(f"no scores recorded for {question}")
    percentages = {level: 100.0 * counts[level] / total for level in SCORE_LEVELS}
    meaningful = 100.0 * sum(counts[level] for level in MEANINGFUL_LEVELS) / total
    return ScoreDistribution(
        question=question, counts=counts, percentages=percentages, meaningful_share=meaningful
    )


class ScoreLog:
    """Append-only JSONL score log with last-write-wins reads.

    Writes are serialized by a lock; reads replay the log, so a
    distribution recomputed from the audit trail is by construction the
    live distribution.
    """

    def __init__(self, path: str | Path, object_exists: Callable[[str], bool] | None = None):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._object_exists = object_exists
        self._lock = threading.Lock()

    def record(self, score: ExpertScore) -> None:
        if self._object_exists is not None and not self._object_exists(score.object_id):
            raise UnknownObjectError(f"unknown object {score.object_id!r}")
        line = json.dumps(
            {
                "object_id": score.object_id,
                "question": score.question,
                "rater_id": score.rater_id,
                "score": score.score,
                "timestamp": score.timestamp,
                "comment": score.comment,
            },
            sort_keys=True,
        )
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def submit(
        self, object_id: str, question: str, rater_id: str, score: int, comment: str | None = None
    ) -> ExpertScore:
        entry = ExpertScore(
            object_id=object_id,
            question=question,
            rater_id=rater_id,
            score=score,
            timestamp=time.time(),
            comment=comment,
        )
        self.record(entry)
        return entry

    def entries(self) -> list[ExpertScore]:
        """The full audit trail, in submission order."""
        if not self.path.exists():
            return []
        out = []
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                raw = json.loads(line)
                out.append(
                    ExpertScore(
                        object_id=raw["object_id"],
                        question=raw["question"],
                        rater_id=raw["rater_id"],
                        score=raw["score"],
                        timestamp=raw["timestamp"],
                        comment=raw.get("comment"),
                    )
                )
        return out

    def current(self) -> dict[tuple[str, str, str], ExpertScore]:
        """Latest score per (object_id, question, rater_id)."""
        state: dict[tuple[str, str, str], ExpertScore] = {}
        for entry in self.entries():
            state[entry.key] = entry
        return state

    def audit(self, object_id: str, question: str, rater_id: str) -> list[ExpertScore]:
        key = (object_id, question, rater_id)
        return [e for e in self.entries() if e.key == key]

    def distribution(self, question: str) -> ScoreDistribution:
        if question not in QUESTIONS:
            raise ValueError(f"question must be one of {QUESTIONS}, got {question!r}")
        scores = [e.score for e in self.current().values() if e.question == question]
        return distribution_from_scores(question, scores)
