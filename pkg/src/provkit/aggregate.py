"""Candidate aggregation across the three retrieval strategies.

The per-strategy hit lists are treated as existence-based multisets of
labels. Their multiset union is deduplicated and totally ordered by the
canonical label string (lexicographic; zero-padded page numbers make
this agree with numeric page order), then truncated to the top m
entries. Similarity scores are carried along for reporting but do not
influence the default order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

STRATEGIES = ("raw", "edge", "clip")


@dataclass(frozen=True)
class PoolEntry:
    """One distinct label with the strategies that retrieved it."""

    label: str
    strategies: frozenset[str]
    scores: Mapping[str, float]  # best score per strategy, reporting only

    @property
    def multiplicity(self) -> int:
        return len(self.strategies)


@dataclass(frozen=True)
class CandidatePool:
    entries: Mapping[str, PoolEntry]

    def __len__(self) -> int:
        return len(self.entries)

    def multiplicity(self, label: str) -> int:
        return self.entries[label].multiplicity


def _label_of(hit) -> str:
    return hit if isinstance(hit, str) else hit.label


def _score_of(hit) -> float | None:
    return None if isinstance(hit, str) else float(hit.score)


def pool(hits_raw: Sequence, hits_edge: Sequence, hits_clip: Sequence) -> CandidatePool:
    """Union the three hit lists into a pool keyed by label.

    Each list must be internally label-unique; an entry's multiplicity
    is the number of strategies that returned its label (1..3). Hits
    may be SearchHit-like objects or bare label strings.
    """
    entries: dict[str, dict] = {}
    for strategy, hits in zip(STRATEGIES, (hits_raw, hits_edge, hits_clip)):
        seen: set[str] = set()
        for hit in hits:
            label = _label_of(hit)
            if label in seen:
                raise ValueError(f"duplicate label {label!r} in {strategy} hit list")
            seen.add(label)
            slot = entries.setdefault(label, {"strategies": set(), "scores": {}})
            slot["strategies"].add(strategy)
            score = _score_of(hit)
            if score is not None:
                slot["scores"][strategy] = score
    return CandidatePool(
        entries={
            label: PoolEntry(
                label=label,
                strategies=frozenset(slot["strategies"]),
                scores=dict(slot["scores"]),
            )
            for label, slot in entries.items()
        }
    )


def dedup_sort(candidates: CandidatePool, order: str = "label") -> list[str]:
    """The deduplicated, totally ordered candidate list T.

    order="label" (default) is plain ascending canonical-string order;
    multiplicity plays no role. order="salience" is an opt-in extension
    ranking by multiplicity, then best score, then label.
    """
    if order == "label":
        return sorted(candidates.entries)
    if order == "salience":
        def key(label: str):
            entry = candidates.entries[label]
            best = max(entry.scores.values(), default=0.0)
            return (-entry.multiplicity, -best, label)

        return sorted(candidates.entries, key=key)
    raise ValueError(f"unknown order {order!r}")


def truncate(ordered: Sequence[str], m: int) -> list[str]:
    """Keep the first min(m, n) labels."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return list(ordered[:m])


def pool_records(candidates: CandidatePool) -> list[dict]:
    """Pool serialization for job records: canonical label order."""
    return [
        {
            "label": label,
            "strategies": sorted(entry.strategies),
            "scores": {s: round(v, 6) for s, v in sorted(entry.scores.items())},
        }
        for label, entry in sorted(candidates.entries.items())
    ]
