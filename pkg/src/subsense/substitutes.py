"""Substitute candidate types and the JSONL dump handoff format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional


@dataclass(frozen=True)
class SubstituteCandidate:
    """A single-word substitute with its decode logprob.

    ``logprob`` is the sum of per-subword logprobs; ``count`` carries term
    multiplicity after lemmatization merging (1 for raw candidates).
    """

    word: str
    logprob: float
    n_subwords: int = 1
    count: int = 1

    def __post_init__(self):
        if any(ch.isspace() for ch in self.word):
            raise ValueError(f"substitute word contains whitespace: {self.word!r}")


def _sort_candidates(cands: Iterable[SubstituteCandidate]) -> list[SubstituteCandidate]:
    return sorted(cands, key=lambda c: (-c.logprob, c.word))


@dataclass
class SubstituteSet:
    """Deduplicated, ranked substitutes for one instance."""

    instance_id: str
    candidates: list[SubstituteCandidate] = field(default_factory=list)

    def __post_init__(self):
        words = [c.word for c in self.candidates]
        if len(words) != len(set(words)):
            raise ValueError(f"duplicate words in SubstituteSet for {self.instance_id!r}")
        self.candidates = _sort_candidates(self.candidates)

    @staticmethod
    def from_raw(instance_id: str, raw: Iterable[SubstituteCandidate],
                 k: Optional[int] = None) -> "SubstituteSet":
        """Deduplicate by word keeping the max-logprob duplicate, sort,
        truncate to ``k``."""
        best: dict[str, SubstituteCandidate] = {}
        for cand in raw:
            cur = best.get(cand.word)
            if cur is None or cand.logprob > cur.logprob:
                best[cand.word] = cand
        ranked = _sort_candidates(best.values())
        if k is not None:
            ranked = ranked[:k]
        return SubstituteSet(instance_id=instance_id, candidates=ranked)

    @property
    def words(self) -> list[str]:
        return [c.word for c in self.candidates]


def dump_substitute_sets(sets: Iterable[SubstituteSet], path, generator: str = "",
                         params: Optional[dict] = None) -> None:
    """Write the cacheable JSONL handoff between generation and clustering."""
    with open(path, "w", encoding="utf-8") as f:
        for s in sets:
            rec = {
                "instance_id": s.instance_id,
                "generator": generator,
                "params": params or {},
                "candidates": [
                    {"word": c.word, "logprob": c.logprob,
                     "n_subwords": c.n_subwords, "count": c.count}
                    for c in s.candidates
                ],
            }
            f.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")) + "\n")


def load_substitute_sets(path) -> list[SubstituteSet]:
    sets = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            sets.append(SubstituteSet(
                instance_id=rec["instance_id"],
                candidates=[
                    SubstituteCandidate(
                        word=c["word"], logprob=float(c["logprob"]),
                        n_subwords=int(c.get("n_subwords", 1)),
                        count=int(c.get("count", 1)),
                    )
                    for c in rec["candidates"]
                ],
            ))
    return sets
