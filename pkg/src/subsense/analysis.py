"""Interpretation tooling: discriminative substitutes per sense, taxonomy
relation classification, and an alphabet-based substitute language check."""

from __future__ import annotations

import json
import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping

from subsense.substitutes import SubstituteSet

RELATION_CLASSES = (
    "synonym",
    "direct_hyponym",
    "direct_hypernym",
    "co_hyponym",
    "transitive_hyponym",
    "transitive_hypernym",
    "co_hyponym_3",
    "unknown",
)


@dataclass
class TaxonomyGraph:
    """Synset lemma sets plus hypernym edges; acyclicity checked at load."""

    synsets: dict[str, set[str]]
    hypernyms: dict[str, set[str]]

    def __post_init__(self):
        for src, dsts in self.hypernyms.items():
            if src not in self.synsets:
                raise ValueError(f"hypernym edge from unknown synset {src!r}")
            for dst in dsts:
                if dst not in self.synsets:
                    raise ValueError(f"hypernym edge to unknown synset {dst!r}")
        self._check_acyclic()
        self._lemma_index: dict[str, set[str]] = defaultdict(set)
        for sid, lemmas in self.synsets.items():
            for lemma in lemmas:
                self._lemma_index[lemma].add(sid)

    def _check_acyclic(self):
        state: dict[str, int] = {}  # 0 visiting, 1 done

        def visit(node: str, stack: list[str]):
            if state.get(node) == 1:
                return
            if state.get(node) == 0:
                raise ValueError(f"hypernym cycle through {node!r}")
            state[node] = 0
            for parent in self.hypernyms.get(node, ()):
                visit(parent, stack)
            state[node] = 1

        for sid in self.synsets:
            visit(sid, [])

    @classmethod
    def load(cls, path) -> "TaxonomyGraph":
        """JSONL: {"synset": id, "lemmas": [...], "hypernyms": [ids]}."""
        synsets: dict[str, set[str]] = {}
        hypernyms: dict[str, set[str]] = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                synsets[rec["synset"]] = set(rec.get("lemmas", []))
                hypernyms[rec["synset"]] = set(rec.get("hypernyms", []))
        return cls(synsets=synsets, hypernyms=hypernyms)

    def synsets_of(self, lemma: str) -> set[str]:
        return self._lemma_index.get(lemma, set())

    def ancestors_within(self, sid: str, max_depth: int) -> dict[str, int]:
        """Map ancestor synset -> minimal hypernym-path depth (1-based)."""
        depths: dict[str, int] = {}
        frontier = {sid}
        for depth in range(1, max_depth + 1):
            nxt = set()
            for node in frontier:
                for parent in self.hypernyms.get(node, ()):
                    if parent not in depths:
                        depths[parent] = depth
                        nxt.add(parent)
            frontier = nxt
            if not frontier:
                break
        return depths


def classify_relation(target: str, substitute: str, tax: TaxonomyGraph,
                      max_depth: int = 10) -> str:
    """Classify the taxonomy relation between two lemmas.

    Relations hold under any-synset semantics and are checked in fixed
    priority order, nearest first; lemmas absent from the taxonomy yield
    ``unknown``.
    """
    t_syns = tax.synsets_of(target)
    s_syns = tax.synsets_of(substitute)
    if not t_syns or not s_syns:
        return "unknown"
    if t_syns & s_syns:
        return "synonym"

    t_anc = {sid: tax.ancestors_within(sid, max_depth) for sid in t_syns}
    s_anc = {sid: tax.ancestors_within(sid, max_depth) for sid in s_syns}

    def min_up_depth(anc_maps, targets) -> int | None:
        depths = [m[sid] for m in anc_maps.values() for sid in targets if sid in m]
        return min(depths) if depths else None

    up = min_up_depth(t_anc, s_syns)      # substitute above target
    down = min_up_depth(s_anc, t_syns)    # target above substitute
    if up == 1:
        return "direct_hyponym"
    if down == 1:
        return "direct_hypernym"
    def share_ancestor(max_shared_depth: int, exact: bool) -> bool:
        for tm in t_anc.values():
            for sm in s_anc.values():
                for a in set(tm) & set(sm):
                    if exact and tm[a] == sm[a] == max_shared_depth:
                        return True
                    if not exact and tm[a] <= max_shared_depth and sm[a] <= max_shared_depth:
                        return True
        return False

    if share_ancestor(1, exact=True):
        return "co_hyponym"
    if up is not None:
        return "transitive_hyponym"
    if down is not None:
        return "transitive_hypernym"
    if share_ancestor(2, exact=False):
        return "co_hyponym_3"
    return "unknown"


def discriminative_substitutes(sets: Iterable[SubstituteSet],
                               gold: Mapping[str, str],
                               top_n: int = 10) -> dict[str, list[tuple[str, float]]]:
    """Rank lemmas per sense by in-sense over out-of-sense occurrence counts.

    The denominator is add-one smoothed so sense-exclusive substitutes get a
    finite (and large) score.
    """
    per_sense: dict[str, Counter] = defaultdict(Counter)
    for s in sets:
        sense = gold.get(s.instance_id)
        if sense is None:
            continue
        for c in s.candidates:
            per_sense[sense][c.word] += c.count
    totals: Counter = Counter()
    for counts in per_sense.values():
        totals.update(counts)
    out: dict[str, list[tuple[str, float]]] = {}
    for sense, counts in per_sense.items():
        scored = [
            (word, cnt / (totals[word] - cnt + 1)) for word, cnt in counts.items()
        ]
        scored.sort(key=lambda x: (-x[1], x[0]))
        out[sense] = scored[:top_n]
    return out


_SCRIPT_PREFIX = {
    "latin": "LATIN",
    "cyrillic": "CYRILLIC",
    "greek": "GREEK",
    "arabic": "ARABIC",
    "han": "CJK",
    "hangul": "HANGUL",
}


def _char_in_script(ch: str, script: str) -> bool:
    try:
        return unicodedata.name(ch).startswith(_SCRIPT_PREFIX[script])
    except ValueError:
        return False


def substitute_language_share(sets: Iterable[SubstituteSet], alphabet: str) -> float:
    """Fraction of substitutes whose alphabetic characters all belong to the
    given script. Substitutes with no alphabetic characters count as outside."""
    if alphabet not in _SCRIPT_PREFIX:
        raise ValueError(f"unknown alphabet {alphabet!r}; "
                         f"known: {sorted(_SCRIPT_PREFIX)}")
    total = 0
    matching = 0
    for s in sets:
        for c in s.candidates:
            total += 1
            alpha = [ch for ch in c.word if ch.isalpha()]
            if alpha and all(_char_in_script(ch, alphabet) for ch in alpha):
                matching += 1
    return matching / total if total else 0.0


def relation_distribution(pairs: Iterable[tuple[str, str, bool]],
                          tax: TaxonomyGraph,
                          max_depth: int = 10) -> dict:
    """Histogram of relation classes over (target, substitute, in-top-20)
    pairs, restricted to top-20 substitutes."""
    counts = {cls: 0 for cls in RELATION_CLASSES}
    total = 0
    for target, substitute, top20 in pairs:
        if not top20:
            continue
        counts[classify_relation(target, substitute, tax, max_depth)] += 1
        total += 1
    fractions = {cls: (c / total if total else 0.0) for cls, c in counts.items()}
    return {"counts": counts, "fractions": fractions, "total": total}
