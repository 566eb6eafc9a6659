"""Target injection: symmetric dynamic patterns with multiplicative smoothing
fusion, and static-embedding reranking of generator candidates."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from subsense.data import Instance
from subsense.substitutes import SubstituteCandidate, SubstituteSet

log = logging.getLogger(__name__)

TARGET_PH = "{T}"
MASK_PH = "{M}"


@dataclass(frozen=True)
class Pattern:
    """A dynamic pattern template with target and mask placeholders.

    The symmetric counterpart is derived by swapping the placeholder roles
    unless an explicit ``mask_first_template`` is given (useful when a
    translated counterpart is not a literal swap).
    """

    name: str
    template: str
    mask_first_template: Optional[str] = None

    def __post_init__(self):
        for tmpl in (self.template, self.mask_first_template):
            if tmpl is None:
                continue
            if tmpl.count(TARGET_PH) != 1 or tmpl.count(MASK_PH) != 1:
                raise ValueError(
                    f"pattern {self.name!r}: template must contain {TARGET_PH} "
                    f"and {MASK_PH} exactly once: {tmpl!r}"
                )


#: The four symmetric dynamic patterns shipped for English.
DEFAULT_PATTERNS = {
    "and": Pattern("and", "{T} and {M}"),
    "or": Pattern("or", "{T} or {M}"),
    "and also": Pattern("and also", "{T} (and also {M})"),
    "or even": Pattern("or even", "{T} (or even {M})"),
}


def load_pattern_catalog(path) -> dict[str, dict[str, Pattern]]:
    """Load a catalog: JSON ``{name: {language: {"target_first": ...,
    "mask_first": ...}}}`` (``mask_first`` optional)."""
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    catalog: dict[str, dict[str, Pattern]] = {}
    for name, per_lang in raw.items():
        catalog[name] = {}
        for lang, entry in per_lang.items():
            if isinstance(entry, str):
                catalog[name][lang] = Pattern(name, entry)
            else:
                catalog[name][lang] = Pattern(
                    name, entry["target_first"], entry.get("mask_first")
                )
    return catalog


def resolve_pattern(name: str, language: str,
                    catalog: Optional[dict[str, dict[str, Pattern]]] = None,
                    fixed_language: Optional[str] = None) -> Pattern:
    """Pick the pattern for a language; ``fixed_language`` forces one
    language's template for all inputs (the non-translated variant)."""
    lang = fixed_language or language
    if catalog is not None:
        per_lang = catalog.get(name)
        if per_lang is None:
            raise KeyError(f"unknown pattern {name!r}")
        if lang in per_lang:
            return per_lang[lang]
        if "en" in per_lang:
            return per_lang["en"]
        raise KeyError(f"pattern {name!r} has no template for language {lang!r}")
    if name not in DEFAULT_PATTERNS:
        raise KeyError(f"unknown pattern {name!r}")
    return DEFAULT_PATTERNS[name]


def instantiate_pattern(pattern: Pattern, instance: Instance, side: str) -> str:
    """Splice the pattern into the instance context at the target span,
    producing a one-slot generator template.

    ``target_first`` keeps the target surface at {T} and puts the generator
    slot at {M}; ``mask_first`` produces the symmetric counterpart.
    """
    target = instance.target_surface
    slot = "{T}"  # the generator's slot sentinel (subsense.generate.SLOT)
    if side == "target_first":
        tmpl, t_val, m_val = pattern.template, target, slot
    elif side == "mask_first":
        if pattern.mask_first_template is not None:
            tmpl, t_val, m_val = pattern.mask_first_template, target, slot
        else:
            tmpl, t_val, m_val = pattern.template, slot, target
    else:
        raise ValueError(f"unknown side {side!r}")
    filled = tmpl.replace(MASK_PH, "\x00").replace(TARGET_PH, t_val).replace("\x00", m_val)
    start, end = instance.target_span
    return instance.context[:start] + filled + instance.context[end:]


def sdp_combine(a: SubstituteSet, b: SubstituteSet, floor: float = 1e-5,
                k: Optional[int] = None) -> SubstituteSet:
    """Fuse the two symmetric pattern sides by multiplying probabilities.

    A word present on only one side gets probability ``floor`` for the
    missing side, so words ranked high by both patterns rise to the top.
    """
    if a.instance_id and b.instance_id and a.instance_id != b.instance_id:
        raise ValueError("sdp_combine arguments must come from the same instance")
    pa = {c.word: c for c in a.candidates}
    pb = {c.word: c for c in b.candidates}
    combined = []
    for word in set(pa) | set(pb):
        ca, cb = pa.get(word), pb.get(word)
        prob_a = math.exp(ca.logprob) if ca is not None else floor
        prob_b = math.exp(cb.logprob) if cb is not None else floor
        keep = ca or cb
        combined.append(SubstituteCandidate(
            word=word,
            logprob=math.log(prob_a * prob_b),
            n_subwords=keep.n_subwords,
        ))
    return SubstituteSet.from_raw(a.instance_id or b.instance_id, combined, k=k)


class EmbeddingTable:
    """Static word embeddings with an exact-match lookup and a declared
    out-of-vocabulary similarity."""

    def __init__(self, vectors: dict[str, np.ndarray], language: str = "",
                 oov_similarity: float = 0.0):
        dims = {v.shape for v in vectors.values()}
        if len(dims) > 1:
            raise ValueError(f"inconsistent embedding dimensions: {dims}")
        self.vectors = {w: np.asarray(v, dtype=float) for w, v in vectors.items()}
        self.dim = next(iter(dims))[0] if dims else 0
        self.language = language
        self.oov_similarity = oov_similarity

    @classmethod
    def load(cls, path, language: str = "", oov_similarity: float = 0.0) -> "EmbeddingTable":
        """Text format: header "n d", then one "word v1 ... vd" line per word."""
        vectors: dict[str, np.ndarray] = {}
        with open(path, encoding="utf-8") as f:
            header = f.readline().split()
            if len(header) != 2:
                raise ValueError("embedding file must start with an 'n d' header")
            n, d = int(header[0]), int(header[1])
            for line in f:
                parts = line.rstrip("\n").split(" ")
                if len(parts) != d + 1:
                    raise ValueError(f"bad embedding line for {parts[0]!r}")
                vectors[parts[0]] = np.array([float(x) for x in parts[1:]])
        if len(vectors) != n:
            raise ValueError(f"header declared {n} vectors, file has {len(vectors)}")
        return cls(vectors, language=language, oov_similarity=oov_similarity)

    def similarity(self, a: str, b: str) -> float:
        va, vb = self.vectors.get(a), self.vectors.get(b)
        if va is None or vb is None:
            return self.oov_similarity
        na, nb = np.linalg.norm(va), np.linalg.norm(vb)
        if na == 0.0 or nb == 0.0:
            return 0.0
        return float(np.dot(va, vb) / (na * nb))

    def __contains__(self, word: str) -> bool:
        return word in self.vectors


def embs_rerank(cands: SubstituteSet, target: str, emb: EmbeddingTable,
                temperature: float = 0.1, k: int = 20) -> SubstituteSet:
    """Rerank generator candidates by the product of their model probability
    and a temperature softmax over target-candidate embedding similarities."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if not cands.candidates:
        return SubstituteSet(instance_id=cands.instance_id, candidates=[])
    in_vocab = [c.word in emb for c in cands.candidates]
    if target not in emb or not any(in_vocab):
        log.warning(
            "embs_rerank: target %r or all candidates out of vocabulary; "
            "keeping model ranking", target,
        )
        return SubstituteSet(instance_id=cands.instance_id,
                             candidates=cands.candidates[:k])
    sims = np.array([emb.similarity(target, c.word) for c in cands.candidates])
    scaled = sims / temperature
    scaled -= scaled.max()  # stable softmax
    weights = np.exp(scaled)
    weights /= weights.sum()
    reranked = [
        SubstituteCandidate(
            word=c.word,
            logprob=c.logprob + math.log(weights[i]),
            n_subwords=c.n_subwords,
        )
        for i, c in enumerate(cands.candidates)
    ]
    return SubstituteSet.from_raw(cands.instance_id, reranked, k=k)
