"""Substitute generators: multi-mask Concat, word-continuation decoding, and
the single-token averaging baseline."""

from __future__ import annotations

import logging
import math
import re
from typing import Optional

from subsense.data import Instance
from subsense.gateway import MASK, MaskQuery
from subsense.substitutes import SubstituteCandidate, SubstituteSet

log = logging.getLogger(__name__)

SLOT = "{T}"


def target_slot_template(instance: Instance) -> str:
    """Replace the target span of an instance with the generator slot."""
    start, end = instance.target_span
    return instance.context[:start] + SLOT + instance.context[end:]


def fill_slot(template: str, replacement: str) -> str:
    """Substitute the slot, collapsing whitespace runs around it to one space."""
    if template.count(SLOT) != 1:
        raise ValueError(f"template must contain exactly one {SLOT!r} slot")
    norm = re.sub(r"\s+\{T\}", " " + SLOT, template)
    norm = re.sub(r"\{T\}\s+", SLOT + " ", norm)
    return norm.replace(SLOT, replacement).strip()


def _replace_first_mask(text: str, surface: str) -> str:
    return text.replace(MASK, surface, 1)


def _finish(instance_id: str, raw: list[SubstituteCandidate], k: int) -> SubstituteSet:
    if not raw:
        log.warning("no substitutes generated for %r", instance_id)
    return SubstituteSet.from_raw(instance_id, raw, k=k)


def generate_for_template(template: str, generator: str, k: int, gw,
                          mask_counts=(1, 2, 3), max_subwords: int = 3,
                          instance_id: str = "", keep: Optional[int] = None) -> SubstituteSet:
    """Dispatch to a template-driven generator. ``keep`` overrides the final
    truncation (embedding reranking consumes up to 3k candidates)."""
    if generator == "concat":
        return concat_generate(template, k, mask_counts, gw,
                               instance_id=instance_id, keep=keep)
    if generator == "wcm":
        return wcm_generate(template, k, gw, max_subwords=max_subwords,
                            instance_id=instance_id, keep=keep)
    raise ValueError(f"unknown template generator {generator!r}")


def _make_candidate(surfaces: list[str], logprob: float) -> Optional[SubstituteCandidate]:
    word = "".join(surfaces).lower()
    if not word or any(ch.isspace() for ch in word):
        return None
    return SubstituteCandidate(word=word, logprob=logprob, n_subwords=len(surfaces))


def concat_generate(template: str, k: int, mask_counts, gw,
                    instance_id: str = "",
                    truncate_per_mask_count: bool = False,
                    keep: Optional[int] = None) -> SubstituteSet:
    """Query with 1-3 consecutive masks, expand top-k first tokens with greedy
    continuations, keep only the first word of each decode path.

    With ``truncate_per_mask_count`` each mask count's candidates are
    deduplicated and cut to ``k`` before merging across mask counts;
    by default candidates are merged first and truncated once.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    mask_counts = sorted(set(mask_counts))
    if not mask_counts or not all(m >= 1 for m in mask_counts):
        raise ValueError("mask_counts must be a non-empty set of positive ints")
    raw: list[SubstituteCandidate] = []
    for m in mask_counts:
        text = fill_slot(template, MASK * m)
        resp = gw.score(MaskQuery(text=text, top_k=k))
        per_mask: list[SubstituteCandidate] = []
        for seed in resp.predictions[0]:
            surfaces = [seed.surface]
            logprob = seed.logprob
            cur = _replace_first_mask(text, seed.surface)
            for _ in range(m - 1):
                cont = gw.score(MaskQuery(text=cur, top_k=1)).predictions[0]
                if not cont or cont[0].begins_word:
                    break  # word boundary: keep only the first word
                surfaces.append(cont[0].surface)
                logprob += cont[0].logprob
                cur = _replace_first_mask(cur, cont[0].surface)
            cand = _make_candidate(surfaces, logprob)
            if cand is not None:
                per_mask.append(cand)
        if truncate_per_mask_count:
            per_mask = SubstituteSet.from_raw(instance_id, per_mask, k=k).candidates
        raw.extend(per_mask)
    return _finish(instance_id, raw, keep if keep is not None else k)


def wcm_generate(template: str, k: int, gw, max_subwords: int = 3,
                 instance_id: str = "", keep: Optional[int] = None) -> SubstituteSet:
    """Iterative mask-insertion decoding: start from one mask, re-query with
    the decoded prefix followed by a fresh mask, and stop a path when the
    argmax continuation begins a new word or ``max_subwords`` is reached."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if max_subwords < 1:
        raise ValueError("max_subwords must be >= 1")
    text = fill_slot(template, MASK)
    resp = gw.score(MaskQuery(text=text, top_k=k))
    raw: list[SubstituteCandidate] = []
    for seed in resp.predictions[0]:
        surfaces = [seed.surface]
        logprob = seed.logprob
        while len(surfaces) < max_subwords:
            cur = fill_slot(template, "".join(surfaces) + MASK)
            cont = gw.score(MaskQuery(text=cur, top_k=1)).predictions[0]
            if not cont or cont[0].begins_word:
                break
            surfaces.append(cont[0].surface)
            logprob += cont[0].logprob
        cand = _make_candidate(surfaces, logprob)
        if cand is not None:
            raw.append(cand)
    return _finish(instance_id, raw, keep if keep is not None else k)


def baseline_generate(instance: Instance, pattern, k: int, gw,
                      floor: Optional[float] = 1e-5) -> SubstituteSet:
    """Single-token baseline: average the logprob of each word-initial token
    between (a) the position distribution at the unmasked target and (b) the
    mask distribution of the pattern-injected instance.

    A token missing from one side contributes ``log(floor)`` for that side;
    ``floor=None`` keeps only tokens present in both distributions.
    """
    from subsense.inject import instantiate_pattern

    pos_query = MaskQuery(
        text=instance.context, top_k=k, mode="position_topk",
        position=instance.target_span[0],
    )
    dist_a = _single_token_logprobs(gw.score(pos_query).predictions[0])

    injected = instantiate_pattern(pattern, instance, side="target_first")
    mask_query = MaskQuery(text=fill_slot(injected, MASK), top_k=k)
    dist_b = _single_token_logprobs(gw.score(mask_query).predictions[0])

    floor_lp = math.log(floor) if floor is not None else None
    raw = []
    for word in set(dist_a) | set(dist_b):
        la, lb = dist_a.get(word), dist_b.get(word)
        if floor_lp is None and (la is None or lb is None):
            continue
        avg = ((la if la is not None else floor_lp)
               + (lb if lb is not None else floor_lp)) / 2.0
        raw.append(SubstituteCandidate(word=word, logprob=avg, n_subwords=1))
    return _finish(instance.instance_id, raw, k)


def _single_token_logprobs(tokens) -> dict[str, float]:
    out: dict[str, float] = {}
    for t in tokens:
        if not t.begins_word:
            continue  # multi-token substitutes are not allowed in the baseline
        word = t.surface.lower()
        if word and not any(ch.isspace() for ch in word):
            if word not in out or t.logprob > out[word]:
                out[word] = t.logprob
    return out
