"""Word-continuation masking corpus preparation.

Takes tokenized lines (subword surface + begins_word flag), masks 15% of
token positions, and removes the tokens that follow the first mask inside
each affected word, so a model learns to start or continue words without
knowing their length.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

MASK_TOKEN = "<mask>"


@dataclass(frozen=True)
class TokenizedLine:
    tokens: tuple[tuple[str, bool], ...]
    source_offset: int = 0

    def __post_init__(self):
        if self.tokens and not self.tokens[0][1]:
            raise ValueError("first token of a line must begin a word")


@dataclass
class WcmExample:
    """A training example: input tokens with masks, and per-mask targets
    keyed by position in ``input_tokens``."""

    input_tokens: list[str]
    targets: dict[int, str]
    source_offset: int = 0
    removed: int = 0


def _word_spans(tokens) -> Iterator[tuple[int, int]]:
    """Half-open token index ranges of whole words."""
    start = None
    for i, (_, begins) in enumerate(tokens):
        if begins:
            if start is not None:
                yield start, i
            start = i
    if start is not None:
        yield start, len(tokens)


def wcm_mask(line: TokenizedLine, mask_rate: float = 0.15,
             rng_seed: int | str = 0) -> WcmExample:
    """Mask ``round(mask_rate * n)`` positions chosen uniformly (seeded) and
    truncate word continuations after each mask.

    Within a word containing one or more selected positions, the earliest
    selected token becomes the mask and every token of that word strictly
    after it is removed; tokens before the mask and all other words are
    left intact.
    """
    if not (0.0 < mask_rate < 1.0):
        raise ValueError("mask_rate must be in (0, 1)")
    n = len(line.tokens)
    if n == 0:
        raise ValueError("empty line")
    rng = random.Random(rng_seed)
    n_masks = round(mask_rate * n)
    selected = set(rng.sample(range(n), n_masks))

    input_tokens: list[str] = []
    targets: dict[int, str] = {}
    removed = 0
    for start, end in _word_spans(line.tokens):
        hit = [i for i in range(start, end) if i in selected]
        if not hit:
            input_tokens.extend(line.tokens[i][0] for i in range(start, end))
            continue
        first = hit[0]
        input_tokens.extend(line.tokens[i][0] for i in range(start, first))
        targets[len(input_tokens)] = line.tokens[first][0]
        input_tokens.append(MASK_TOKEN)
        removed += end - first - 1
    return WcmExample(input_tokens=input_tokens, targets=targets,
                      source_offset=line.source_offset, removed=removed)


@dataclass
class WcmStats:
    lines: int = 0
    tokens: int = 0
    masks: int = 0
    removed: int = 0
    skipped: int = 0

    def as_dict(self) -> dict:
        return {"lines": self.lines, "tokens": self.tokens, "masks": self.masks,
                "removed": self.removed, "skipped": self.skipped}


def parse_tokenized_line(rec: dict, offset: int) -> TokenizedLine:
    return TokenizedLine(
        tokens=tuple((str(t[0]), bool(t[1])) for t in rec["tokens"]),
        source_offset=offset,
    )


def wcm_prep_corpus(lines: Iterable[str], sink, mask_rate: float = 0.15,
                    seed: int = 0) -> WcmStats:
    """Stream tokenized JSONL lines into WCM example JSONL.

    Per-line seeds are derived from ``(seed, line index)`` so output is
    byte-identical across runs and independent of worker scheduling.
    Malformed lines are skipped and counted.
    """
    stats = WcmStats()
    for idx, raw in enumerate(lines):
        raw = raw.strip()
        if not raw:
            continue
        try:
            line = parse_tokenized_line(json.loads(raw), idx)
            if not line.tokens:
                raise ValueError("empty token list")
            example = wcm_mask(line, mask_rate=mask_rate, rng_seed=f"{seed}:{idx}")
        except (ValueError, KeyError, TypeError, json.JSONDecodeError) as e:
            log.warning("skipping line %d: %s", idx, e)
            stats.skipped += 1
            continue
        stats.lines += 1
        stats.tokens += len(line.tokens)
        stats.masks += len(example.targets)
        stats.removed += example.removed
        sink.write(json.dumps(
            {"input_tokens": example.input_tokens,
             "targets": {str(k): v for k, v in example.targets.items()},
             "source_offset": example.source_offset},
            ensure_ascii=False, separators=(",", ":")) + "\n")
    return stats
