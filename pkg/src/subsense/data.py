"""Dataset types, canonical JSONL ingestion, WSD-to-WSI conversion and filtering.

The canonical format is JSONL with one instance per line:

    {"instance_id": ..., "target_lemma": ..., "language": ...,
     "context": ..., "target_span": [start, end], "gold_sense": ...}

``target_span`` is a half-open character-offset pair into ``context``.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional


class DataError(ValueError):
    """Raised for malformed or invariant-violating dataset input."""


@dataclass(frozen=True)
class Instance:
    """One occurrence of a target word in context."""

    instance_id: str
    target_lemma: str
    language: str
    context: str
    target_span: tuple[int, int]
    gold_sense: Optional[str] = None

    def __post_init__(self):
        start, end = self.target_span
        if not (0 <= start < end <= len(self.context)):
            raise DataError(
                f"instance {self.instance_id!r}: target_span {self.target_span} "
                f"out of bounds for context of length {len(self.context)}"
            )

    @property
    def target_surface(self) -> str:
        start, end = self.target_span
        return self.context[start:end]


@dataclass(frozen=True)
class Dataset:
    """A flat collection of instances with a derived per-lemma index."""

    name: str
    instances: tuple[Instance, ...]

    @property
    def words(self) -> "OrderedDict[str, list[Instance]]":
        index: OrderedDict[str, list[Instance]] = OrderedDict()
        for inst in self.instances:
            index.setdefault(inst.target_lemma, []).append(inst)
        return index

    def summary(self) -> tuple[int, int, float]:
        """(total instances, distinct words, average instances per word)."""
        n = len(self.instances)
        w = len(self.words)
        return n, w, (n / w if w else 0.0)

    def overlength_ids(self, max_chars: int) -> list[str]:
        """Instances whose context exceeds ``max_chars`` characters.

        Flagging only; the instances stay in the dataset.
        """
        return [i.instance_id for i in self.instances if len(i.context) > max_chars]


def _instance_from_record(rec: dict, line_no: int) -> Instance:
    try:
        span = rec["target_span"]
        return Instance(
            instance_id=rec["instance_id"],
            target_lemma=rec["target_lemma"],
            language=rec["language"],
            context=rec["context"],
            target_span=(int(span[0]), int(span[1])),
            gold_sense=rec.get("gold_sense"),
        )
    except KeyError as e:
        raise DataError(f"line {line_no}: missing field {e.args[0]!r}") from e


def _check_unique_ids(instances: Iterable[Instance]) -> None:
    seen: set[str] = set()
    for inst in instances:
        if inst.instance_id in seen:
            raise DataError(f"duplicate instance_id {inst.instance_id!r}")
        seen.add(inst.instance_id)


def load_dataset(path, format: str = "canonical_jsonl", name: Optional[str] = None) -> Dataset:
    """Load a dataset, preserving input order.

    ``format`` is ``canonical_jsonl`` or ``senseval_xml_adapter``.
    """
    if format == "canonical_jsonl":
        instances = []
        with open(path, encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as e:
                    raise DataError(f"line {line_no}: invalid JSON: {e}") from e
                instances.append(_instance_from_record(rec, line_no))
    elif format == "senseval_xml_adapter":
        instances = _load_senseval_xml(path)
    else:
        raise DataError(f"unknown dataset format {format!r}")
    _check_unique_ids(instances)
    return Dataset(name=name or str(path), instances=tuple(instances))


def _load_senseval_xml(path) -> list[Instance]:
    """Adapter for SemEval-style XML: <lexelt item=...><instance id=...>
    <context>... <head>word</head> ...</context></instance></lexelt>."""
    try:
        tree = ET.parse(path)
    except ET.ParseError as e:
        raise DataError(f"XML parse error in {path}: {e}") from e
    instances = []
    root = tree.getroot()
    for lexelt in root.iter("lexelt"):
        item = lexelt.get("item", "")
        lemma = item.split(".")[0]
        lang = lexelt.get("lang", "en")
        for xml_inst in lexelt.iter("instance"):
            iid = xml_inst.get("id")
            ctx = xml_inst.find("context")
            if iid is None or ctx is None:
                raise DataError(f"instance without id or context under lexelt {item!r}")
            head = ctx.find("head")
            if head is None:
                raise DataError(f"instance {iid!r}: no <head> element")
            before = ctx.text or ""
            surface = head.text or ""
            after = (head.tail or "") + "".join(
                ET.tostring(e, encoding="unicode", method="text") for e in list(ctx)[1:]
            )
            context = before + surface + after
            start = len(before)
            sense = xml_inst.get("sense")
            instances.append(
                Instance(
                    instance_id=iid,
                    target_lemma=lemma,
                    language=lang,
                    context=context,
                    target_span=(start, start + len(surface)),
                    gold_sense=sense,
                )
            )
    return instances


def save_dataset(dataset: Dataset, path) -> None:
    """Serialize to canonical JSONL (stable key order, UTF-8)."""
    with open(path, "w", encoding="utf-8") as f:
        for inst in dataset.instances:
            f.write(instance_to_json(inst) + "\n")


def instance_to_json(inst: Instance) -> str:
    rec = {
        "instance_id": inst.instance_id,
        "target_lemma": inst.target_lemma,
        "language": inst.language,
        "context": inst.context,
        "target_span": list(inst.target_span),
    }
    if inst.gold_sense is not None:
        rec["gold_sense"] = inst.gold_sense
    return json.dumps(rec, ensure_ascii=False, separators=(",", ":"))


def convert_wsd_to_wsi(dataset: Dataset) -> Dataset:
    """Replace sense labels with opaque per-word cluster labels "0", "1", ...

    Labels are assigned by first occurrence order within each word, so the
    result is deterministic and preserves the gold partition.
    """
    label_maps: dict[str, dict[str, str]] = {}
    converted = []
    for inst in dataset.instances:
        if inst.gold_sense is None:
            raise DataError(f"instance {inst.instance_id!r} has no gold_sense")
        per_word = label_maps.setdefault(inst.target_lemma, {})
        if inst.gold_sense not in per_word:
            per_word[inst.gold_sense] = str(len(per_word))
        converted.append(replace(inst, gold_sense=per_word[inst.gold_sense]))
    return Dataset(name=dataset.name, instances=tuple(converted))


def filter_dataset(dataset: Dataset, min_senses: int, min_instances: int) -> Dataset:
    """Keep only words with at least ``min_senses`` distinct senses and
    ``min_instances`` instances."""
    kept_words = set()
    for word, insts in dataset.words.items():
        senses = {i.gold_sense for i in insts if i.gold_sense is not None}
        if len(senses) >= min_senses and len(insts) >= min_instances:
            kept_words.add(word)
    return Dataset(
        name=dataset.name,
        instances=tuple(i for i in dataset.instances if i.target_lemma in kept_words),
    )


@dataclass
class SenseClustering:
    """Per-target-word clustering: instance_id -> cluster id, optionally soft."""

    word: str
    assignments: dict[str, int]
    soft: Optional[dict[str, dict[int, float]]] = None
    selected_c: Optional[int] = None
    ch_scores: dict[int, float] = field(default_factory=dict)
    degenerate: bool = False

    def validate(self) -> None:
        for iid, cid in self.assignments.items():
            if cid < 0:
                raise DataError(f"negative cluster id for {iid!r}")
        if self.soft is not None:
            for iid, weights in self.soft.items():
                total = sum(weights.values())
                if abs(total - 1.0) > 1e-9:
                    raise DataError(f"soft weights for {iid!r} sum to {total}")
                if iid in self.assignments:
                    best = max(weights, key=lambda c: (weights[c], -c))
                    if best != self.assignments[iid]:
                        raise DataError(f"hard assignment for {iid!r} is not argmax of soft")
