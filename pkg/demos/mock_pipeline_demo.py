"""Narrative walk-through of the full pipeline on a scripted backend.

Builds a tiny two-word dataset whose senses are separable by their
substitutes, scripts a deterministic mock MLM to produce those substitutes,
runs generate -> inject -> vectorize -> cluster -> evaluate, and prints the
per-word metric table. Everything lives in a temporary directory; no model
is needed.

Run:  python3 demos/mock_pipeline_demo.py
"""

import json
import tempfile
from pathlib import Path

from subsense.data import Dataset, Instance, save_dataset
from subsense.gateway import MASK
from subsense.generate import fill_slot
from subsense.inject import DEFAULT_PATTERNS, instantiate_pattern
from subsense.pipeline import RunConfig, format_report_table, run_pipeline


def build_inputs(root: Path):
    pattern = DEFAULT_PATTERNS["or even"]
    instances, responses = [], {}
    senses = {
        "bank": {"shore": ["riverbank", "shoreline", "slope"],
                 "lender": ["institution", "branch", "firm"]},
        "cold": {"illness": ["flu", "cough", "infection"],
                 "chill": ["frost", "freeze", "draft"]},
    }
    for word, by_sense in senses.items():
        for s, (sense, substitutes) in enumerate(by_sense.items()):
            for i in range(6):
                context = f"Everyone talked about the {word} that day ({s}{i})"
                start = context.index(word)
                inst = Instance(
                    instance_id=f"{word}.{sense}.{i}", target_lemma=word,
                    language="en", context=context,
                    target_span=(start, start + len(word)), gold_sense=sense,
                )
                instances.append(inst)
                # the scripted model answers both symmetric pattern queries
                # with the sense's substitutes plus a weak unique filler
                preds = [[sub, True, -0.1 * (j + 1)]
                         for j, sub in enumerate(substitutes)]
                preds.append([f"{word}{sense}{i}", True, -5.0])
                for side in ("target_first", "mask_first"):
                    template = instantiate_pattern(pattern, inst, side)
                    responses[fill_slot(template, MASK)] = [preds]

    dataset = root / "dataset.jsonl"
    save_dataset(Dataset(name="demo", instances=tuple(instances)), dataset)
    mock = root / "mock.json"
    mock.write_text(json.dumps({"responses": responses}))
    return dataset, mock


def main():
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        dataset, mock = build_inputs(root)
        cfg = RunConfig(
            dataset=str(dataset),
            generator="concat",
            injection="sdp",
            pattern="or even",
            mask_counts=[1],
            k=4,
            backend={"type": "mock", "config": str(mock)},
        )
        report = run_pipeline(cfg, root / "run")
        print(format_report_table(report))
        print()
        print("artifacts:", sorted(p.name for p in (root / "run").iterdir()))


if __name__ == "__main__":
    main()
