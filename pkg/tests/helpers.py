"""Shared test helpers: instance/mock construction and the deterministic
end-to-end fixture."""

import json

from subsense.data import Dataset, Instance, save_dataset
from subsense.gateway import MASK, MockBackend
from subsense.generate import fill_slot
from subsense.inject import DEFAULT_PATTERNS, instantiate_pattern


def make_instance(iid, lemma, context, language="en", gold=None):
    start = context.index(lemma)
    return Instance(
        instance_id=iid, target_lemma=lemma, language=language,
        context=context, target_span=(start, start + len(lemma)),
        gold_sense=gold,
    )


def make_mock(responses=None, fallback=None):
    return MockBackend(responses or {}, fallback)


def write_mock_config(path, responses=None, fallback=None):
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"responses": responses or {},
                   "fallback_vocabulary": fallback or []}, f)
    return path


def build_e2e_fixture(tmp_path, n_words=2, n_per_sense=4, k=4,
                      pattern="or even"):
    """Dataset + scripted mock + run config for a fully deterministic run.

    Each word has two senses; instances of the same sense share three
    high-probability substitutes and carry one weak instance-unique filler,
    so a perfect two-cluster solution is recoverable from the TF-IDF rows.
    """
    instances = []
    responses = {}
    for w in range(n_words):
        word = f"word{w}"
        for sense in range(2):
            shared = [(f"{word}sub{sense}{j}", -0.1 * (j + 1)) for j in range(3)]
            for i in range(n_per_sense):
                iid = f"{word}.s{sense}.{i}"
                inst = make_instance(
                    iid, word, f"The {word} was seen near place {sense}{i} today",
                    gold=f"sense{sense}")
                instances.append(inst)
                preds = [[s, True, lp] for s, lp in shared]
                preds.append([f"{word}uniq{sense}{i}", True, -5.0])
                for side in ("target_first", "mask_first"):
                    template = instantiate_pattern(
                        DEFAULT_PATTERNS[pattern], inst, side)
                    responses[fill_slot(template, MASK)] = [preds]

    dataset_path = tmp_path / "dataset.jsonl"
    save_dataset(Dataset(name="e2e", instances=tuple(instances)), dataset_path)
    mock_path = write_mock_config(tmp_path / "mock.json", responses)
    config = {
        "dataset": str(dataset_path),
        "generator": "concat",
        "injection": "sdp",
        "pattern": pattern,
        "mask_counts": [1],
        "k": k,
        "backend": {"type": "mock", "config": str(mock_path)},
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config, indent=2))
    return {"dataset": dataset_path, "mock": mock_path, "config": config_path,
            "config_dict": config, "n_instances": len(instances)}
