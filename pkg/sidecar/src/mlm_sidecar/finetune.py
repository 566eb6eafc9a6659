"""Finetuning on word-continuation-masking corpora.

Consumes the wcm-prep output format, one JSON object per line::

    {"input_tokens": ["the", "capy", "<mask>", ...],
     "targets": {"2": "bara"}, "source_offset": 0}

``input_tokens`` entries are vocabulary surfaces produced by this model's
tokenizer (continuations carry their ``##`` prefix); ``targets`` maps mask
positions within ``input_tokens`` to the masked surface.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path

import torch

from mlm_sidecar.model import MASK_SENTINEL, MlmModel, add_special_tokens

log = logging.getLogger(__name__)

IGNORE_INDEX = -100


@dataclass
class FinetuneConfig:
    """Standard knobs; defaults are documented here, not tuned per corpus."""

    epochs: int = 2
    batch_size: int = 8
    learning_rate: float = 5e-5
    max_length: int = 128
    seed: int = 0

    @classmethod
    def load(cls, path) -> "FinetuneConfig":
        with open(path, encoding="utf-8") as f:
            return cls(**json.load(f))


def _load_examples(path, tokenizer, max_length: int) -> list[tuple[list[int], list[int]]]:
    """(input_ids, labels) pairs with specials added and non-mask labels
    ignored."""
    examples = []
    mask_id = tokenizer.mask_token_id
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            tokens = rec["input_tokens"]
            targets = {int(k): v for k, v in rec["targets"].items()}
            ids = [
                mask_id if t == MASK_SENTINEL
                else tokenizer.convert_tokens_to_ids(t)
                for t in tokens
            ]
            labels_body = [
                tokenizer.convert_tokens_to_ids(targets[i])
                if i in targets else IGNORE_INDEX
                for i in range(len(tokens))
            ]
            ids, prefix_len = add_special_tokens(tokenizer, ids)
            labels = ([IGNORE_INDEX] * prefix_len + labels_body
                      + [IGNORE_INDEX] * (len(ids) - prefix_len - len(labels_body)))
            if len(ids) > max_length:
                log.warning("line %d: %d tokens exceed max_length, skipped",
                            line_no, len(ids))
                continue
            examples.append((ids, labels))
    if not examples:
        raise ValueError(f"no usable examples in {path}")
    return examples


def _batches(examples, batch_size, pad_id):
    for start in range(0, len(examples), batch_size):
        chunk = examples[start:start + batch_size]
        width = max(len(ids) for ids, _ in chunk)
        input_ids = torch.full((len(chunk), width), pad_id, dtype=torch.long)
        labels = torch.full((len(chunk), width), IGNORE_INDEX, dtype=torch.long)
        attention = torch.zeros((len(chunk), width), dtype=torch.long)
        for row, (ids, labs) in enumerate(chunk):
            input_ids[row, :len(ids)] = torch.tensor(ids)
            labels[row, :len(labs)] = torch.tensor(labs)
            attention[row, :len(ids)] = 1
        yield input_ids, attention, labels


def wcm_finetune(examples_path, checkpoint_in, checkpoint_out,
                 cfg: FinetuneConfig | None = None) -> list[float]:
    """Train a checkpoint on a WCM corpus; returns the mean loss per epoch.

    The output directory is a complete checkpoint servable by
    ``mlm_sidecar.server``.
    """
    cfg = cfg or FinetuneConfig()
    wrapper = MlmModel(checkpoint_in, max_length=cfg.max_length)
    model, tokenizer = wrapper.model, wrapper.tokenizer
    examples = _load_examples(examples_path, tokenizer, cfg.max_length)

    torch.manual_seed(cfg.seed)
    rng = random.Random(cfg.seed)
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)
    model.train()
    epoch_losses: list[float] = []
    for epoch in range(cfg.epochs):
        order = list(range(len(examples)))
        rng.shuffle(order)
        shuffled = [examples[i] for i in order]
        total, steps = 0.0, 0
        for input_ids, attention, labels in _batches(
                shuffled, cfg.batch_size, tokenizer.pad_token_id):
            optimizer.zero_grad()
            out = model(input_ids=input_ids, attention_mask=attention,
                        labels=labels)
            out.loss.backward()
            optimizer.step()
            total += float(out.loss.detach())
            steps += 1
        epoch_losses.append(total / steps)
        log.info("epoch %d: mean loss %.4f", epoch + 1, epoch_losses[-1])

    out_dir = Path(checkpoint_out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.eval()
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    return epoch_losses
