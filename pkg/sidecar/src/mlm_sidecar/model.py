"""Model wrapper: tokenization, mask handling, and top-k prediction.

All tokenizer knowledge lives here. The wire protocol speaks in plain text
with ``<mask>`` sentinels and (surface, begins_word, logprob) predictions;
this module translates between that contract and the vocabulary's subword
conventions (WordPiece ``##`` continuations by default).

Predictions are full log-softmax rows: requesting ``top_k`` equal to the
vocabulary size returns a distribution whose probabilities sum to 1.
Special tokens are not filtered; callers own candidate filtering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

MASK_SENTINEL = "<mask>"
CONTINUATION_PREFIX = "##"


@dataclass
class SidecarConfig:
    checkpoint: str
    device: str = "cpu"
    max_length: int = 128
    host: str = "127.0.0.1"
    port: int = 0

    @classmethod
    def load(cls, path) -> "SidecarConfig":
        with open(path, encoding="utf-8") as f:
            return cls(**json.load(f))


class ModelError(RuntimeError):
    """Invalid query for this model/tokenizer; reported as a protocol error."""


def add_special_tokens(tokenizer, ids: list[int]) -> tuple[list[int], int]:
    """Wrap a single-sequence id list in the tokenizer's specials.

    Returns the wrapped ids and the prefix length (offset of the original
    first token).
    """
    prefix = [tokenizer.cls_token_id] if tokenizer.cls_token_id is not None else []
    suffix = [tokenizer.sep_token_id] if tokenizer.sep_token_id is not None else []
    return prefix + ids + suffix, len(prefix)


class MlmModel:
    """A masked LM checkpoint answering masked_topk and position_topk queries.

    Determinism: inference runs under ``torch.no_grad`` with a fixed
    checkpoint; ranking ties at equal logprob are broken by token id.
    """

    def __init__(self, checkpoint, device: str = "cpu", max_length: int = 128):
        from transformers import AutoModelForMaskedLM, AutoTokenizer

        self.tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        self.model = AutoModelForMaskedLM.from_pretrained(checkpoint)
        self.model.to(device).eval()
        self.device = device
        self.max_length = max_length
        self.mask_id = self.tokenizer.mask_token_id
        if self.mask_id is None:
            raise ModelError("checkpoint tokenizer has no mask token")

    @property
    def vocab_size(self) -> int:
        return len(self.tokenizer)

    # ------------------------------------------------------------ encoding

    def _continuation_token(self, token: str) -> str:
        """Re-tokenize a segment-initial token as a word continuation when
        the text glues it directly to a preceding mask (e.g. "capy<mask>"
        decodes produce "<mask>bara"-style queries)."""
        cont = CONTINUATION_PREFIX + token
        if self.tokenizer.convert_tokens_to_ids(cont) != self.tokenizer.unk_token_id:
            return cont
        return token

    def _encode_with_masks(self, text: str) -> tuple[list[int], list[int]]:
        """Token ids with specials, and the index of every mask sentinel."""
        segments = text.split(MASK_SENTINEL)
        tokens: list[str] = []
        mask_slots: list[int] = []
        for i, seg in enumerate(segments):
            if i > 0:
                mask_slots.append(len(tokens))
                tokens.append(self.tokenizer.mask_token)
            if not seg:
                continue
            seg_tokens = self.tokenizer.tokenize(seg)
            if i > 0 and not seg[0].isspace() and seg_tokens:
                seg_tokens[0] = self._continuation_token(seg_tokens[0])
            tokens.extend(seg_tokens)
        ids = self.tokenizer.convert_tokens_to_ids(tokens)
        ids, prefix_len = add_special_tokens(self.tokenizer, ids)
        mask_positions = [slot + prefix_len for slot in mask_slots]
        if len(ids) > self.max_length:
            raise ModelError(
                f"query of {len(ids)} tokens exceeds max_length {self.max_length}")
        return ids, mask_positions

    def _logits(self, ids: list[int]) -> torch.Tensor:
        with torch.no_grad():
            out = self.model(input_ids=torch.tensor([ids], device=self.device))
        return out.logits[0].to("cpu")

    def _topk(self, logits_row: torch.Tensor, top_k: int) -> list[dict]:
        lp = torch.log_softmax(logits_row.double(), dim=-1).numpy()
        order = np.lexsort((np.arange(len(lp)), -lp))
        predictions = []
        for tid in order[:top_k]:
            token = self.tokenizer.convert_ids_to_tokens(int(tid))
            if token.startswith(CONTINUATION_PREFIX):
                surface, begins = token[len(CONTINUATION_PREFIX):], False
            else:
                surface, begins = token, True
            predictions.append({"surface": surface, "begins_word": begins,
                                "logprob": float(lp[tid])})
        return predictions

    # ------------------------------------------------------------- queries

    def masked_topk(self, text: str, top_k: int) -> list[list[dict]]:
        """One prediction list per ``<mask>`` sentinel, left to right."""
        if top_k < 1:
            raise ModelError("top_k must be positive")
        if MASK_SENTINEL not in text:
            raise ModelError("masked_topk query needs at least one <mask>")
        ids, mask_positions = self._encode_with_masks(text)
        logits = self._logits(ids)
        return [self._topk(logits[pos], top_k) for pos in mask_positions]

    def position_topk(self, text: str, top_k: int, position: int) -> list[list[dict]]:
        """Distribution at the subword covering character offset ``position``."""
        if top_k < 1:
            raise ModelError("top_k must be positive")
        if MASK_SENTINEL in text:
            raise ModelError("position_topk query must not contain <mask>")
        if not (0 <= position < len(text)):
            raise ModelError(f"position {position} out of range")
        enc = self.tokenizer(text, return_offsets_mapping=True,
                             return_tensors=None)
        token_index = None
        for i, (start, end) in enumerate(enc["offset_mapping"]):
            if start <= position < end:
                token_index = i
                break
        if token_index is None:
            raise ModelError(f"no subword covers position {position}")
        ids = enc["input_ids"]
        if len(ids) > self.max_length:
            raise ModelError(
                f"query of {len(ids)} tokens exceeds max_length {self.max_length}")
        logits = self._logits(ids)
        return [self._topk(logits[token_index], top_k)]

    # ----------------------------------------------------- corpus tooling

    def tokenize_line(self, text: str) -> list[tuple[str, bool]]:
        """Subword (surface-in-vocab, begins_word) pairs for corpus prep.

        Surfaces keep the vocabulary's own spelling (including the ``##``
        prefix) so finetuning can map them back to ids exactly.
        """
        return [(t, not t.startswith(CONTINUATION_PREFIX))
                for t in self.tokenizer.tokenize(text)]


def build_tiny_checkpoint(path, words: list[str],
                          continuations: list[str] = (), seed: int = 0) -> Path:
    """Write a small randomly initialized BERT MLM checkpoint for tests.

    ``words`` become word-initial vocabulary entries; ``continuations`` are
    stored with the ``##`` prefix.
    """
    from transformers import BertConfig, BertForMaskedLM, BertTokenizer

    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab += list(words)
    vocab += [CONTINUATION_PREFIX + c for c in continuations]
    tokenizer = BertTokenizer(vocab={t: i for i, t in enumerate(vocab)},
                              do_lower_case=True)
    config = BertConfig(
        vocab_size=len(vocab), hidden_size=32, num_hidden_layers=2,
        num_attention_heads=2, intermediate_size=64,
        max_position_embeddings=128,
    )
    torch.manual_seed(seed)
    model = BertForMaskedLM(config)
    model.save_pretrained(path)
    tokenizer.save_pretrained(path)
    return path
