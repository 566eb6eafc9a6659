"""Lemmatization providers and per-target-word TF-IDF matrices."""

from __future__ import annotations

import math
import subprocess
from dataclasses import dataclass
from typing import Iterable, Protocol

import numpy as np

from subsense.substitutes import SubstituteCandidate, SubstituteSet


class LemmaProvider(Protocol):
    def lemma(self, surface: str, language: str) -> str: ...


class IdentityLemmaProvider:
    def lemma(self, surface: str, language: str) -> str:
        return surface


class TableLemmaProvider:
    """Lemma lookup from a TSV table ``language<TAB>surface<TAB>lemma`` with
    identity fallback for unknown surfaces."""

    def __init__(self, table: dict[tuple[str, str], str]):
        self.table = table

    @classmethod
    def load(cls, path) -> "TableLemmaProvider":
        table: dict[tuple[str, str], str] = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                lang, surface, lemma = line.split("\t")
                table[(lang, surface)] = lemma
        return cls(table)

    def lemma(self, surface: str, language: str) -> str:
        return self.table.get((language, surface), surface)


class ExternalLemmaProvider:
    """Pipes ``lang<TAB>surface`` lines to an external process and reads one
    lemma per line back. Falls back to identity on empty replies."""

    def __init__(self, command: list[str]):
        self.proc = subprocess.Popen(
            command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, bufsize=1,
        )

    def lemma(self, surface: str, language: str) -> str:
        assert self.proc.stdin and self.proc.stdout
        self.proc.stdin.write(f"{language}\t{surface}\n")
        self.proc.stdin.flush()
        reply = self.proc.stdout.readline().strip()
        return reply or surface

    def close(self):
        if self.proc.stdin:
            self.proc.stdin.close()
        self.proc.wait()


def lemmatize_set(s: SubstituteSet, lang: str, lp: LemmaProvider) -> SubstituteSet:
    """Replace candidate words by lemmas, merging duplicates by summing
    counts; the max logprob among merged candidates is kept for ordering."""
    merged: dict[str, SubstituteCandidate] = {}
    for c in s.candidates:
        lemma = lp.lemma(c.word, lang)
        cur = merged.get(lemma)
        if cur is None:
            merged[lemma] = SubstituteCandidate(
                word=lemma, logprob=c.logprob, n_subwords=c.n_subwords, count=c.count
            )
        else:
            merged[lemma] = SubstituteCandidate(
                word=lemma,
                logprob=max(cur.logprob, c.logprob),
                n_subwords=cur.n_subwords,
                count=cur.count + c.count,
            )
    return SubstituteSet(instance_id=s.instance_id, candidates=list(merged.values()))


@dataclass
class TfidfMatrix:
    """Dense TF-IDF rows for one target word, L2-normalized."""

    instance_ids: list[str]
    vocabulary: list[str]
    values: np.ndarray

    def __post_init__(self):
        assert self.values.shape == (len(self.instance_ids), len(self.vocabulary))

    def row(self, instance_id: str) -> np.ndarray:
        return self.values[self.instance_ids.index(instance_id)]


def build_tfidf(sets: Iterable[SubstituteSet],
                weight_by_probability: bool = False) -> TfidfMatrix:
    """TF-IDF over the lemmatized substitutes of one target word.

    tf is the raw lemma count in the instance (or summed probability with
    ``weight_by_probability``); idf = ln((1+N)/(1+df)) + 1; rows are
    L2-normalized. The vocabulary is the sorted union of lemmas.
    """
    sets = list(sets)
    if not sets or all(not s.candidates for s in sets):
        raise ValueError("cannot build TF-IDF: all substitute sets are empty")
    vocab = sorted({c.word for s in sets for c in s.candidates})
    col = {w: j for j, w in enumerate(vocab)}
    n = len(sets)
    tf = np.zeros((n, len(vocab)))
    for i, s in enumerate(sets):
        for c in s.candidates:
            tf[i, col[c.word]] += math.exp(c.logprob) if weight_by_probability else c.count
    df = (tf > 0).sum(axis=0)
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    values = tf * idf
    norms = np.linalg.norm(values, axis=1)
    nonzero = norms > 0
    values[nonzero] /= norms[nonzero, None]
    return TfidfMatrix(
        instance_ids=[s.instance_id for s in sets],
        vocabulary=vocab,
        values=values,
    )
