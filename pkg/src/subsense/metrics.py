"""Clustering evaluation: adjusted Rand index (exact rational arithmetic),
its upper bound over tree cuts, V-measure, and paired F-score."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

from subsense.cluster import LinkageTree

Labeling = Mapping[str, Hashable]


class MetricError(ValueError):
    pass


@dataclass
class ContingencyTable:
    """Gold-sense x predicted-cluster co-occurrence counts."""

    counts: dict[tuple[Hashable, Hashable], int]
    row_marginals: dict[Hashable, int]
    col_marginals: dict[Hashable, int]
    n: int

    @classmethod
    def from_labelings(cls, gold: Labeling, pred: Labeling) -> "ContingencyTable":
        if set(gold) != set(pred):
            raise MetricError("gold and predicted labelings cover different instances")
        counts: Counter = Counter()
        rows: Counter = Counter()
        cols: Counter = Counter()
        for iid in gold:
            counts[(gold[iid], pred[iid])] += 1
            rows[gold[iid]] += 1
            cols[pred[iid]] += 1
        return cls(dict(counts), dict(rows), dict(cols), len(gold))


def _pairs(x: int) -> int:
    return x * (x - 1) // 2


def ari(gold: Labeling, pred: Labeling) -> float:
    """Adjusted Rand index, computed with exact rationals internally."""
    table = ContingencyTable.from_labelings(gold, pred)
    if table.n < 2:
        raise MetricError("ARI needs at least 2 instances")
    sum_ij = sum(_pairs(v) for v in table.counts.values())
    sum_a = sum(_pairs(v) for v in table.row_marginals.values())
    sum_b = sum(_pairs(v) for v in table.col_marginals.values())
    total = _pairs(table.n)
    expected = Fraction(sum_a * sum_b, total)
    max_index = Fraction(sum_a + sum_b, 2)
    if max_index == expected:
        # both partitions trivial (all-singletons or single cluster)
        return 1.0 if sum_ij == sum_a == sum_b else 0.0
    return float((sum_ij - expected) / (max_index - expected))


def max_ari(gold: Labeling, tree: LinkageTree, instance_ids: Sequence[str],
            c_min: int = 2, c_max: int = 9) -> tuple[float, int]:
    """Best ARI over cuts of an existing tree, and the cut that achieves it
    (ties resolve to the smaller cluster count)."""
    n = tree.n_leaves
    if n != len(instance_ids):
        raise MetricError("instance ids do not match tree leaves")
    feasible = list(range(c_min, min(c_max, n - 1) + 1)) or [min(c_min, n)]
    best_score, best_c = -math.inf, feasible[0]
    for c in feasible:
        labels = tree.cut(c)
        pred = {iid: int(l) for iid, l in zip(instance_ids, labels)}
        score = ari(gold, pred)
        if score > best_score:
            best_score, best_c = score, c
    return best_score, best_c


def _entropy(counts) -> float:
    total = sum(counts)
    h = 0.0
    for c in counts:
        if c > 0:
            h -= (c / total) * math.log(c / total)
    return h


def v_measure(gold: Labeling, pred: Labeling) -> float:
    """Harmonic mean of homogeneity and completeness; a ratio with zero
    denominator entropy is defined as 1."""
    table = ContingencyTable.from_labelings(gold, pred)
    if table.n < 2:
        raise MetricError("V-measure needs at least 2 instances")
    h_gold = _entropy(table.row_marginals.values())
    h_pred = _entropy(table.col_marginals.values())
    # conditional entropies from the joint table
    h_gold_given_pred = 0.0
    h_pred_given_gold = 0.0
    n = table.n
    for (g, p), c in table.counts.items():
        h_gold_given_pred -= (c / n) * math.log(c / table.col_marginals[p])
        h_pred_given_gold -= (c / n) * math.log(c / table.row_marginals[g])
    homogeneity = 1.0 if h_gold == 0.0 else 1.0 - h_gold_given_pred / h_gold
    completeness = 1.0 if h_pred == 0.0 else 1.0 - h_pred_given_gold / h_pred
    if homogeneity + completeness == 0.0:
        return 0.0
    return 2.0 * homogeneity * completeness / (homogeneity + completeness)


def paired_fscore(gold: Labeling, pred: Labeling) -> float:
    """F-score over same-cluster instance pairs (precision on predicted
    pairs, recall on gold pairs)."""
    table = ContingencyTable.from_labelings(gold, pred)
    if table.n < 2:
        raise MetricError("paired F-score needs at least 2 instances")
    agree = sum(_pairs(v) for v in table.counts.values())
    pred_pairs = sum(_pairs(v) for v in table.col_marginals.values())
    gold_pairs = sum(_pairs(v) for v in table.row_marginals.values())
    precision = agree / pred_pairs if pred_pairs else 0.0
    recall = agree / gold_pairs if gold_pairs else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def aggregate(per_word: Mapping[str, Mapping[str, float]],
              instance_counts: Mapping[str, int]) -> dict:
    """Per-metric instance-count-weighted mean and unweighted macro mean.

    Neither convention is obviously right, so the report carries both,
    labeled explicitly.
    """
    if not per_word:
        raise MetricError("nothing to aggregate")
    metric_names = sorted({m for scores in per_word.values() for m in scores})
    weighted: dict[str, float] = {}
    macro: dict[str, float] = {}
    for metric in metric_names:
        words = [w for w in per_word if metric in per_word[w]]
        total_weight = sum(instance_counts[w] for w in words)
        weighted[metric] = sum(
            per_word[w][metric] * instance_counts[w] for w in words
        ) / total_weight
        macro[metric] = sum(per_word[w][metric] for w in words) / len(words)
    return {
        "per_word": {w: dict(scores) for w, scores in sorted(per_word.items())},
        "weighted": weighted,
        "macro": macro,
    }
