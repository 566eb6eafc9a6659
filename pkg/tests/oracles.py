"""Independent brute-force reference implementations used only by tests.

These deliberately avoid the contingency-table code paths of the library:
ARI is computed from the pair-confusion counts, V-measure from explicit
conditional label groupings, and the paired F-score from materialized
same-cluster pair sets.
"""

import math
from fractions import Fraction
from itertools import combinations

import numpy as np


def set_partitions(n):
    """All set partitions of range(n) as label tuples (restricted growth)."""

    def rec(prefix, max_label):
        i = len(prefix)
        if i == n:
            yield tuple(prefix)
            return
        for label in range(max_label + 2):
            prefix.append(label)
            yield from rec(prefix, max(max_label, label))
            prefix.pop()

    if n == 0:
        return
    yield from rec([0], 0)


def ari_pair_counting(gold, pred):
    """ARI from the 2x2 pair-confusion matrix, exact rationals."""
    n = len(gold)
    n11 = n10 = n01 = n00 = 0
    for i, j in combinations(range(n), 2):
        same_g = gold[i] == gold[j]
        same_p = pred[i] == pred[j]
        if same_g and same_p:
            n11 += 1
        elif same_g:
            n10 += 1
        elif same_p:
            n01 += 1
        else:
            n00 += 1
    denom = (n11 + n10) * (n10 + n00) + (n11 + n01) * (n01 + n00)
    if denom == 0:
        return 1.0 if n10 == n01 == 0 else 0.0
    return float(Fraction(2 * (n11 * n00 - n10 * n01), denom))


def v_measure_grouping(gold, pred):
    """V-measure via explicit conditional groupings."""
    n = len(gold)

    def entropy(labels):
        h = 0.0
        for lab in set(labels):
            p = labels.count(lab) / len(labels)
            h -= p * math.log(p)
        return h

    def conditional(of, given):
        h = 0.0
        for g in set(given):
            idx = [i for i in range(n) if given[i] == g]
            sub = [of[i] for i in idx]
            h += (len(idx) / n) * entropy(sub)
        return h

    h_gold, h_pred = entropy(list(gold)), entropy(list(pred))
    hom = 1.0 if h_gold == 0.0 else 1.0 - conditional(list(gold), list(pred)) / h_gold
    com = 1.0 if h_pred == 0.0 else 1.0 - conditional(list(pred), list(gold)) / h_pred
    if hom + com == 0.0:
        return 0.0
    return 2.0 * hom * com / (hom + com)


def paired_fscore_pairsets(gold, pred):
    """Paired F-score via materialized same-cluster pair sets."""
    n = len(gold)

    def pair_set(labels):
        return {frozenset((i, j)) for i, j in combinations(range(n), 2)
                if labels[i] == labels[j]}

    gp, pp = pair_set(gold), pair_set(pred)
    if not pp or not gp:
        return 0.0
    precision = len(gp & pp) / len(pp)
    recall = len(gp & pp) / len(gp)
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def naive_upgma(base):
    """O(n^3) reference: average distances recomputed from the original
    matrix at every step. Returns merge triples matching LinkageTree.merges."""
    n = base.shape[0]
    clusters = {i: [i] for i in range(n)}
    merges = []
    next_id = n
    while len(clusters) > 1:
        best = None
        for a in clusters:
            for b in clusters:
                if a >= b:
                    continue
                d = np.mean([base[i, j] for i in clusters[a] for j in clusters[b]])
                la, lb = min(clusters[a]), min(clusters[b])
                first, second = (a, b) if la < lb else (b, a)
                key = (d, min(la, lb), max(la, lb), first, second)
                if best is None or key < best:
                    best = key
        d, _, _, a, b = best
        merges.append((a, b, d))
        clusters[next_id] = clusters.pop(a) + clusters.pop(b)
        next_id += 1
    return merges


def ch_bruteforce(x, labels):
    """Independent Calinski-Harabasz dispersion computation, plain loops."""
    n, d = x.shape
    overall = [sum(x[i][j] for i in range(n)) / n for j in range(d)]
    between = 0.0
    within = 0.0
    for cl in sorted(set(labels)):
        members = [i for i in range(n) if labels[i] == cl]
        centroid = [sum(x[i][j] for i in members) / len(members) for j in range(d)]
        between += len(members) * sum((centroid[j] - overall[j]) ** 2 for j in range(d))
        for i in members:
            within += sum((x[i][j] - centroid[j]) ** 2 for j in range(d))
    c = len(set(labels))
    if within == 0.0:
        return math.inf
    return (between / (c - 1)) / (within / (n - c))
