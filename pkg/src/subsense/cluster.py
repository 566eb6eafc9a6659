"""Agglomerative clustering (cosine distance, unweighted average linkage)
with Calinski-Harabasz cluster-count selection."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from subsense.data import SenseClustering
from subsense.vectorize import TfidfMatrix


@dataclass(frozen=True)
class LinkageTree:
    """Merge history of an agglomerative run.

    Leaves are 0..n-1; the merge at step i creates node n+i. Merge distances
    may contain inversions (average linkage does not guarantee monotonicity);
    cuts are defined by merge order, so cutting at c clusters always yields
    exactly c groups and successive cuts are nested.
    """

    n_leaves: int
    merges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if len(self.merges) != self.n_leaves - 1:
            raise ValueError("a tree over n leaves must have n-1 merges")

    def cut(self, c: int) -> np.ndarray:
        """Labels (first-occurrence order over leaves) for a c-cluster cut."""
        if not (1 <= c <= self.n_leaves):
            raise ValueError(f"cannot cut {self.n_leaves} leaves into {c} clusters")
        parent = list(range(2 * self.n_leaves - 1))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, (left, right, _) in enumerate(self.merges[: self.n_leaves - c]):
            new = self.n_leaves + i
            parent[find(left)] = new
            parent[find(right)] = new
        labels = np.empty(self.n_leaves, dtype=int)
        relabel: dict[int, int] = {}
        for leaf in range(self.n_leaves):
            root = find(leaf)
            if root not in relabel:
                relabel[root] = len(relabel)
            labels[leaf] = relabel[root]
        return labels


def cosine_distances(rows: np.ndarray) -> np.ndarray:
    """Pairwise 1 - cosine similarity; zero rows are at distance 1 from
    everything and 0 from themselves."""
    norms = np.linalg.norm(rows, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = rows / safe[:, None]
    dist = 1.0 - unit @ unit.T
    np.clip(dist, 0.0, 2.0, out=dist)
    np.fill_diagonal(dist, 0.0)
    return dist


def agglomerative(m: TfidfMatrix) -> LinkageTree:
    """UPGMA linkage over pairwise cosine distances of the TF-IDF rows."""
    if len(m.instance_ids) < 2:
        raise ValueError("agglomerative clustering needs at least 2 rows")
    return upgma(cosine_distances(m.values))


def upgma(base: np.ndarray) -> LinkageTree:
    """Unweighted average linkage with a deterministic tie-break: among
    equal-distance pairs, merge the pair with the smallest (min leaf index
    of one side, min leaf index of the other)."""
    n = base.shape[0]
    if n < 2:
        raise ValueError("need at least 2 points")

    dist: dict[tuple[int, int], float] = {
        (i, j): float(base[i, j]) for i in range(n) for j in range(i + 1, n)
    }
    size = {i: 1 for i in range(n)}
    min_leaf = {i: i for i in range(n)}
    active = set(range(n))
    merges: list[tuple[int, int, float]] = []

    for step in range(n - 1):
        best: Optional[tuple[float, int, int, int, int]] = None
        for (i, j), d in dist.items():
            a, b = (i, j) if min_leaf[i] < min_leaf[j] else (j, i)
            key = (d, min_leaf[a], min_leaf[b], a, b)
            if best is None or key < best:
                best = key
        assert best is not None
        d, _, _, a, b = best
        new = n + step
        merges.append((a, b, d))
        # unweighted average linkage via the Lance-Williams size-weighted update
        sa, sb = size[a], size[b]
        for k in active:
            if k in (a, b):
                continue
            dak = dist[(min(a, k), max(a, k))]
            dbk = dist[(min(b, k), max(b, k))]
            dist[(min(new, k), max(new, k))] = (sa * dak + sb * dbk) / (sa + sb)
        for k in list(active):
            dist.pop((min(a, k), max(a, k)), None)
            dist.pop((min(b, k), max(b, k)), None)
        active.discard(a)
        active.discard(b)
        active.add(new)
        size[new] = sa + sb
        min_leaf[new] = min(min_leaf[a], min_leaf[b])
    return LinkageTree(n_leaves=n, merges=tuple(merges))


def calinski_harabasz(m: TfidfMatrix, labels: np.ndarray) -> float:
    """Between/within dispersion ratio on the L2-normalized rows.

    Returns +inf when within-cluster dispersion is exactly zero.
    """
    x = m.values
    n = x.shape[0]
    labels = np.asarray(labels)
    clusters = np.unique(labels)
    c = len(clusters)
    if c < 2:
        raise ValueError("Calinski-Harabasz needs at least 2 clusters")
    if n <= c:
        raise ValueError("Calinski-Harabasz needs more points than clusters")
    mu = x.mean(axis=0)
    between = 0.0
    within = 0.0
    for cl in clusters:
        members = x[labels == cl]
        mu_j = members.mean(axis=0)
        between += len(members) * float(np.sum((mu_j - mu) ** 2))
        within += float(np.sum((members - mu_j) ** 2))
    if within == 0.0:
        return math.inf
    return (between / (c - 1)) / (within / (n - c))


def select_clustering(m: TfidfMatrix, c_min: int = 2, c_max: int = 9,
                      word: str = "") -> tuple[SenseClustering, LinkageTree]:
    """Cluster one word's instances: build the tree once, cut at each
    feasible cluster count, keep the highest Calinski-Harabasz cut
    (ties and degenerate scores resolve to the smallest count)."""
    n = len(m.instance_ids)
    tree = agglomerative(m)
    if n == 2:
        labels = tree.cut(2)
        return (
            SenseClustering(
                word=word,
                assignments={iid: int(l) for iid, l in zip(m.instance_ids, labels)},
                selected_c=2,
            ),
            tree,
        )
    feasible = [c for c in range(c_min, min(c_max, n - 1) + 1)]
    if not feasible:
        feasible = [min(c_min, n - 1)]
    ch_scores: dict[int, float] = {}
    best_c, best_score = None, -math.inf
    degenerate = False
    for c in feasible:
        labels = tree.cut(c)
        score = calinski_harabasz(m, labels)
        ch_scores[c] = score
        if math.isinf(score):
            degenerate = True
        if score > best_score:
            best_c, best_score = c, score
    if best_c is None or best_score == -math.inf:
        best_c = feasible[0]
    labels = tree.cut(best_c)
    return (
        SenseClustering(
            word=word,
            assignments={iid: int(l) for iid, l in zip(m.instance_ids, labels)},
            selected_c=best_c,
            ch_scores=ch_scores,
            degenerate=degenerate,
        ),
        tree,
    )


def hard_to_soft(h: SenseClustering) -> SenseClustering:
    """Trivial conversion: the hard cluster gets probability 1."""
    return SenseClustering(
        word=h.word,
        assignments=dict(h.assignments),
        soft={iid: {cid: 1.0} for iid, cid in h.assignments.items()},
        selected_c=h.selected_c,
        ch_scores=dict(h.ch_scores),
        degenerate=h.degenerate,
    )


def save_clusterings(clusterings, path) -> None:
    """One JSONL record per instance, with the per-word CH scores retained
    so ARI upper bounds can be recomputed without re-clustering."""
    with open(path, "w", encoding="utf-8") as f:
        for cl in clusterings:
            for iid, cid in cl.assignments.items():
                rec = {
                    "word": cl.word,
                    "instance_id": iid,
                    "cluster_id": cid,
                    "soft": ({str(c): w for c, w in cl.soft[iid].items()}
                             if cl.soft else {str(cid): 1.0}),
                    "selected_c": cl.selected_c,
                    "ch_scores": {str(c): s for c, s in cl.ch_scores.items()},
                }
                f.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")) + "\n")


def load_clusterings(path) -> list[SenseClustering]:
    by_word: dict[str, SenseClustering] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            cl = by_word.get(rec["word"])
            if cl is None:
                cl = SenseClustering(
                    word=rec["word"], assignments={}, soft={},
                    selected_c=rec.get("selected_c"),
                    ch_scores={int(c): float(s)
                               for c, s in rec.get("ch_scores", {}).items()},
                )
                by_word[rec["word"]] = cl
            cl.assignments[rec["instance_id"]] = int(rec["cluster_id"])
            cl.soft[rec["instance_id"]] = {
                int(c): float(w) for c, w in rec.get("soft", {}).items()
            }
    return list(by_word.values())
