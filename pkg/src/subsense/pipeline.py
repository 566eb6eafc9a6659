"""End-to-end orchestration: generate -> inject -> lemmatize -> vectorize ->
cluster -> evaluate, with a run manifest for reproducibility."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from subsense import __version__
from subsense.cluster import hard_to_soft, save_clusterings, select_clustering
from subsense.data import Dataset, Instance, load_dataset
from subsense.gateway import CacheBackend, MockBackend, SocketBackend
from subsense.generate import baseline_generate, generate_for_template, target_slot_template
from subsense.inject import (
    EmbeddingTable,
    embs_rerank,
    instantiate_pattern,
    load_pattern_catalog,
    resolve_pattern,
    sdp_combine,
)
from subsense.metrics import aggregate, ari, max_ari, paired_fscore, v_measure
from subsense.substitutes import SubstituteSet, dump_substitute_sets
from subsense.vectorize import (
    ExternalLemmaProvider,
    IdentityLemmaProvider,
    TableLemmaProvider,
    build_tfidf,
    lemmatize_set,
)

log = logging.getLogger(__name__)

GENERATORS = ("concat", "wcm", "baseline")
INJECTIONS = ("sdp", "sdp_fixed_language", "embs", "none")


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    dataset: str = ""
    dataset_format: str = "canonical_jsonl"
    generator: str = "concat"
    injection: str = "sdp"
    pattern: str = "or even"
    pattern_language: Optional[str] = None  # forces one language's template
    pattern_catalog: Optional[str] = None
    k: Optional[int] = None  # default 150 for SDP, 20 for +embs
    mask_counts: list[int] = field(default_factory=lambda: [1, 2, 3])
    max_subwords: int = 3
    c_min: int = 2
    c_max: int = 9
    temperature: float = 0.1
    sdp_floor: float = 1e-5
    seed: int = 0
    backend: dict = field(default_factory=dict)
    lemma_provider: dict = field(default_factory=lambda: {"type": "identity"})
    embeddings: Optional[str] = None
    embeddings_oov_similarity: float = 0.0
    workers: int = 1

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ConfigError(f"unknown generator {self.generator!r}")
        if self.injection not in INJECTIONS:
            raise ConfigError(f"unknown injection {self.injection!r}")
        if self.generator == "baseline" and self.injection != "none":
            raise ConfigError("the baseline generator handles its own pattern; "
                              "set injection to 'none'")
        if self.injection == "embs" and not self.embeddings:
            raise ConfigError("injection 'embs' requires an embedding table")
        if self.injection == "sdp_fixed_language" and not self.pattern_language:
            raise ConfigError("injection 'sdp_fixed_language' requires "
                              "pattern_language")
        if self.k is None:
            self.k = 20 if self.injection == "embs" else 150
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not (2 <= self.c_min <= self.c_max):
            raise ConfigError("cluster range must satisfy 2 <= c_min <= c_max")
        if self.temperature <= 0:
            raise ConfigError("temperature must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as f:
            return cls(**json.load(f))

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, sort_keys=True, indent=2)


def make_backend(spec: dict):
    kind = spec.get("type")
    if kind == "mock":
        return MockBackend.from_config(spec["config"])
    if kind == "cache":
        inner = make_backend(spec["inner"]) if "inner" in spec else None
        return CacheBackend(spec["path"], inner=inner)
    if kind == "socket":
        return SocketBackend(spec.get("host", "127.0.0.1"), int(spec["port"]))
    raise ConfigError(f"unknown backend spec {spec!r}")


def make_lemma_provider(spec: dict):
    kind = spec.get("type", "identity")
    if kind == "identity":
        return IdentityLemmaProvider()
    if kind == "table":
        return TableLemmaProvider.load(spec["path"])
    if kind == "external":
        return ExternalLemmaProvider(spec["command"])
    raise ConfigError(f"unknown lemma provider spec {spec!r}")


def generate_substitutes(dataset: Dataset, cfg: RunConfig, gw,
                         emb: Optional[EmbeddingTable] = None) -> list[SubstituteSet]:
    """Per-instance substitute generation plus target injection, preserving
    dataset order regardless of worker count."""
    catalog = load_pattern_catalog(cfg.pattern_catalog) if cfg.pattern_catalog else None

    def one(instance: Instance) -> SubstituteSet:
        if cfg.generator == "baseline":
            pattern = resolve_pattern(cfg.pattern, instance.language, catalog,
                                      cfg.pattern_language)
            return baseline_generate(instance, pattern, cfg.k, gw)
        if cfg.injection in ("sdp", "sdp_fixed_language"):
            fixed = (cfg.pattern_language
                     if cfg.injection == "sdp_fixed_language" else None)
            pattern = resolve_pattern(cfg.pattern, instance.language, catalog, fixed)
            sides = []
            for side in ("target_first", "mask_first"):
                template = instantiate_pattern(pattern, instance, side)
                sides.append(generate_for_template(
                    template, cfg.generator, cfg.k, gw,
                    mask_counts=cfg.mask_counts, max_subwords=cfg.max_subwords,
                    instance_id=instance.instance_id,
                ))
            return sdp_combine(sides[0], sides[1], floor=cfg.sdp_floor, k=cfg.k)
        template = target_slot_template(instance)
        if cfg.injection == "embs":
            assert emb is not None
            cands = generate_for_template(
                template, cfg.generator, cfg.k, gw,
                mask_counts=cfg.mask_counts, max_subwords=cfg.max_subwords,
                instance_id=instance.instance_id, keep=3 * cfg.k,
            )
            return embs_rerank(cands, instance.target_lemma, emb,
                               temperature=cfg.temperature, k=cfg.k)
        return generate_for_template(
            template, cfg.generator, cfg.k, gw,
            mask_counts=cfg.mask_counts, max_subwords=cfg.max_subwords,
            instance_id=instance.instance_id,
        )

    if cfg.workers == 1:
        return [one(i) for i in dataset.instances]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(one, dataset.instances))


def cluster_dataset(dataset: Dataset, lemmatized: dict[str, SubstituteSet],
                    cfg: RunConfig):
    """Per-word TF-IDF + clustering. Returns (clusterings, trees, matrices)."""
    clusterings, trees, matrices = [], {}, {}
    for word, insts in dataset.words.items():
        sets = [lemmatized[i.instance_id] for i in insts]
        if len(sets) < 2 or all(not s.candidates for s in sets):
            log.warning("skipping word %r: not clusterable", word)
            continue
        matrix = build_tfidf(sets)
        clustering, tree = select_clustering(matrix, cfg.c_min, cfg.c_max, word=word)
        clusterings.append(hard_to_soft(clustering))
        trees[word] = tree
        matrices[word] = matrix
    return clusterings, trees, matrices


def evaluate_clusterings(dataset: Dataset, clusterings, trees=None,
                         c_min: int = 2, c_max: int = 9) -> dict:
    """Score each word's clustering against gold senses; includes the ARI
    upper bound over tree cuts when trees are available."""
    by_word = {cl.word: cl for cl in clusterings}
    per_word: dict[str, dict[str, float]] = {}
    counts: dict[str, int] = {}
    for word, insts in dataset.words.items():
        cl = by_word.get(word)
        if cl is None:
            continue
        gold = {i.instance_id: i.gold_sense for i in insts
                if i.gold_sense is not None}
        if len(gold) != len(insts):
            log.warning("word %r lacks gold senses; skipped in evaluation", word)
            continue
        pred = {iid: cl.assignments[iid] for iid in gold}
        scores = {
            "ari": ari(gold, pred),
            "v_measure": v_measure(gold, pred),
            "paired_fscore": paired_fscore(gold, pred),
        }
        if trees and word in trees:
            ids = [i.instance_id for i in insts]
            best, best_c = max_ari(gold, trees[word], ids, c_min, c_max)
            scores["max_ari"] = best
            scores["max_ari_c"] = float(best_c)
        per_word[word] = scores
        counts[word] = len(insts)
    if not per_word:
        raise StageError("evaluate", ValueError("no word had gold senses"))
    return aggregate(per_word, counts)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def run_pipeline(cfg: RunConfig, run_dir) -> dict:
    """Execute every stage, writing artifacts and a manifest to ``run_dir``.

    Stage failures raise StageError; artifacts written so far are retained.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    def stage(name, fn):
        try:
            return fn()
        except StageError:
            raise
        except Exception as e:
            raise StageError(name, e) from e

    emb = stage("load-embeddings", lambda: (
        EmbeddingTable.load(cfg.embeddings,
                            oov_similarity=cfg.embeddings_oov_similarity)
        if cfg.embeddings else None))
    gw = stage("backend", lambda: make_backend(cfg.backend))
    dataset = stage("load-dataset",
                    lambda: load_dataset(cfg.dataset, cfg.dataset_format))

    sets = stage("generate", lambda: generate_substitutes(dataset, cfg, gw, emb))
    dump_substitute_sets(sets, run_dir / "substitutes.jsonl",
                         generator=cfg.generator,
                         params={"injection": cfg.injection, "k": cfg.k})

    provider = stage("lemma-provider",
                     lambda: make_lemma_provider(cfg.lemma_provider))
    lang = {i.instance_id: i.language for i in dataset.instances}
    lemmatized_list = stage("lemmatize", lambda: [
        lemmatize_set(s, lang.get(s.instance_id, "en"), provider) for s in sets
    ])
    dump_substitute_sets(lemmatized_list, run_dir / "lemmatized.jsonl",
                         generator=cfg.generator, params={"stage": "lemmatized"})
    lemmatized = {s.instance_id: s for s in lemmatized_list}

    clusterings, trees, _ = stage(
        "cluster", lambda: cluster_dataset(dataset, lemmatized, cfg))
    save_clusterings(clusterings, run_dir / "clusters.jsonl")

    report = {"dataset": dataset.name, "config": json.loads(cfg.to_json())}
    has_gold = all(i.gold_sense is not None for i in dataset.instances)
    if has_gold:
        report.update(stage("evaluate", lambda: evaluate_clusterings(
            dataset, clusterings, trees, cfg.c_min, cfg.c_max)))
    with open(run_dir / "report.json", "w", encoding="utf-8") as f:
        json.dump(report, f, ensure_ascii=False, sort_keys=True, indent=2)
        f.write("\n")

    manifest = {
        "version": __version__,
        "config": json.loads(cfg.to_json()),
        "config_sha256": hashlib.sha256(cfg.to_json().encode()).hexdigest(),
        "input_sha256": {"dataset": _sha256(cfg.dataset)},
    }
    if cfg.backend.get("type") == "mock":
        manifest["input_sha256"]["mock_config"] = _sha256(cfg.backend["config"])
    with open(run_dir / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, ensure_ascii=False, sort_keys=True, indent=2)
        f.write("\n")
    return report


def format_report_table(report: dict) -> str:
    """Human-readable per-word and aggregate metric table."""
    lines = []
    per_word = report.get("per_word", {})
    metrics = sorted({m for s in per_word.values() for m in s})
    if per_word:
        header = f"{'word':<20}" + "".join(f"{m:>15}" for m in metrics)
        lines.append(header)
        lines.append("-" * len(header))
        for word, scores in per_word.items():
            lines.append(f"{word:<20}" + "".join(
                f"{scores.get(m, float('nan')):>15.4f}" for m in metrics))
        lines.append("-" * len(header))
        for label in ("weighted", "macro"):
            agg = report.get(label, {})
            lines.append(f"{label:<20}" + "".join(
                f"{agg.get(m, float('nan')):>15.4f}" for m in metrics))
    return "\n".join(lines)
