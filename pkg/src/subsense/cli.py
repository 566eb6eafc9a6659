"""Command-line entry point.

Exit codes: 0 ok, 1 usage error, 2 data error, 3 backend error.
"""

from __future__ import annotations

import argparse
import json
import sys

from subsense.analysis import (
    TaxonomyGraph,
    discriminative_substitutes,
    relation_distribution,
    substitute_language_share,
)
from subsense.cluster import save_clusterings
from subsense.data import DataError, load_dataset
from subsense.gateway import GatewayError, MockBackend
from subsense.metrics import MetricError
from subsense.pipeline import (
    ConfigError,
    RunConfig,
    StageError,
    cluster_dataset,
    evaluate_clusterings,
    format_report_table,
    generate_substitutes,
    make_backend,
    make_lemma_provider,
    run_pipeline,
)
from subsense.substitutes import dump_substitute_sets, load_substitute_sets
from subsense.vectorize import lemmatize_set
from subsense.wcm import wcm_prep_corpus

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BACKEND = 0, 1, 2, 3


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    for key in ("dataset", "generator", "injection", "pattern", "k", "workers"):
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            setattr(cfg, key, value)
    cfg.__post_init__()  # re-validate after overrides
    return cfg


def cmd_run(args) -> int:
    cfg = _load_config(args)
    report = run_pipeline(cfg, args.run_dir)
    table = format_report_table(report)
    if table:
        print(table)
    print(f"artifacts written to {args.run_dir}")
    return EXIT_OK


def cmd_substitute(args) -> int:
    cfg = _load_config(args)
    dataset = load_dataset(cfg.dataset, cfg.dataset_format)
    gw = make_backend(cfg.backend)
    sets = generate_substitutes(dataset, cfg, gw)
    dump_substitute_sets(sets, args.output, generator=cfg.generator,
                         params={"injection": cfg.injection, "k": cfg.k})
    print(f"wrote {len(sets)} substitute sets to {args.output}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    cfg = _load_config(args)
    dataset = load_dataset(cfg.dataset, cfg.dataset_format)
    sets = load_substitute_sets(args.substitutes)
    provider = make_lemma_provider(cfg.lemma_provider)
    lang = {i.instance_id: i.language for i in dataset.instances}
    lemmatized = {
        s.instance_id: lemmatize_set(s, lang.get(s.instance_id, "en"), provider)
        for s in sets
    }
    clusterings, _, _ = cluster_dataset(dataset, lemmatized, cfg)
    save_clusterings(clusterings, args.output)
    print(f"wrote {len(clusterings)} word clusterings to {args.output}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from subsense.cluster import load_clusterings

    cfg = _load_config(args)
    dataset = load_dataset(cfg.dataset, cfg.dataset_format)
    clusterings = load_clusterings(args.clusters)
    report = {"dataset": dataset.name}
    report.update(evaluate_clusterings(dataset, clusterings,
                                       c_min=cfg.c_min, c_max=cfg.c_max))
    print(format_report_table(report))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            json.dump(report, f, ensure_ascii=False, sort_keys=True, indent=2)
            f.write("\n")
    return EXIT_OK


def cmd_wcm_prep(args) -> int:
    with open(args.input, encoding="utf-8") as inp, \
            open(args.output, "w", encoding="utf-8") as out:
        stats = wcm_prep_corpus(inp, out, mask_rate=args.mask_rate, seed=args.seed)
    print(json.dumps(stats.as_dict()))
    return EXIT_OK


def cmd_analyze(args) -> int:
    sets = load_substitute_sets(args.substitutes)
    if args.mode == "language-share":
        share = substitute_language_share(sets, args.alphabet)
        print(json.dumps({"alphabet": args.alphabet, "share": share}))
        return EXIT_OK
    if args.mode == "discriminative":
        dataset = load_dataset(args.dataset)
        gold = {i.instance_id: i.gold_sense for i in dataset.instances
                if i.gold_sense is not None}
        ranked = discriminative_substitutes(sets, gold, top_n=args.top_n)
        print(json.dumps(ranked, ensure_ascii=False, indent=2, sort_keys=True))
        return EXIT_OK
    if args.mode == "relations":
        tax = TaxonomyGraph.load(args.taxonomy)
        dataset = load_dataset(args.dataset)
        target = {i.instance_id: i.target_lemma for i in dataset.instances}
        pairs = []
        for s in sets:
            lemma = target.get(s.instance_id)
            if lemma is None:
                continue
            for rank, c in enumerate(s.candidates):
                pairs.append((lemma, c.word, rank < 20))
        print(json.dumps(relation_distribution(pairs, tax), indent=2))
        return EXIT_OK
    raise ConfigError(f"unknown analyze mode {args.mode!r}")


def cmd_serve_mock(args) -> int:
    from subsense.gateway import ProtocolServer

    backend = MockBackend.from_config(args.config)
    server = ProtocolServer(backend, host=args.host, port=args.port)
    host, port = server.address
    print(f"serving mock backend on {host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subsense",
        description="Substitution-based word sense induction pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_opts(p, dataset_required=False):
        p.add_argument("--config", help="run config JSON file")
        p.add_argument("--dataset", required=dataset_required)
        p.add_argument("--generator", choices=("concat", "wcm", "baseline"))
        p.add_argument("--injection",
                       choices=("sdp", "sdp_fixed_language", "embs", "none"))
        p.add_argument("--pattern")
        p.add_argument("--k", type=int)
        p.add_argument("--workers", type=int)

    p = sub.add_parser("run", help="full pipeline into a run directory")
    add_config_opts(p)
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("substitute", help="generate the substitute dump")
    add_config_opts(p)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_substitute)

    p = sub.add_parser("cluster", help="cluster a substitute dump")
    add_config_opts(p)
    p.add_argument("--substitutes", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("evaluate", help="score stored clusterings against gold")
    add_config_opts(p)
    p.add_argument("--clusters", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("wcm-prep", help="prepare word-continuation masking examples")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--mask-rate", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_wcm_prep)

    p = sub.add_parser("analyze", help="substitute analysis reports")
    p.add_argument("--mode", required=True,
                   choices=("language-share", "discriminative", "relations"))
    p.add_argument("--substitutes", required=True)
    p.add_argument("--dataset")
    p.add_argument("--taxonomy")
    p.add_argument("--alphabet", default="latin")
    p.add_argument("--top-n", type=int, default=10)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve-mock", help="serve the mock backend over the wire protocol")
    p.add_argument("--config", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0)
    p.set_defaults(func=cmd_serve_mock)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, MetricError, FileNotFoundError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except GatewayError as e:
        print(f"backend error: {e}", file=sys.stderr)
        return EXIT_BACKEND
    except StageError as e:
        print(str(e), file=sys.stderr)
        if isinstance(e.cause, (DataError, MetricError)):
            return EXIT_DATA
        if isinstance(e.cause, GatewayError):
            return EXIT_BACKEND
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
