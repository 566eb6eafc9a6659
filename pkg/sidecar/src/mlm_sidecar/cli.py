"""Sidecar command line: serve a checkpoint, tokenize a corpus, finetune."""

from __future__ import annotations

import argparse
import json
import sys

from mlm_sidecar.finetune import FinetuneConfig, wcm_finetune
from mlm_sidecar.model import MlmModel, SidecarConfig
from mlm_sidecar.server import serve


def cmd_serve(args) -> int:
    cfg = (SidecarConfig.load(args.config) if args.config
           else SidecarConfig(checkpoint=args.checkpoint))
    if args.checkpoint:
        cfg.checkpoint = args.checkpoint
    if args.host:
        cfg.host = args.host
    if args.port is not None:
        cfg.port = args.port
    model = MlmModel(cfg.checkpoint, device=cfg.device, max_length=cfg.max_length)
    server = serve(model, cfg.host, cfg.port)
    host, port = server.address
    print(f"serving {cfg.checkpoint} on {host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_tokenize(args) -> int:
    """Raw text lines -> tokenized JSONL consumable by wcm corpus prep."""
    model = MlmModel(args.checkpoint)
    with open(args.input, encoding="utf-8") as inp, \
            open(args.output, "w", encoding="utf-8") as out:
        n = 0
        for line in inp:
            line = line.strip()
            if not line:
                continue
            tokens = model.tokenize_line(line)
            out.write(json.dumps(
                {"tokens": [[t, b] for t, b in tokens]},
                ensure_ascii=False, separators=(",", ":")) + "\n")
            n += 1
    print(f"tokenized {n} lines to {args.output}")
    return 0


def cmd_finetune(args) -> int:
    cfg = FinetuneConfig.load(args.config) if args.config else FinetuneConfig()
    if args.epochs is not None:
        cfg.epochs = args.epochs
    losses = wcm_finetune(args.examples, args.checkpoint, args.output, cfg)
    print(json.dumps({"epoch_losses": losses, "checkpoint": args.output}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlm-sidecar")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="serve a checkpoint over the wire protocol")
    p.add_argument("--checkpoint")
    p.add_argument("--config", help="SidecarConfig JSON file")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("tokenize", help="tokenize raw text for corpus prep")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("finetune", help="finetune on a WCM corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--examples", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--config", help="FinetuneConfig JSON file")
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_finetune)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
