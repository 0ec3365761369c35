"""Command line: fine-tune the checkpoints, then serve them.

    textcf-service finetune --dataset data.jsonl --base bases/ --out ckpt/
    textcf-service serve --config ckpt/service.json
"""

from __future__ import annotations

import argparse
from pathlib import Path

from textcf_service.config import ServiceConfig, load_jsonl_dataset


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="textcf-service")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare-base", help="build small offline base checkpoints")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("finetune", help="fine-tune every scorer checkpoint")
    p.add_argument("--dataset", required=True)
    p.add_argument("--base", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("serve", help="serve the wire protocol")
    p.add_argument("--config", required=True)
    p.add_argument("--host")
    p.add_argument("--port", type=int)

    args = parser.parse_args(argv)

    if args.command == "prepare-base":
        from textcf_service.tiny import build_base_checkpoints

        examples = load_jsonl_dataset(args.dataset)
        paths = build_base_checkpoints(
            [text for text, _ in examples], args.out, seed=args.seed
        )
        print(f"base checkpoints written under {args.out}: {sorted(paths)}")
        return 0

    if args.command == "finetune":
        from textcf_service.config import FinetuneParams
        from textcf_service.finetune import finetune_all

        examples = load_jsonl_dataset(args.dataset)
        config = finetune_all(
            examples, args.base, args.out, FinetuneParams(seed=args.seed)
        )
        print(f"checkpoints + manifests under {args.out}; config at {Path(args.out) / 'service.json'}")
        print(f"classes: {list(config.labels)}")
        return 0

    if args.command == "serve":
        from textcf_service.app import serve

        config = ServiceConfig.from_json(args.config)
        if args.host:
            config.host = args.host
        if args.port:
            config.port = args.port
        serve(config)
        return 0

    raise SystemExit(f"unknown command {args.command!r}")


if __name__ == "__main__":
    raise SystemExit(main())
