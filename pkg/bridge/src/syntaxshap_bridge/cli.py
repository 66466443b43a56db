"""Bridge entry points: ``serve`` the scoring API, ``parse`` to CoNLL-U."""

from __future__ import annotations

import argparse
import sys

from .config import TINY_MODEL, ServerConfig
from .errors import BridgeError
from .parse import SpacyParser, export_parses, load_jsonl


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    config = ServerConfig(
        model=args.model,
        port=args.port,
        device=args.device,
        seed=args.seed,
        revision=args.revision,
        max_tokens=args.max_tokens,
    )
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=config.port, log_level="info")
    return 0


def cmd_parse(args: argparse.Namespace) -> int:
    parser = SpacyParser(model=args.parser_model)
    records = load_jsonl(args.infile)
    stats = export_parses(records, args.out, parser, rejects_path=args.rejects)
    print(
        f"wrote {stats.written} block(s), rejected {stats.rejected}, "
        f"skipped {stats.skipped_empty} empty line(s) -> {args.out}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="syntaxshap-bridge")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="serve the scoring API")
    serve.add_argument("--model", default=TINY_MODEL)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8731)
    serve.add_argument("--device", default="cpu")
    serve.add_argument("--seed", type=int, default=0)
    serve.add_argument("--revision", default=None)
    serve.add_argument("--max-tokens", dest="max_tokens", type=int, default=15)
    serve.set_defaults(func=cmd_serve)

    parse = sub.add_parser("parse", help="export dependency parses as CoNLL-U")
    parse.add_argument("--in", dest="infile", required=True)
    parse.add_argument("--out", required=True)
    parse.add_argument("--rejects", default=None)
    parse.add_argument("--parser-model", dest="parser_model", default="en_core_web_sm")
    parse.set_defaults(func=cmd_parse)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
