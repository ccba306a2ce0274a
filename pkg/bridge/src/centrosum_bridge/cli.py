"""Command line for the encoding bridge."""

from __future__ import annotations

import argparse
import sys

from .encode import BridgeConfig, BridgeError, encode_corpus


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="centrosum-bridge",
        description="Produce summarizer corpus files from raw or pre-split text.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    encode = subparsers.add_parser("encode", help="encode a corpus")
    encode.add_argument("--input", required=True, help="input clusters (JSON lines)")
    encode.add_argument("--output", required=True,
                        help="output prefix; writes <prefix>.jsonl and <prefix>.cemb")
    encode.add_argument("--encoder", default="mock:512",
                        help="mock:<d> or a pretrained sentence-encoder id "
                             "(default mock:512)")
    encode.add_argument("--lang", default=None, help="default language hint")
    encode.add_argument("--batch-size", type=int, default=32)
    encode.add_argument("--seed", type=int, default=0, help="mock encoder seed")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = BridgeConfig(
        encoder=args.encoder,
        input_path=args.input,
        output_prefix=args.output,
        batch_size=args.batch_size,
        language=args.lang,
        seed=args.seed,
    )
    try:
        meta_path, store_path = encode_corpus(config)
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {meta_path} and {store_path}")
    return 0


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
