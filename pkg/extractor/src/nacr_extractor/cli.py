"""CLI: mirror of the trainer's `features` command, plus --codec and --backend."""

from __future__ import annotations

import argparse
import sys

from nacr_extractor.codecs import CODECS, get_codec
from nacr_extractor.extract import BACKENDS, extract_nacr
from nacr_extractor.pretrained import CheckpointUnavailableError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nacr-extract",
        description="Extract pooled neural-audio-codec vectors to an .fvec file",
    )
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--codec", choices=sorted(CODECS), required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument(
        "--backend", choices=BACKENDS, default="pretrained",
        help="surrogate replaces the frozen encoder with a deterministic "
             "stand-in for pipeline testing",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = get_codec(args.codec)
    try:
        count, dim = extract_nacr(args.manifest, spec, args.out,
                                  backend=args.backend)
    except CheckpointUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {count} records of dimension {dim} to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
