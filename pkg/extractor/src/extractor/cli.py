"""CLI: extract --model ... --layer ... --in DIR --out DIR --split ... --size ..."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import SPLITS, ExtractorConfig, ExtractorError, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract-embeddings",
        description="Dump a named layer's activations for a directory of volumes",
    )
    parser.add_argument("--model", required=True,
                        help="registered constructor name or checkpoint path")
    parser.add_argument("--layer", required=True,
                        help="dotted path of the module to hook, e.g. bottleneck")
    parser.add_argument("--in", dest="input_dir", required=True,
                        help="directory of preprocessed 3-D .npy volumes")
    parser.add_argument("--out", dest="output_dir", required=True)
    parser.add_argument("--split", choices=SPLITS, default="train")
    parser.add_argument("--size", default="256,128,128",
                        help="D,H,W the volumes are resized to")
    return parser


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        size = tuple(int(v) for v in ns.size.split(","))
        config = ExtractorConfig(
            model_source=ns.model,
            layer_name=ns.layer,
            input_dir=Path(ns.input_dir),
            output_dir=Path(ns.output_dir),
            input_size=size,
            split=ns.split,
        )
        rows = extract(config)
    except (ExtractorError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"extracted {len(rows)} embeddings to {ns.output_dir}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
