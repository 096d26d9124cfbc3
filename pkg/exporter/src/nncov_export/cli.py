"""The nncov-export command."""

from __future__ import annotations

import argparse
import json
import sys

from .export import ExportError, ExportSpec, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nncov-export",
        description="Dump per-layer activations from a PyTorch model into a trace directory",
    )
    parser.add_argument("command", choices=["export"])
    parser.add_argument("--model", required=True,
                        help="demo-mlp, demo-conv, or a torchvision model name")
    parser.add_argument("--layers", default="post-activation",
                        help='"post-activation" or comma-separated module names')
    parser.add_argument("--n", type=int, default=16, help="number of inputs")
    parser.add_argument("--out", required=True, help="trace directory to create")
    parser.add_argument("--reduce", choices=["mean", "max"], default="mean",
                        help="spatial reduction for feature maps")
    parser.add_argument("--batch", type=int, default=64)
    parser.add_argument("--input-shape", default="3,32,32",
                        help="comma-separated input shape (without batch dim)")
    parser.add_argument("--dataset", default="random",
                        help='"random" or a path to an .npz with inputs[, labels]')
    parser.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = ExportSpec(
        model=args.model,
        out=args.out,
        layers=args.layers,
        n=args.n,
        batch=args.batch,
        reduce=args.reduce,
        input_shape=tuple(int(v) for v in args.input_shape.split(",")),
        dataset=args.dataset,
        seed=args.seed,
    )
    try:
        root = export(spec)
    except (ExportError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    print(f"wrote trace to {root}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
