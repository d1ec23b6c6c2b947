"""embed-export --dataset <bin> --out <sde1> [--batch 256]"""

import argparse
import sys

from .export import ExportError, ExportManifest, export_embeddings


def build_parser():
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Write ResNet-34 embeddings of a CIFAR-10 binary file as SDE1.",
    )
    parser.add_argument("--dataset", required=True, help="CIFAR-10 binary file")
    parser.add_argument("--out", required=True, help="output SDE1 path")
    parser.add_argument("--batch", type=int, default=256, help="inference batch size")
    parser.add_argument(
        "--weights",
        default=None,
        help="local resnet34 state-dict path (default: torchvision ImageNet checkpoint)",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=1,
        help="torch CPU threads; exports are bit-reproducible for a fixed value",
    )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    manifest = ExportManifest(
        dataset=args.dataset,
        out=args.out,
        weights=args.weights,
        batch=args.batch,
        threads=args.threads,
    )
    try:
        out = export_embeddings(manifest)
    except ExportError as err:
        print(f"embed-export: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"embed-export: {err}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
