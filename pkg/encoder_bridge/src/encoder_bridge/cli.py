"""Command line front end.

One subcommand for now:

    encoder-bridge extract --dataset cifar10 --split train \
        --backbone vit_large_patch14_dinov2.lvd142m \
        --out exports/cifar10-train --data-root /data

The export directory it writes (manifest.json + one segment) is ready
for `knnstore ingest`.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .backbones import REGISTRY
from .datasets import REGISTRY as DATASETS, SPLITS
from .errors import BridgeError
from .extract import ExtractionJob, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="encoder-bridge",
        description="extract frozen-backbone image embeddings into "
                    "ingestible EMBV1 exports")
    sub = parser.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract",
                        help="run one dataset split through a "
                             "backbone")
    ex.add_argument("--dataset", required=True,
                    help="registered dataset name "
                         f"({', '.join(sorted(DATASETS))}) or a "
                         "path to an .npz file")
    ex.add_argument("--split", required=True, choices=SPLITS)
    ex.add_argument("--backbone", required=True,
                    help=f"one of: {', '.join(sorted(REGISTRY))}")
    ex.add_argument("--out", required=True,
                    help="output directory for manifest + segment")
    ex.add_argument("--data-root", default=None,
                    help="directory holding <dataset>/<split>.npz "
                         "for registered datasets")
    ex.add_argument("--batch-size", type=int, default=256)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(message)s",
                        stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        job = ExtractionJob(dataset=args.dataset, split=args.split,
                            backbone=args.backbone, out=args.out,
                            batch_size=args.batch_size)
        result = extract(job, data_root=args.data_root)
    except BridgeError as exc:
        field = f" (field: {exc.offending_field})" \
            if exc.offending_field else ""
        print(f"encoder-bridge: error: {exc}{field}",
              file=sys.stderr)
        return 2
    note = f", skipped {len(result.skipped_ids)}" \
        if result.skipped_ids else ""
    print(f"wrote {result.count} embeddings (dim {result.dim}) "
          f"to {result.manifest_path.parent}{note}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
