"""CLI: posterior-export export --checkpoint P --data D --n 1000 --seed S
--out DIR --convention logvar"""

from __future__ import annotations

import argparse
import sys

from .encoders import EncoderError
from .export import CONVENTIONS, ExportJob, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="posterior-export",
        description="Export encoder posteriors to the infocomp posterior-set format.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="run an encoder over a dataset sample")
    p.add_argument("--checkpoint", required=True, help=".npz checkpoint or module:function")
    p.add_argument("--data", required=True, help=".npy/.npz dataset array")
    p.add_argument("--n", type=int, default=1000, help="sample size (default 1000)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--convention", choices=CONVENTIONS, default="logvar")
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--space-id", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(
            checkpoint=args.checkpoint,
            data=args.data,
            out=args.out,
            sample_size=args.n,
            seed=args.seed,
            convention=args.convention,
            batch_size=args.batch_size,
            space_id=args.space_id,
        )
        out = export(job)
    except (EncoderError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote posterior set (n={job.sample_size}) to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
