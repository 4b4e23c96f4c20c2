"""Command-line surface for the full pipeline.

Subcommands: fingerprint, compare, compare-mc, channels, fuse, synth,
continuity, info.  Every command is deterministic given --seed and
--threads 1.  Exit codes: 0 success (including "undefined" data outcomes),
1 I/O failure, 2 validation failure, 3 numeric divergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import bench, channels, estimators, fusion, io, similarity
from .core import fingerprint_gaussian, marginal_channel
from .errors import (
    DivergenceError,
    FormatError,
    InfocompError,
    InputError,
    NumericDomainError,
    ObjectiveUndefinedError,
)

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("INFOCOMP_THREADS", "1")),
        help="worker threads for fingerprint kernels (env INFOCOMP_THREADS)",
    )
    common.add_argument("--output-dir", default=None, help="base directory for outputs")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    return common


def _resolve_out(args, value):
    path = Path(value)
    if args.output_dir and not path.is_absolute():
        path = Path(args.output_dir) / path
    return path


def _print_record(record: dict, fmt: str):
    if fmt == "json":
        print(json.dumps(io.to_jsonable(record), sort_keys=True))
    else:
        print(" ".join(f"{k}={io.format_value(v)}" for k, v in record.items()))


def _similarity_record(s: similarity.SimilarityValue) -> dict:
    return {
        "measure": s.measure,
        "value": float("nan") if s.undefined else s.value,
        "std_err": s.std_err,
        "estimator": s.estimator,
    }


def _parse_dims(spec: str, d: int):
    if spec == "all":
        return list(range(d))
    try:
        dims = [int(tok) for tok in spec.split(",") if tok.strip() != ""]
    except ValueError as err:
        raise InputError(f"cannot parse --dims {spec!r}") from err
    for dim in dims:
        if not 0 <= dim < d:
            raise InputError(f"--dims entry {dim} out of range for d={d}")
    return dims


def _cmd_fingerprint(args) -> int:
    space = io.read_posterior_set(args.input)
    if args.sample is not None:
        if args.sample < 2:
            raise InputError("--sample must be >= 2")
        if args.sample < space.n:
            rng = np.random.default_rng(args.seed)
            keep = np.sort(rng.choice(space.n, size=args.sample, replace=False))
            space = type(space)(
                space.means[keep],
                space.stddevs[keep],
                sample_ids=[space.sample_ids[i] for i in keep],
                space_id=space.space_id,
            )
    out = _resolve_out(args, args.out)
    if args.dims is None:
        fp = fingerprint_gaussian(space, threads=args.threads)
        io.write_fingerprint(fp, out, dtype=args.dtype)
        print(f"wrote fingerprint n={fp.n} to {out}")
    else:
        for dim in _parse_dims(args.dims, space.dim):
            fp = fingerprint_gaussian(marginal_channel(space, dim), threads=args.threads)
            target = out / f"ch{dim}"
            io.write_fingerprint(fp, target, dtype=args.dtype)
            print(f"wrote channel {dim} fingerprint n={fp.n} to {target}")
    return EXIT_OK


def _load_clustering(path, reference_ids=None):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if len(header) == 2 and header[1].strip() == "label":
        return io.read_hard_labels(path, reference_ids=reference_ids)
    return io.read_soft_memberships(path, reference_ids=reference_ids)


def _cmd_compare(args) -> int:
    if args.exact:
        a = _load_clustering(args.a)
        b = _load_clustering(args.b, reference_ids=a.sample_ids)
        if args.measure == "nmi":
            s = similarity.nmi_exact(a, b)
        elif args.measure == "vi":
            s = similarity.vi_exact(a, b)
        else:
            raise InputError("--exact supports only nmi and vi")
    else:
        fa = io.read_fingerprint(args.a)
        fb = io.read_fingerprint(args.b)
        if args.measure == "nmi":
            s = similarity.nmi(fa, fb)
        elif args.measure == "vi":
            s = similarity.vi(fa, fb)
        else:
            s = similarity.cka_bc(fa, fb)
    _print_record(_similarity_record(s), args.format)
    return EXIT_OK


def _cmd_compare_mc(args) -> int:
    a = io.read_posterior_set(args.a)
    b = io.read_posterior_set(args.b)
    cfg = estimators.McConfig(
        n_samples=args.n_samples, agg_fraction=args.agg_fraction, seed=args.seed
    )
    measures = ("nmi", "vi") if args.measure == "both" else (args.measure,)
    for measure in measures:
        fn = similarity.nmi_mc if measure == "nmi" else similarity.vi_mc
        _print_record(_similarity_record(fn(a, b, cfg)), args.format)
    return EXIT_OK


def _artifact_dirs(root: Path):
    dirs = sorted(p for p in root.iterdir() if (p / "manifest.json").is_file())
    if not dirs:
        raise InputError(f"no artifact directories under {root}")
    return dirs


def _cmd_channels(args) -> int:
    root = Path(args.ensemble)
    if not root.is_dir():
        raise InputError(f"{root} is not a directory")
    ensemble = [io.read_posterior_set(p) for p in _artifact_dirs(root)]
    factors = None
    if args.factors:
        factor = io.read_hard_labels(args.factors, reference_ids=ensemble[0].sample_ids)
        factors = {Path(args.factors).stem: factor}
    result = channels.run_pipeline(
        ensemble,
        threshold_bits=args.threshold_bits,
        min_samples=args.min_samples,
        xi=args.xi,
        factors=factors,
        threads=args.threads,
    )
    out = _resolve_out(args, args.out)
    out.mkdir(parents=True, exist_ok=True)

    labels = [ref.label for ref in result.refs]
    report = {
        "n_channels": len(result.refs),
        "threshold_bits": args.threshold_bits,
        "min_samples": args.min_samples,
        "xi": args.xi,
        "channels": labels,
        "info_bits": result.info_bits,
        "groups": [[labels[i] for i in g] for g in result.groups],
        "representatives": [ref.label for ref in result.representatives],
    }
    if result.similarity_matrix is not None:
        io.export_matrix_csv(result.similarity_matrix, out / "similarity.csv")
        opt = result.optics
        with open(out / "ordering.csv", "w", encoding="utf-8") as fh:
            fh.write("position,channel,reachability\n")
            for pos, idx in enumerate(opt.ordering):
                fh.write(
                    f"{pos},{labels[idx]},{io.format_value(float(opt.reachability[idx]))}\n"
                )
        io.export_json(
            {
                "ordering": opt.ordering,
                "reachability": opt.reachability,
                "core_distances": opt.core_distances,
                "min_samples": opt.min_samples,
                "xi": opt.xi,
            },
            out / "optics.json",
        )
    if result.factor_columns:
        with open(out / "factors.csv", "w", encoding="utf-8") as fh:
            names = list(result.factor_columns)
            fh.write("channel," + ",".join(names) + "\n")
            for i, label in enumerate(labels):
                row = ",".join(
                    io.format_value(float(result.factor_columns[name][i])) for name in names
                )
                fh.write(f"{label},{row}\n")
    io.export_json(report, out / "report.json")
    print(f"channels: {len(result.refs)} informative, {len(result.groups)} groups -> {out}")
    return EXIT_OK


_OBJECTIVE_BY_FLAG = {"nmi": "avg_nmi", "exp-neg-vi": "avg_exp_neg_vi", "mi": "avg_mi"}


def _cmd_fuse(args) -> int:
    root = Path(args.ensemble)
    if not root.is_dir():
        raise InputError(f"{root} is not a directory")
    ensemble = [io.read_fingerprint(p) for p in _artifact_dirs(root)]
    cfg = fusion.FusionConfig(
        objective=_OBJECTIVE_BY_FLAG[args.objective],
        latent_dim=args.latent_dim,
        learning_rate=args.lr,
        steps=args.steps,
        seed=args.seed,
    )
    fused, state = fusion.fuse(ensemble, cfg)
    out = _resolve_out(args, args.out)
    io.write_posterior_set(fused, out / "fused")
    io.write_trace_csv(state.objective_trace, out / "trace.csv")
    fp = fingerprint_gaussian(fused, threads=args.threads)
    off_diagonal = fp.values[~np.eye(fp.n, dtype=bool)]
    mean_off = float(off_diagonal.mean())
    report = {
        "objective": cfg.objective,
        "steps": cfg.steps,
        "learning_rate": cfg.learning_rate,
        "latent_dim": cfg.latent_dim,
        "seed": cfg.seed,
        "members": len(ensemble),
        "final_objective": float(state.objective_trace[-1]),
        "initial_objective": float(state.objective_trace[0]),
        "mean_offdiagonal_bc": mean_off,
        "scattered": mean_off < 0.05,
    }
    io.export_json(report, out / "report.json")
    print(
        f"fused {len(ensemble)} members: objective {report['initial_objective']:.4f}"
        f" -> {report['final_objective']:.4f}, mean offdiag BC {mean_off:.4f} -> {out}"
    )
    return EXIT_OK


def _cmd_synth(args) -> int:
    out = _resolve_out(args, args.out)
    if args.kind == "nine":
        spaces = bench.gen_nine_space_suite(n=args.n, seed=args.seed)
        for label, space in spaces.items():
            io.write_posterior_set(space, out / label)
        print(f"wrote {len(spaces)} spaces to {out}")
    elif args.kind == "so2":
        space, angles = bench.gen_so2_weak(n=args.n, seed=args.seed, noise=args.noise)
        io.write_posterior_set(space, out / "space")
        order, dist = bench.circle_order_and_distances(args.n)
        with open(out / "order.csv", "w", encoding="utf-8") as fh:
            fh.write("sample_id,data_dist\n")
            for i in order:
                fh.write(f"{space.sample_ids[i]},{io.format_value(float(dist[i]))}\n")
        io.export_json({"angles": angles}, out / "angles.json")
        print(f"wrote so2 weak learner (n={args.n}, seed={args.seed}) to {out}")
    elif args.kind == "planted":
        ensemble, assignment = bench.gen_planted_channels(
            groups=args.groups,
            models=args.models,
            dims=args.dims,
            informative_per_model=args.informative,
            noise=args.noise,
            seed=args.seed,
            n_points=args.n,
        )
        for space in ensemble:
            io.write_posterior_set(space, out / space.space_id)
        with open(out / "planted.csv", "w", encoding="utf-8") as fh:
            fh.write("model,dim,group\n")
            for m, space in enumerate(ensemble):
                for k in range(args.dims):
                    fh.write(f"{space.space_id},{k},{assignment[m, k]}\n")
        print(f"wrote {len(ensemble)} planted models to {out}")
    else:  # separated
        space = bench.gen_separated_gaussians(
            k=args.k, separation=args.separation, per_cluster=args.per_cluster
        )
        io.write_posterior_set(space, out / "space")
        print(f"wrote separated suite (k={args.k}) to {out}")
    return EXIT_OK


def _cmd_continuity(args) -> int:
    space = io.read_posterior_set(args.input)
    with open(args.order, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if header[0] != "sample_id":
        raise InputError("order CSV must have a sample_id header column")
    index = {s: i for i, s in enumerate(space.sample_ids)}
    try:
        order = [index[row[0]] for row in rows]
    except KeyError as err:
        raise InputError(f"order CSV names unknown sample_id {err.args[0]!r}") from err
    if len(header) > 1 and header[1] == "data_dist":
        dist = np.array([float(row[1]) for row in rows])
    else:
        dist = np.ones(len(order))
    result = bench.continuity(space, np.array(order), dist)
    record = {"continuity_ratio": result.ratio, "flagged": result.flagged}
    _print_record(record, args.format)
    return EXIT_OK


def _cmd_info(args) -> int:
    manifest = io.read_manifest(args.input)
    if manifest.get("kind") == "fingerprint":
        fp = io.read_fingerprint(args.input)
        estimate = estimators.info_kt(fp)
        n = fp.n
    else:
        space = io.read_posterior_set(args.input)
        n = space.n
        if args.mc:
            cfg = estimators.McConfig(
                n_samples=args.n_samples, agg_fraction=args.agg_fraction, seed=args.seed
            )
            estimate = estimators.info_mc(space, cfg)
        else:
            fp = fingerprint_gaussian(space, threads=args.threads)
            estimate = estimators.info_kt(fp)
    record = {
        "bits": estimate.bits,
        "std_err": estimate.std_err,
        "estimator": estimate.estimator,
        "n_support": estimate.n_support,
    }
    _print_record(record, args.format)
    if estimate.estimator == estimators.KT_BOUND and estimate.bits >= math.log2(n) - 0.1:
        print(
            f"warning: estimate within 0.1 bits of log2(N)={math.log2(n):.3f};"
            " the fingerprint bound saturates there, so the true information"
            " may be larger (increase the sample)"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="infocomp",
        description="Compare the information content of probabilistic representation spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fingerprint", parents=[common], help="fingerprint a posterior set")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dims", default=None, help="'all' or comma list; default: full space")
    p.add_argument("--sample", type=int, default=None, help="subsample size")
    p.add_argument("--dtype", choices=("f32le", "f64le"), default="f32le")
    p.set_defaults(func=_cmd_fingerprint)

    p = sub.add_parser("compare", parents=[common], help="compare two fingerprints")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--measure", choices=("nmi", "vi", "cka"), default="nmi")
    p.add_argument("--estimator", choices=("kt",), default="kt")
    p.add_argument("--exact", action="store_true", help="inputs are clustering CSVs")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("compare-mc", parents=[common], help="Monte Carlo comparison of two sets")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--n-samples", type=int, required=True)
    p.add_argument("--agg-fraction", type=float, default=1.0)
    p.add_argument("--measure", choices=("nmi", "vi", "both"), default="both")
    p.set_defaults(func=_cmd_compare_mc)

    p = sub.add_parser("channels", parents=[common], help="ensemble channel pipeline")
    p.add_argument("--ensemble", required=True, help="directory of posterior-set dirs")
    p.add_argument("--threshold-bits", type=float, default=0.01)
    p.add_argument("--min-samples", type=int, default=20)
    p.add_argument("--xi", type=float, default=0.05)
    p.add_argument("--factors", default=None, help="CSV of sample_id,label")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_channels)

    p = sub.add_parser("fuse", parents=[common], help="fuse an ensemble of fingerprints")
    p.add_argument("--ensemble", required=True, help="directory of fingerprint dirs")
    p.add_argument("--objective", choices=tuple(_OBJECTIVE_BY_FLAG), required=True)
    p.add_argument("--lr", type=float, default=3.0)
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--latent-dim", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic suites")
    p.add_argument("--kind", choices=("nine", "so2", "planted", "separated"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=None, help="number of data points")
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--groups", type=int, default=5)
    p.add_argument("--models", type=int, default=50)
    p.add_argument("--dims", type=int, default=10)
    p.add_argument("--informative", type=int, default=5)
    p.add_argument("--k", type=int, default=4, help="separated: cluster count")
    p.add_argument("--per-cluster", type=int, default=1)
    p.add_argument("--separation", type=float, default=1e6)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("continuity", parents=[common], help="continuity of a set along an order")
    p.add_argument("--input", required=True)
    p.add_argument("--order", required=True, help="CSV: sample_id[,data_dist]")
    p.set_defaults(func=_cmd_continuity)

    p = sub.add_parser("info", parents=[common], help="information content of a set/fingerprint")
    p.add_argument("--input", required=True)
    p.add_argument("--mc", action="store_true", help="use the Monte Carlo estimator")
    p.add_argument("--n-samples", type=int, default=10000)
    p.add_argument("--agg-fraction", type=float, default=1.0)
    p.set_defaults(func=_cmd_info)
    return parser


_SYNTH_DEFAULT_N = {"nine": 64, "so2": 200, "planted": 256, "separated": 4}
_SYNTH_DEFAULT_NOISE = {"so2": 0.02, "planted": 0.05}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "synth":
        if args.n is None:
            args.n = _SYNTH_DEFAULT_N[args.kind]
        if args.noise is None:
            args.noise = _SYNTH_DEFAULT_NOISE.get(args.kind, 0.02)
    try:
        return args.func(args)
    except (DivergenceError, ObjectiveUndefinedError) as err:
        step = f" (step {err.step})" if err.step is not None else ""
        print(f"error[{err.code}]: {err}{step}", file=sys.stderr)
        return EXIT_NUMERIC
    except NumericDomainError as err:
        print(f"error[{err.code}]: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FormatError, InfocompError) as err:
        print(f"error[{err.code}]: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as err:
        print(f"error[io]: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
