"""Command-line front end.

Exit codes: 0 success, 1 I/O or file format, 2 usage, 3 numerical
(ill-conditioned interpolation system or singular Kalman innovation).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import basis as basis_mod
from .bench import BenchFailure, run_benchmark
from .errors import (
    DimensionError,
    FieldsenseError,
    FormatError,
    IllConditionedError,
    SingularInnovationError,
)
from .fielddata import (
    GridGeometry,
    export_heatmap,
    load_training,
    read_geometry,
    read_matrix,
    save_training,
    snr_noise_std,
    split_snapshots,
    synth_field,
    write_matrix,
)
from .modeleval import fit_state_space, gamma_criterion, save_model
from .placement import (
    AnnealConfig,
    CandidateSet,
    brute_force_placement,
    load_placement,
    optimize_placement,
    placement_mse,
    qdeim_placement,
    random_placement,
    sample,
    save_placement,
    save_trace,
)
from .reconstruct import ObservationSet, reconstruct_series

TRAINING_FILE = "training.txt"
GEOMETRY_FILE = "geometry.txt"


class UsageError(FieldsenseError):
    pass


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _nonneg_float(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _rank(text):
    if text == "svht":
        return text
    return _positive_int(text)


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_candidates(path, m):
    if path is None:
        return CandidateSet.all_cells(m)
    return CandidateSet(load_placement(path).indices).check(m)


# Subcommands =================================================================

def cmd_synth(args):
    if args.mask is not None:
        geometry = read_geometry(args.mask)
    else:
        geometry = GridGeometry.full(args.height, args.width)
    if args.modes > geometry.n_valid:
        raise UsageError(f"--modes {args.modes} exceeds {geometry.n_valid} valid cells")
    noise = args.noise
    if args.snr is not None:
        clean = synth_field(geometry, args.modes, args.snapshots, 0.0, args.seed)
        noise = snr_noise_std(clean.data, args.snr)
    ts = synth_field(geometry, args.modes, args.snapshots, noise, args.seed)
    out = _out_dir(args)
    save_training(ts, out / TRAINING_FILE, out / GEOMETRY_FILE)
    print(f"wrote {ts.m}x{ts.M} snapshot matrix (noise_std={noise!r}) to {out}")
    return 0


def cmd_train(args):
    ts = load_training(args.training, args.geometry)
    f = basis_mod.compute_svd(ts)
    if args.rank == "svht":
        r = basis_mod.svht_rank(f, args.noise_std)
    else:
        r = args.rank
        if r > f.p:
            raise UsageError(f"--rank {r} exceeds min(m, M) = {f.p}")
    b = basis_mod.truncate(f, r)
    out = _out_dir(args)
    basis_mod.save_basis(b, out)
    lines = ["index,sigma"]
    lines.extend(f"{k},{float(s)!r}" for k, s in enumerate(f.singular_values))
    (out / "spectrum.csv").write_text("\n".join(lines) + "\n", encoding="ascii")
    print(f"r={r}")
    print(f"projection_mse={basis_mod.projection_error(b, ts)!r}")
    return 0


def cmd_place(args):
    ts = load_training(args.training, args.geometry)
    b = basis_mod.load_basis(args.basis)
    if b.m != ts.m:
        raise DimensionError(f"basis has {b.m} rows, training data has {ts.m}")
    cs = _load_candidates(args.candidates, b.m)
    out = _out_dir(args)
    trace = None
    if args.method == "anneal":
        cfg = AnnealConfig(args.iters, args.rho, args.seed, args.init)
        p, trace = optimize_placement(ts, cs, b, cfg)
        eps = float(trace[-1])
    elif args.method == "qdeim":
        p = qdeim_placement(b, cs)
        eps = placement_mse(p, ts, b)
    elif args.method == "random":
        p = random_placement(cs, b.r, args.seed)
        eps = placement_mse(p, ts, b)
    else:
        p, eps = brute_force_placement(ts, cs, b)
    save_placement(out / "placement.txt", p)
    if trace is not None:
        save_trace(out / "trace.csv", trace)
    print(f"placement={' '.join(map(str, p.indices))}")
    print(f"training_mse={eps!r}")
    return 0


def cmd_observe(args):
    field = read_matrix(args.field)
    p = load_placement(args.placement)
    write_matrix(Path(args.out), sample(field, p))
    return 0


def cmd_reconstruct(args):
    b = basis_mod.load_basis(args.basis)
    p = load_placement(args.placement)
    Y = read_matrix(args.observations)
    truth = read_matrix(args.truth) if args.truth else None
    try:
        result = reconstruct_series(ObservationSet(Y, p), b, truth)
    except IllConditionedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    out = _out_dir(args)
    write_matrix(out / "reconstruction.txt", result.fields)
    print(f"condition_number={result.condition_number!r}")
    if result.per_snapshot_mse is not None:
        lines = ["snapshot,mse"]
        lines.extend(f"{j},{float(e)!r}" for j, e in enumerate(result.per_snapshot_mse))
        (out / "mse.csv").write_text("\n".join(lines) + "\n", encoding="ascii")
        print(f"mse={result.mse!r}")
    if args.heatmaps:
        if args.geometry is None:
            raise UsageError("--heatmaps needs --geometry")
        geometry = read_geometry(args.geometry)
        j = args.snapshot
        if not 0 <= j < result.fields.shape[1]:
            raise UsageError(f"--snapshot {j} out of range")
        export_heatmap(result.fields[:, j], geometry, out / f"reconstruction_{j}.pgm")
        if truth is not None:
            export_heatmap(truth[:, j], geometry, out / f"truth_{j}.pgm")
            err = np.abs(truth[:, j] - result.fields[:, j])
            export_heatmap(err, geometry, out / f"abs_error_{j}.pgm")
    return 0


def cmd_kalman(args):
    b = basis_mod.load_basis(args.basis)
    model = fit_state_space(b, args.rv)
    placements = [load_placement(path).check(b.m) for path in args.placement]
    out = _out_dir(args)
    save_model(model, out)
    gamma = gamma_criterion(model, placements, args.iterations)
    print(f"gamma={gamma!r}")
    return 0


def cmd_bench(args):
    ts = load_training(args.training, args.geometry)
    if args.test is not None:
        train, test = ts, load_training(args.test, args.geometry)
    else:
        train, test = split_snapshots(ts, args.split)
    cs = _load_candidates(args.candidates, train.m)
    out = _out_dir(args)
    try:
        report = run_benchmark(train, test, args.rank, args.iters, args.rho,
                               args.seed, args.random_seeds, args.noise_std, cs)
    except BenchFailure as exc:
        exc.report.write_csv(out / "report_partial.csv", timing=not args.no_timing)
        raise
    report.write_csv(out / "report.csv", timing=not args.no_timing)
    for name, trace in report.traces.items():
        save_trace(out / f"trace_{name}.csv", trace)
    print(f"r={report.rank}")
    print(report.table())
    return 0


# Parser ======================================================================

def build_parser():
    parser = argparse.ArgumentParser(
        prog="fieldsense",
        description="Sparse sensor placement and field reconstruction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic snapshot set")
    p.add_argument("--height", type=_positive_int, default=8)
    p.add_argument("--width", type=_positive_int, default=8)
    p.add_argument("--mask", help="geometry file (overrides --height/--width)")
    p.add_argument("--modes", type=_positive_int, required=True)
    p.add_argument("--snapshots", type=_positive_int, required=True)
    noise = p.add_mutually_exclusive_group()
    noise.add_argument("--noise", type=_nonneg_float, default=0.0,
                       help="noise standard deviation")
    noise.add_argument("--snr", type=float, help="noise level as SNR in dB")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="learn and truncate the SVD basis")
    p.add_argument("--training", required=True)
    p.add_argument("--geometry", required=True)
    p.add_argument("--rank", type=_rank, default="svht", help="integer or 'svht'")
    p.add_argument("--noise-std", type=_nonneg_float,
                   help="known noise level for the threshold")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("place", help="choose sensor locations")
    p.add_argument("--training", required=True)
    p.add_argument("--geometry", required=True)
    p.add_argument("--basis", required=True, help="directory written by 'train'")
    p.add_argument("--method", choices=("anneal", "qdeim", "random", "brute"),
                   default="anneal")
    p.add_argument("--iters", type=_nonneg_int, default=1000)
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--init", choices=("random", "qdeim"), default="random")
    p.add_argument("--candidates", help="file of candidate cell rows, one per line")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("observe", help="sample a field matrix at a placement")
    p.add_argument("--field", required=True)
    p.add_argument("--placement", required=True)
    p.add_argument("-o", "--out", required=True, help="observations matrix file")
    p.set_defaults(func=cmd_observe)

    p = sub.add_parser("reconstruct", help="reconstruct fields from observations")
    p.add_argument("--basis", required=True)
    p.add_argument("--placement", required=True)
    p.add_argument("--observations", required=True)
    p.add_argument("--truth", help="ground-truth matrix for per-snapshot MSE")
    p.add_argument("--geometry", help="needed for --heatmaps")
    p.add_argument("--heatmaps", action="store_true")
    p.add_argument("--snapshot", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("kalman", help="fit the state-space model and score placements")
    p.add_argument("--basis", required=True)
    p.add_argument("--placement", required=True, action="append")
    p.add_argument("--rv", type=_nonneg_float)
    p.add_argument("--iterations", type=_positive_int, default=1000)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_kalman)

    p = sub.add_parser("bench", help="compare placement methods")
    p.add_argument("--training", required=True)
    p.add_argument("--geometry", required=True)
    p.add_argument("--test", help="held-out matrix; default is a temporal split")
    p.add_argument("--split", type=float, default=0.8)
    p.add_argument("--rank", type=_rank, default="svht")
    p.add_argument("--noise-std", type=_nonneg_float)
    p.add_argument("--iters", type=_nonneg_int, default=1000)
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--random-seeds", type=_positive_int, default=20)
    p.add_argument("--candidates")
    p.add_argument("--no-timing", action="store_true",
                   help="write 0 in the seconds column")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BenchFailure as exc:
        print(f"error: {exc} (partial report kept)", file=sys.stderr)
        return 3 if isinstance(exc.__cause__, ArithmeticError) else 1
    except (IllConditionedError, SingularInnovationError, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except (FormatError, DimensionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FieldsenseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
