"""Training-MSE trace of the swap search, averaged over restarts.

    python scripts/convergence.py --iters 2000 --restarts 10 --out trace.csv
"""

import argparse

import numpy as np

from fieldsense.basis import compute_svd, svht_rank, truncate
from fieldsense.fielddata import GridGeometry, snr_noise_std, synth_field
from fieldsense.placement import AnnealConfig, optimize_placement, placement_mse, qdeim_placement


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=12)
    parser.add_argument("--modes", type=int, default=5)
    parser.add_argument("--snapshots", type=int, default=80)
    parser.add_argument("--snr", type=float, default=20.0)
    parser.add_argument("--iters", type=int, default=2000)
    parser.add_argument("--rho", type=float, default=0.9)
    parser.add_argument("--restarts", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="convergence.csv")
    args = parser.parse_args()

    geometry = GridGeometry.full(args.size, args.size)
    clean = synth_field(geometry, args.modes, args.snapshots, 0.0, args.seed)
    ts = synth_field(geometry, args.modes, args.snapshots,
                     snr_noise_std(clean.data, args.snr), args.seed)
    f = compute_svd(ts)
    b = truncate(f, svht_rank(f))

    traces = np.array([
        optimize_placement(ts, None, b, AnnealConfig(args.iters, args.rho, s))[1]
        for s in range(args.restarts)
    ])
    np.savetxt(args.out, np.column_stack([np.arange(traces.shape[1]), traces.mean(axis=0),
                                          traces.min(axis=0), traces.max(axis=0)]),
               delimiter=",", header="iteration,mean_mse,min_mse,max_mse", comments="")
    print(f"r={b.r}  qdeim={placement_mse(qdeim_placement(b), ts, b):.4g}")
    for it in sorted({0, 10, 100, 500, 1000, args.iters}):
        if it < traces.shape[1]:
            print(f"iter {it:>5}: mean mse {traces[:, it].mean():.4g}")


if __name__ == "__main__":
    main()
