"""Density-evolution achievable regions for the rate-1/2 code pairs.

Writes one CSV per (downlink ensemble, decoding mode) with the columns
rho, h_rho, sigma2_threshold, capacity_at_threshold, converged_iters, plus the
source-code threshold.
"""

import argparse
from pathlib import Path

import numpy as np

from relaycode.code_construction import table1_ensemble
from relaycode.density_evolution import de_region_sweep, de_source_threshold, write_sweep_csv
from relaycode.info_region import binary_entropy


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/de", help="output directory")
    ap.add_argument("--pop", type=int, default=100_000, help="population size")
    ap.add_argument("--points", type=int, default=12)
    ap.add_argument("--rho-max", type=float, default=0.12)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    src = table1_ensemble("source_r12")
    th = de_source_threshold(src, pop_size=args.pop, seed=args.seed).value
    print(f"source threshold rho_th = {th:.4f}, h(rho_th) = {binary_entropy(th):.4f}")

    grid = list(np.linspace(0.01, args.rho_max, args.points))
    runs = [("chan_sep_r12", "separate"), ("chan_sep_r12", "joint"), ("chan_joint_r12", "joint")]
    for down, mode in runs:
        pts = de_region_sweep(table1_ensemble(down), src, grid, mode, pop_size=args.pop, seed=args.seed)
        path = out / f"{down}_{mode}.csv"
        write_sweep_csv(pts, path)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
