"""Word error rate of separate and joint decoding versus downlink Es/N0.

Runs paired trials for each source correlation and writes one CSV per rho.
"""

import argparse
from pathlib import Path

from relaycode.simulation import ExperimentConfig, codebook_for, results_csv, sweep_snr


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000, help="source block length")
    ap.add_argument("--rho", type=float, nargs="+", default=[0.05, 0.07, 0.09])
    ap.add_argument("--snr-db", type=lambda s: [float(v) for v in s.split(",")],
                    default=[-3.0, -2.5, -2.0, -1.5, -1.0, -0.5, 0.0], help="comma list, e.g. --snr-db=-2,-1")
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/wer")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = ExperimentConfig(n=args.n, trials=args.trials, seed=args.seed, workers=args.workers)
    cb = codebook_for(base)
    for rho in args.rho:
        cfg = ExperimentConfig(n=args.n, rho=rho, trials=args.trials, seed=args.seed, workers=args.workers)
        text = results_csv(sweep_snr(cfg, args.snr_db, cb), out / f"wer_rho{rho:g}.csv")
        print(text)


if __name__ == "__main__":
    main()
