"""Command-line entry point: ``relaycode <group> <command> [options]``.

Exit codes: 0 success, 1 model error (infeasible construction, invalid model
parameters), 2 usage error (bad arguments, missing or malformed config).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import density_evolution as de
from . import info_region as ir
from .code_construction import ConstructionError, build_relay_codebook, get_ensemble
from .simulation import ConfigError, load_config, results_csv, run_pipeline, sweep_snr


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---- region


def _region_query(args) -> ir.RegionQuery:
    if args.pmf:
        source = ir.JointPmf.load(args.pmf)
    elif args.dsbs is not None:
        source = ir.DsbsSource(args.dsbs).to_pmf()
    else:
        raise UsageError("give a source with --pmf FILE or --dsbs RHO")
    return ir.RegionQuery(source, tuple(args.cup), tuple(args.down))


def cmd_region(args) -> int:
    if args.command == "counterexample":
        q = ir.counterexample_query()
        lines = ["entropies of the three-node source:"]
        lines += [f"  {name:<14s} {val:.4f}" for name, val in ir.entropy_table(q.source)]
        lines.append(f"  I(X0;Y1) = {q.downlink_mutuals[0]:.4f}, I(X0;Y2) = I(X0;Y3) = {q.downlink_mutuals[1]:.4f}")
        jscc = ir.check_jscc_achievable(q)
        sep = ir.check_separation_feasible(q)
        lines.append(f"joint source-channel coding: {jscc.verdict.value.upper()}")
        lines.append(sep.format())
        _emit("\n".join(lines) + "\n", args.out)
        return 0
    q = _region_query(args)
    report = ir.check_jscc_achievable(q) if args.command == "check" else ir.check_separation_feasible(q)
    _emit(report.format() + "\n", args.out)
    return 0


def cmd_capacity(args) -> int:
    value = ir.bsc_capacity(args.param) if args.command == "bsc" else ir.biawgn_capacity(args.param)
    _emit(f"{value:.6f}\n", args.out)
    return 0


def cmd_construct(args) -> int:
    cb = build_relay_codebook(get_ensemble(args.down), get_ensemble(args.src), args.n, args.r1, args.r2, args.seed)
    out = Path(args.out or "codebook")
    cb.save(out)
    print(f"wrote H, H1, H2, H0, Hs1, Hs2 ({args.n} parity bits) to {out}; repairs {cb.repairs}")
    return 0


def cmd_de(args) -> int:
    kw = dict(pop_size=args.pop, max_iters=args.max_iters, seed=args.seed)
    if args.command == "source-threshold":
        t = de.de_source_threshold(get_ensemble(args.src), tol=args.tol, **kw)
        _emit(f"rho_th = {t.value:.5f}  (h = {ir.binary_entropy(t.value):.5f})\n" if t.value
              else "no converging rho\n", args.out)
        return 0
    down, src = get_ensemble(args.down), get_ensemble(args.src)
    if args.command == "threshold":
        if args.mode == "joint":
            t = de.de_threshold_sigma(de.joint_view(down, src), args.rho, args.tol, **kw)
        else:
            t = de.de_threshold_sigma_separate(down, src, args.rho, args.tol, **kw)
        if t.value is None:
            _emit("no converging noise variance\n", args.out)
        else:
            _emit(f"sigma2_th = {t.value:.5f}  C_BIAWGN = {ir.biawgn_capacity(t.value):.5f}  "
                  f"h(rho) = {ir.binary_entropy(args.rho):.5f}\n", args.out)
        return 0
    grid = args.rho_grid or list(np.linspace(args.rho_min, args.rho_max, args.points))
    pts = de.de_region_sweep(down, src, grid, args.mode, args.tol, **kw)
    _emit(de.write_sweep_csv(pts), args.out)
    return 0


def cmd_simulate(args) -> int:
    if not args.config or not Path(args.config).is_file():
        raise UsageError(f"config file not found: {args.config}")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.command == "run":
        results = list(run_pipeline(cfg).values())
    else:
        if not args.snr_db or len(args.snr_db) < 2:
            raise UsageError("simulate sweep needs --snr-db with at least two values")
        results = sweep_snr(cfg, args.snr_db)
    _emit(results_csv(results), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relaycode", description=__doc__.splitlines()[0])
    groups = p.add_subparsers(dest="group", required=True)

    def common(sp):
        sp.add_argument("--out", help="write output to this path instead of stdout")
        sp.add_argument("--seed", type=int, default=0)

    region = groups.add_parser("region", help="information-theoretic region checks")
    rs = region.add_subparsers(dest="command", required=True)
    for name in ("check", "separation"):
        sp = rs.add_parser(name)
        sp.add_argument("--pmf", help="joint pmf text file")
        sp.add_argument("--dsbs", type=float, help="two-node DSBS crossover probability")
        sp.add_argument("--cup", type=float, nargs="+", required=True, help="uplink capacities")
        sp.add_argument("--down", type=float, nargs="+", required=True, help="downlink mutual informations")
        common(sp)
    common(rs.add_parser("counterexample"))

    cap = groups.add_parser("capacity", help="binary-input channel capacities")
    cs = cap.add_subparsers(dest="command", required=True)
    for name, meta in (("bsc", "CROSSOVER"), ("biawgn", "SIGMA2")):
        sp = cs.add_parser(name)
        sp.add_argument("param", type=float, metavar=meta)
        common(sp)

    con = groups.add_parser("construct", help="build and save a relay codebook")
    con.add_argument("--down", default="chan_sep_r12")
    con.add_argument("--src", default="source_r12")
    con.add_argument("--n", type=int, default=2000)
    con.add_argument("--r1", type=float, default=0.5)
    con.add_argument("--r2", type=float, default=0.5)
    common(con)
    con.set_defaults(command="construct")

    dep = groups.add_parser("de", help="density evolution")
    ds = dep.add_subparsers(dest="command", required=True)
    for name in ("threshold", "sweep", "source-threshold"):
        sp = ds.add_parser(name)
        sp.add_argument("--src", default="source_r12")
        sp.add_argument("--pop", type=int, default=100_000)
        sp.add_argument("--max-iters", type=int, default=500)
        sp.add_argument("--tol", type=float, default=1e-3)
        if name != "source-threshold":
            sp.add_argument("--down", default="chan_sep_r12")
            sp.add_argument("--mode", choices=("joint", "separate"), default="joint")
        if name == "threshold":
            sp.add_argument("--rho", type=float, required=True)
        if name == "sweep":
            sp.add_argument("--rho-grid", type=_floats)
            sp.add_argument("--rho-min", type=float, default=0.01)
            sp.add_argument("--rho-max", type=float, default=0.12)
            sp.add_argument("--points", type=int, default=12)
        common(sp)

    sim = groups.add_parser("simulate", help="Monte Carlo word error rate simulation")
    ss = sim.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        sp = ss.add_parser(name)
        sp.add_argument("--config", required=True)
        if name == "sweep":
            sp.add_argument("--snr-db", type=_floats, required=True, help="comma-separated Es/N0 values in dB")
        sp.add_argument("--out")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
    return p


HANDLERS = {"region": cmd_region, "capacity": cmd_capacity, "construct": cmd_construct,
            "de": cmd_de, "simulate": cmd_simulate}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return HANDLERS[args.group](args)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, ConstructionError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
