"""Command line entry point.

Exit codes: 0 success, 1 domain or scenario error, 2 usage error.
Output schemas are listed in docs/output_schemas.md.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .core import RewardSwapError
from .experiments.coupling import run_experiment1
from .experiments.feasibility import run_experiment2
from .experiments.outflow import ALPHAS, SWEEP_BOUNDS, SimConfig, SweepAxes, aggregate, frange, full_axes, run_sweep, simulate
from .experiments.rng import derive_seed
from .scenario import load_scenario, run_scenario
from .settlement import PRICING_MODES

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2

RECEIPT_COLUMNS = [
    "index", "kind", "tick", "status", "source", "dest", "y", "amount",
    "customer_price_raw", "customer_price_rewards", "settlement_m",
    "comp_competition", "comp_seasonal", "comp_spillover", "comp_net",
    "source_m_after", "dest_m_after", "unlock_at", "error", "message",
]


# ---------------------------------------------------------------- formatting

def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".9g")
    return str(value)


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return fmt(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def write_table(out: Path, stem: str, rows: list[dict], fmt_name: str, columns=None) -> Path:
    columns = columns or (list(rows[0]) if rows else [])
    if fmt_name == "json":
        path = out / f"{stem}.json"
        path.write_text(dumps([{c: row.get(c) for c in columns} for row in rows]))
        return path
    path = out / f"{stem}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row.get(c)) for c in columns])
    return path


def write_json(out: Path, name: str, obj) -> Path:
    path = out / name
    path.write_text(dumps(obj))
    return path


def error_json(exc: Exception) -> str:
    return json.dumps({"error": getattr(exc, "code", type(exc).__name__), "message": str(exc)})


# ---------------------------------------------------------------- flag types

def positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be a finite number > 0, got {text!r}")
    return v


def u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def float_list(text: str) -> tuple[float, ...]:
    """``a:b:s`` (inclusive range) or a comma separated list."""
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise argparse.ArgumentTypeError(f"range {text!r} needs start <= stop and step > 0")
            return frange(start, stop, step)
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:s or a comma list of numbers, got {text!r}") from None


def alpha_list(text: str) -> tuple[float, ...]:
    out = []
    for part in text.split(","):
        if part in ALPHAS:
            out.append(ALPHAS[part])
            continue
        try:
            out.append(positive_float(part))
        except argparse.ArgumentTypeError:
            raise argparse.ArgumentTypeError(
                f"alpha must be one of {', '.join(ALPHAS)} or a positive number, got {part!r}"
            ) from None
    return tuple(out)


def bounds_list(text: str) -> tuple[tuple[str, float, float], ...]:
    out = []
    for part in text.split(","):
        if part in SWEEP_BOUNDS:
            out.append((part, *SWEEP_BOUNDS[part]))
            continue
        try:
            lo, hi = (float(v) for v in part.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"bounds must be one of {', '.join(SWEEP_BOUNDS)} or LO:HI, got {part!r}"
            ) from None
        if not 0 < lo <= 1 <= hi:
            raise argparse.ArgumentTypeError(f"bounds {part!r} must satisfy 0 < LO <= 1 <= HI")
        out.append((part, lo, hi))
    return tuple(out)


# ---------------------------------------------------------------- commands

def cmd_quote(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.source or args.dest or args.y is not None:
        if not (args.source and args.dest and args.y is not None):
            raise UsageError("--source, --dest and --y must be given together")
        source, dest, y, omega, mode = args.source, args.dest, args.y, args.omega, args.mode
    else:
        if not scenario.exchanges:
            raise UsageError("scenario has no scripted exchanges; pass --source, --dest and --y")
        if args.index >= len(scenario.exchanges):
            raise UsageError(f"--index {args.index} out of range ({len(scenario.exchanges)} scripted exchanges)")
        ex = scenario.exchanges[args.index]
        source, dest, y, omega, mode = ex.source, ex.dest, ex.y, ex.omega, ex.mode
        if args.omega is not None:
            omega = args.omega
        if args.mode is not None:
            mode = args.mode
    receipt = scenario.quote(source, dest, y, omega or 0.0, mode or "full_factor")
    out = receipt.to_dict()
    out["source_m_delta"] = receipt.source_m_delta
    out["dest_m_delta"] = receipt.dest_m_delta
    sys.stdout.write(dumps(out))
    return EXIT_OK


def _receipt_rows(log: list[dict]) -> list[dict]:
    rows = []
    for i, entry in enumerate(log):
        row = {k: v for k, v in entry.items() if k != "receipt"}
        row["index"] = i
        receipt = entry.get("receipt")
        if receipt is not None:
            for k in ("customer_price_raw", "customer_price_rewards", "settlement_m",
                      "comp_competition", "comp_seasonal", "comp_spillover", "comp_net"):
                row[k] = getattr(receipt, k)
        rows.append(row)
    return rows


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    result = run_scenario(scenario, on_error=args.on_error)
    out = _outdir(args)
    write_table(out, "receipts", _receipt_rows(result.log), args.format, RECEIPT_COLUMNS)
    write_json(out, "pools.json", {b: p.to_dict() for b, p in result.pools.items()})
    conservation = result.conservation()
    failures = sum(1 for e in result.log if e["status"] == "error")
    summary = {
        "scenario": str(args.scenario),
        "halted": result.halted,
        "entries": len(result.log),
        "failures": failures,
        "metrics": result.metrics(),
        "conservation": conservation,
    }
    write_json(out, "summary.json", summary)
    print(
        "conservation: M before {} = M after {} + released {} (residual {}) {}".format(
            fmt(conservation["m_total_initial"]),
            fmt(conservation["m_total_final"]),
            fmt(conservation["released_withdrawals"]),
            fmt(conservation["residual"]),
            "OK" if conservation["conserved"] else "VIOLATED",
        )
    )
    if result.halted:
        failed = next(e for e in reversed(result.log) if e["status"] == "error")
        print(json.dumps({"error": failed["error"], "message": failed["message"], "tick": failed["tick"]}))
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_exp1(args) -> int:
    res = run_experiment1(n=args.grid)
    out = _outdir(args)
    write_table(out, "thresholds", res.threshold_rows, args.format)
    write_table(
        out,
        "profiles",
        [{"profile": r.label, "mean_pct": r.mean, "max_pct": r.max, "p95_pct": r.p95, **r.dominance_counts()}
         for r in res.profile_reports],
        args.format,
    )
    write_table(out, "combined", res.combined_rows, args.format)
    maps = [res.headline] + list(res.maps)
    keys = ("mu", "phi", "p_trans", "p_flow", "p_both", "coupling_pct", "dominance")
    rows = [
        {"eta": rep.eta, "theta": rep.theta, **dict(zip(keys, row))}
        for rep in maps
        for row in rep.rows()
    ]
    write_table(out, "maps", rows, args.format)
    write_json(out, "summary.json", res.summary())
    return EXIT_OK


def cmd_exp2(args) -> int:
    res = run_experiment2()
    out = _outdir(args)
    write_table(out, "feasibility", res["feasibility"], args.format)
    write_table(out, "ceilings", res["ceilings"], args.format)
    write_table(out, "premium_curves", res["premium_curves"], args.format)
    by_theta = {(r["theta"], r["beta_flow"]): r["premium_pct"] for r in res["premium_curves"]}
    summary = {
        "feasibility": res["feasibility"],
        "ceilings": res["ceilings"],
        "premium_pct_at_beta_2": {fmt(t): by_theta[(t, 2.0)] for t in sorted({k[0] for k in by_theta})},
    }
    write_json(out, "summary.json", summary)
    return EXIT_OK


def _sim_base(args) -> SimConfig:
    return SimConfig(n_transactions=args.transactions)


def _write_sweep(args, axes: SweepAxes, base: SimConfig, out: Path) -> list[dict]:
    rows = run_sweep(axes, args.seed, base=base, jobs=args.jobs)
    write_table(out, "runs", rows, args.format)
    cells = aggregate(rows)
    write_table(out, "cells", cells, args.format)
    write_json(
        out,
        "summary.json",
        {
            "master_seed": args.seed,
            "runs": len(rows),
            "cells": len(cells),
            "axes": {
                "beta_flow": list(axes.beta_flows),
                "theta": list(axes.thetas),
                "bounds": [list(b) for b in axes.bounds],
                "alpha": list(axes.alphas),
                "replications": axes.replications,
            },
            "transactions": base.n_transactions,
            "cell_summaries": cells,
        },
    )
    return rows


def cmd_exp3(args) -> int:
    axes = SweepAxes(
        beta_flows=args.beta_flow,
        thetas=args.theta,
        bounds=args.bounds,
        alphas=args.alpha,
        replications=args.replications,
    )
    base = _sim_base(args)
    out = _outdir(args)
    _write_sweep(args, axes, base, out)
    if args.trajectory:
        traj_rows = []
        traj_base = replace(base, keep_trajectory=True)
        for cell, scen, beta, theta, (_, lo, hi), alpha in axes.cells():
            cfg = replace(
                traj_base, alpha=alpha,
                params=base.params.replace(beta_flow=beta, theta=theta, b_flow_min=lo, b_flow_max=hi),
            )
            for rep in range(axes.replications):
                tr = simulate(cfg, derive_seed(args.seed, scen, rep)).trajectory
                for t in range(len(tr["satisfaction"])):
                    traj_rows.append(
                        {
                            "cell": cell,
                            "replication": rep,
                            "txn": t + 1,
                            "satisfaction": tr["satisfaction"][t],
                            "premium_pct": tr["premium_pct"][t],
                            "phi": tr["phi"][t],
                            "m": tr["m"][t],
                            "x": tr["x"][t],
                            "lrr": tr["lrr"][t],
                        }
                    )
        write_table(out, "trajectories", traj_rows, args.format)
    return EXIT_OK


def cmd_sweep(args) -> int:
    default = full_axes()
    axes = SweepAxes(
        beta_flows=args.beta_flow or default.beta_flows,
        thetas=args.theta or default.thetas,
        bounds=args.bounds or default.bounds,
        alphas=args.alpha or default.alphas,
        replications=args.replications,
    )
    _write_sweep(args, axes, _sim_base(args), _outdir(args))
    return EXIT_OK


# ---------------------------------------------------------------- parser

class UsageError(Exception):
    pass


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rewardswap", description="Cross-brand reward exchange engine and experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def tables(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv", help="table format (default csv)")

    p = sub.add_parser("quote", help="price one exchange against the scenario's opening pools")
    p.add_argument("scenario", type=Path)
    p.add_argument("--index", type=int, default=0, help="scripted exchange to quote (default 0)")
    p.add_argument("--source")
    p.add_argument("--dest")
    p.add_argument("--y", type=positive_float, help="destination rewards requested")
    p.add_argument("--omega", type=float, help="loyalty tier adjustment")
    p.add_argument("--mode", choices=PRICING_MODES)
    p.set_defaults(func=cmd_quote)

    p = sub.add_parser("run", help="replay a scenario's exchange and withdrawal script")
    p.add_argument("scenario", type=Path)
    tables(p)
    p.add_argument("--on-error", choices=("halt", "skip"), help="override the scenario's failure policy")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("exp1", help="factor coupling over the (mu, phi) grid")
    tables(p)
    p.add_argument("--grid", type=positive_int, default=100, help="grid points per axis (default 100)")
    p.set_defaults(func=cmd_exp1)

    p = sub.add_parser("exp2", help="feasible flow-sensitivity ranges")
    tables(p)
    p.set_defaults(func=cmd_exp2)

    def sim_flags(p, *, exp3: bool):
        tables(p)
        p.add_argument("--seed", type=u64, required=True, help="master seed (unsigned 64-bit)")
        p.add_argument("--jobs", type=positive_int, default=1, help="worker processes (output is unaffected)")
        p.add_argument("--beta-flow", type=float_list, default=(0.5, 1.0, 1.5, 2.0) if exp3 else None,
                       help="a:b:s inclusive range or comma list")
        p.add_argument("--theta", type=float_list, default=(0.10,) if exp3 else None)
        p.add_argument("--bounds", type=bounds_list, default=(("moderate", *SWEEP_BOUNDS["moderate"]),) if exp3 else None,
                       help="moderate, conservative or LO:HI, comma separated")
        p.add_argument("--alpha", type=alpha_list, default=None if not exp3 else tuple(ALPHAS.values()),
                       help="low, medium, high or numbers, comma separated")
        p.add_argument("--replications", type=positive_int, default=20)
        p.add_argument("--transactions", type=positive_int, default=1000)

    p = sub.add_parser("exp3", help="pure-outflow stress simulation")
    sim_flags(p, exp3=True)
    p.add_argument("--trajectory", action="store_true", help="also write per-transaction trajectories")
    p.set_defaults(func=cmd_exp3)

    p = sub.add_parser("sweep", help="full parameter sweep of the outflow simulation")
    sim_flags(p, exp3=False)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RewardSwapError as exc:
        print(error_json(exc))
        return EXIT_DOMAIN
    except OSError as exc:
        print(json.dumps({"error": "io_error", "message": str(exc)}))
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
