"""Run the complete 151 x 5 x 2 x 3 x 20 outflow sweep (90,600 runs).

Equivalent to ``rewardswap sweep --seed SEED --out DIR``; kept as a script so
it can be launched with a progress timer and a custom job count.

    python3 scripts/full_sweep.py --seed 7 --jobs 8 --out results/sweep
"""

from __future__ import annotations

import argparse
import time

from rewardswap.cli import main as cli_main
from rewardswap.experiments.outflow import full_axes


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seed", required=True)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/sweep")
    args = ap.parse_args()
    print(f"{full_axes().size()} runs, {args.jobs} job(s)")
    t0 = time.perf_counter()
    code = cli_main(["sweep", "--seed", args.seed, "--jobs", str(args.jobs), "--out", args.out])
    print(f"done in {time.perf_counter() - t0:.1f}s -> {args.out}")
    raise SystemExit(code)


if __name__ == "__main__":
    main()
