"""Print the headline numbers of the three experiments next to reference values.

    python3 scripts/reproduce_tables.py --seed 7
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from rewardswap.experiments.coupling import coupling_grid
from rewardswap.experiments.feasibility import ceiling_table, feasibility_table, premium_at
from rewardswap.experiments.outflow import ALPHAS, SweepAxes, aggregate, run_sweep

REF_RANGES = {0.00: (0.67, 2.00), 0.05: (0.68, 2.11), 0.10: (0.69, 2.25), 0.15: (0.71, 2.43),
              0.20: (0.73, 2.67), 0.25: (0.75, 3.00), 0.30: (0.78, 3.50)}
REF_LRR = {0.5: 1.70, 1.0: 1.80, 1.5: 1.84, 2.0: 1.87}
REF_COLLAPSE = {
    "low": {0.5: 32, 1.0: 24, 1.5: 20, 2.0: 18},
    "medium": {0.5: 26, 1.0: 21, 1.5: 18, 2.0: 16},
    "high": {0.5: 23, 1.0: 18, 1.5: 16, 2.0: 15},
}


def coupling():
    rep = coupling_grid(0.50, 0.10)
    print("coupling grid, eta=0.50 theta=0.10")
    print(f"  mean {rep.mean:.3f}%  max {rep.max:.3f}%  dominance {rep.dominance_counts()}")
    low = coupling_grid(0.10, 0.10)
    print(f"  (eta=0.10 for contrast: mean {low.mean:.3f}%  max {low.max:.3f}%)")


def feasibility():
    print("feasible beta_flow ranges (computed / reference)")
    for row in feasibility_table():
        ref = REF_RANGES.get(row["theta"])
        tail = f"  ref {ref[0]:.2f}-{ref[1]:.2f}" if ref else ""
        print(f"  theta {row['theta']:.2f}: {row['beta_min']:.3f}-{row['beta_max']:.3f}{tail}")
    for theta in (0.0, 0.10, 0.20):
        print(f"  premium at phi=0.30, beta=2, theta={theta:.2f}: {100 * premium_at(2.0, 0.30, theta):.1f}%")
    print("  ceilings at theta=0.10 (formula / printed reference)")
    for row in ceiling_table():
        print(f"    {row['profile']:<18} {row['beta_ceiling']:6.2f} / {row['reference_ceiling']:6.2f}  binding={row['binding']}")


def outflow(seed: int, jobs: int):
    axes = SweepAxes(beta_flows=tuple(REF_LRR), thetas=(0.10,), bounds=(("moderate", 0.6, 2.0),),
                     alphas=tuple(ALPHAS.values()), replications=20)
    t0 = time.perf_counter()
    cells = aggregate(run_sweep(axes, seed, jobs=jobs))
    print(f"outflow simulation, seed {seed} ({time.perf_counter() - t0:.2f}s)")
    names = {v: k for k, v in ALPHAS.items()}
    for c in cells:
        seg = names[c["alpha"]]
        b = c["beta_flow"]
        print(
            f"  {seg:<6} beta {b:.2f}: LRR {c['lrr_mean']:.3f} (ref {REF_LRR[b]:.2f})  "
            f"below-50 at {c['txns_until_below_50_mean']:.1f} (ref {REF_COLLAPSE[seg][b]}), "
            f"max {c['txns_until_below_50_max']}  sat@50 {c['sat_at_50_mean']:.2f}"
        )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    np.set_printoptions(precision=3)
    coupling()
    print()
    feasibility()
    print()
    outflow(args.seed, args.jobs)


if __name__ == "__main__":
    main()
