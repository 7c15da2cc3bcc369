"""Single-pool pure-outflow stress simulation and parameter sweeps.

Every transaction redeems against the pool: M leaves at the target backing
ratio while the customer's flow-priced payment accumulates on the reward
side, so the pool drifts steadily toward underbacking. Satisfaction does
not feed back into pricing.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..core import InvalidParameterError, PricingParams
from ..metrics import satisfaction_target, trajectory_stats
from ..pricing import flow_factor_bounded, flow_threshold_adjust, trans_factor_bounded
from .rng import derive_seed, redemption_sizes

ALPHAS = {"low": 0.010, "medium": 0.019, "high": 0.030}
SWEEP_BOUNDS = {"moderate": (0.6, 2.0), "conservative": (0.7, 1.5)}


def default_params() -> PricingParams:
    return PricingParams(beta_trans=1.0, beta_flow=1.0, eta=0.5, theta=0.10, b_flow_min=0.6, b_flow_max=2.0)


@dataclass(frozen=True)
class SimConfig:
    m0: float = 10_000.0
    x0: float = 10_000.0
    redemption_mean: float = 50.0
    redemption_std: float = 15.0
    whale_prob: float = 0.10
    whale_size: float = 200.0
    n_transactions: int = 1000
    halt_fraction: float = 0.05
    params: PricingParams = field(default_factory=default_params)
    alpha: float = 0.019
    lam: float = 0.2
    beta_exp: float = 1.4
    seed: int = 0
    replications: int = 1
    keep_trajectory: bool = False

    def __post_init__(self):
        if not (self.m0 > 0 and self.x0 > 0):
            raise InvalidParameterError("m0 and x0 must be positive")
        if not 0.0 < self.halt_fraction < 1.0:
            raise InvalidParameterError(f"halt_fraction must be in (0, 1), got {self.halt_fraction!r}")
        if self.replications < 1 or self.n_transactions < 1:
            raise InvalidParameterError("replications and n_transactions must be >= 1")
        if self.redemption_mean <= 0 or self.redemption_std < 0 or self.whale_size <= 0:
            raise InvalidParameterError("redemption sizes must be positive")
        if not 0.0 <= self.whale_prob <= 1.0:
            raise InvalidParameterError(f"whale_prob must be in [0, 1], got {self.whale_prob!r}")
        if not (self.alpha > 0 and self.beta_exp > 0 and 0 < self.lam <= 1):
            raise InvalidParameterError("need alpha > 0, beta_exp > 0, 0 < lambda <= 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameterError("seed must be an unsigned 64-bit integer")

    def with_params(self, **changes) -> SimConfig:
        return replace(self, params=self.params.replace(**changes))


@dataclass
class SimResult:
    seed: int
    final_lrr: float
    final_satisfaction: float
    sat_at_50: float
    txns_until_below_50: int | None
    avg_premium: float
    p90_premium: float
    halted_at: int | None
    n_executed: int
    trajectory: dict | None = None


def simulate(config: SimConfig, seed: int) -> SimResult:
    """One replication driven by the stream for ``seed``."""
    p = config.params
    m0, x0 = config.m0, config.x0
    r_opt = m0 / x0
    floor = config.halt_fraction * m0
    sizes = redemption_sizes(
        seed,
        config.n_transactions,
        config.redemption_mean,
        config.redemption_std,
        config.whale_prob,
        config.whale_size,
    ).tolist()

    m, x = m0, x0
    paid = collected = 0.0
    sat = 100.0
    lam, alpha, beta_exp = config.lam, config.alpha, config.beta_exp
    sats, prems = [], []
    traj = {"m": [], "x": [], "phi": [], "flow_factor": [], "trans_factor": [], "redemption": [], "lrr": []}
    halted_at = None

    for t, r in enumerate(sizes):
        phi = m0 * x / (x0 * m) - 1.0
        ff = flow_factor_bounded(flow_threshold_adjust(phi, p.theta), p)
        out = r * r_opt
        truncated = m - out < floor
        if truncated:
            out = m - floor
            r = out / r_opt
        tf = trans_factor_bounded(out / m, p)
        m = floor if truncated else m - out
        x += r * ff
        paid += out
        collected += r * ff * r_opt
        premium = (ff - 1.0) * 100.0
        sat = (1.0 - lam) * sat + lam * satisfaction_target(max(premium, 0.0), alpha, beta_exp)
        sats.append(sat)
        prems.append(premium)
        if config.keep_trajectory:
            for k, v in (("m", m), ("x", x), ("phi", phi), ("flow_factor", ff), ("trans_factor", tf),
                         ("redemption", r), ("lrr", collected / paid if paid > 0 else 1.0)):
                traj[k].append(v)
        if m <= floor:
            halted_at = t + 1
            break

    stats = trajectory_stats(sats, prems)
    if config.keep_trajectory:
        traj["satisfaction"] = sats
        traj["premium_pct"] = prems
    return SimResult(
        seed=seed,
        final_lrr=collected / paid if paid > 0 else 1.0,
        final_satisfaction=sats[-1],
        sat_at_50=stats.sat_at_50,
        txns_until_below_50=stats.txns_until_below_50,
        avg_premium=stats.avg_premium,
        p90_premium=stats.p90_premium,
        halted_at=halted_at,
        n_executed=len(sats),
        trajectory=traj if config.keep_trajectory else None,
    )


def run_experiment3(config: SimConfig) -> list[SimResult]:
    """All replications of one configuration; replication ``r`` uses cell 0's stream ``r``."""
    return [simulate(config, derive_seed(config.seed, 0, r)) for r in range(config.replications)]


def summarize(results: list[SimResult]) -> dict:
    def stat(values):
        arr = np.asarray(values, dtype=float)
        return float(arr.mean()), float(arr.std())

    lrr_mean, lrr_std = stat([r.final_lrr for r in results])
    below = [r.txns_until_below_50 for r in results if r.txns_until_below_50 is not None]
    out = {
        "replications": len(results),
        "lrr_mean": lrr_mean,
        "lrr_std": lrr_std,
        "final_satisfaction_mean": stat([r.final_satisfaction for r in results])[0],
        "sat_at_50_mean": stat([r.sat_at_50 for r in results])[0],
        "txns_until_below_50_mean": float(np.mean(below)) if below else None,
        "txns_until_below_50_max": max(below) if below else None,
        "never_below_50": len(results) - len(below),
        "avg_premium_mean": stat([r.avg_premium for r in results])[0],
        "p90_premium_mean": stat([r.p90_premium for r in results])[0],
    }
    return out


@dataclass(frozen=True)
class SweepAxes:
    """Sweep grid. Customer segments (alphas) share random streams so their LRRs coincide."""

    beta_flows: tuple[float, ...]
    thetas: tuple[float, ...] = (0.00, 0.05, 0.10, 0.15, 0.20)
    bounds: tuple[tuple[str, float, float], ...] = tuple((k, *v) for k, v in SWEEP_BOUNDS.items())
    alphas: tuple[float, ...] = tuple(ALPHAS.values())
    replications: int = 20

    def scenarios(self):
        return list(itertools.product(self.beta_flows, self.thetas, self.bounds))

    def cells(self):
        """``(cell_index, scenario_index, beta_flow, theta, bounds, alpha)`` in output order."""
        out = []
        for s, (b, th, bd) in enumerate(self.scenarios()):
            for alpha in self.alphas:
                out.append((len(out), s, b, th, bd, alpha))
        return out

    def size(self) -> int:
        return len(self.beta_flows) * len(self.thetas) * len(self.bounds) * len(self.alphas) * self.replications


def full_axes() -> SweepAxes:
    return SweepAxes(beta_flows=tuple(round(0.50 + 0.01 * i, 2) for i in range(151)))


def frange(start: float, stop: float, step: float) -> tuple[float, ...]:
    """Inclusive float range, rounded to absorb step accumulation."""
    if step <= 0:
        raise InvalidParameterError("step must be positive")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 10) for i in range(max(n, 0)))


def _run_cell(task) -> list[dict]:
    cell, scenario, beta, theta, (bname, lo, hi), alpha, base, master, reps = task
    cfg = replace(base, alpha=alpha, params=base.params.replace(beta_flow=beta, theta=theta, b_flow_min=lo, b_flow_max=hi))
    rows = []
    for rep in range(reps):
        seed = derive_seed(master, scenario, rep)
        res = simulate(cfg, seed)
        rows.append(
            {
                "cell": cell,
                "beta_flow": beta,
                "theta": theta,
                "bounds": bname,
                "b_flow_min": lo,
                "b_flow_max": hi,
                "alpha": alpha,
                "replication": rep,
                "seed": seed,
                "final_lrr": res.final_lrr,
                "final_satisfaction": res.final_satisfaction,
                "sat_at_50": res.sat_at_50,
                "txns_until_below_50": res.txns_until_below_50,
                "avg_premium": res.avg_premium,
                "p90_premium": res.p90_premium,
                "halted_at": res.halted_at,
            }
        )
    return rows


def run_sweep(axes: SweepAxes, master_seed: int, base: SimConfig | None = None, jobs: int = 1) -> list[dict]:
    """One row per (cell, replication), ordered by cell index then replication.

    Cells run in worker processes when ``jobs > 1``; seeds depend only on the
    cell position, so output is identical for any ``jobs``.
    """
    base = base or SimConfig()
    tasks = [(c, s, b, th, bd, a, base, master_seed, axes.replications) for c, s, b, th, bd, a in axes.cells()]
    if jobs <= 1:
        chunks = map(_run_cell, tasks)
        return [row for chunk in chunks for row in chunk]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        chunks = pool.map(_run_cell, tasks, chunksize=max(1, len(tasks) // (4 * jobs)))
        return [row for chunk in chunks for row in chunk]


def aggregate(rows: list[dict]) -> list[dict]:
    """Per-cell means and standard deviations, in cell order."""
    by_cell: dict[int, list[dict]] = {}
    for row in rows:
        by_cell.setdefault(row["cell"], []).append(row)
    out = []
    for cell in sorted(by_cell):
        group = by_cell[cell]
        first = group[0]
        below = [g["txns_until_below_50"] for g in group if g["txns_until_below_50"] is not None]
        lrr = np.array([g["final_lrr"] for g in group])
        sat50 = np.array([g["sat_at_50"] for g in group])
        out.append(
            {
                "cell": cell,
                "beta_flow": first["beta_flow"],
                "theta": first["theta"],
                "bounds": first["bounds"],
                "alpha": first["alpha"],
                "replications": len(group),
                "lrr_mean": float(lrr.mean()),
                "lrr_std": float(lrr.std()),
                "sat_at_50_mean": float(sat50.mean()),
                "sat_at_50_std": float(sat50.std()),
                "txns_until_below_50_mean": float(np.mean(below)) if below else None,
                "txns_until_below_50_max": max(below) if below else None,
                "never_below_50": len(group) - len(below),
                "avg_premium_mean": float(np.mean([g["avg_premium"] for g in group])),
                "p90_premium_mean": float(np.mean([g["p90_premium"] for g in group])),
            }
        )
    return out
