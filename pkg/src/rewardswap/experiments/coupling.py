"""Interaction between the transaction-size and flow factors.

For every operating point the total price multiplier is evaluated with only
the size factor active, with only the flow factor active, and with both.
Coupling is the relative gap between the joint multiplier and the additive
prediction ``T + F - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import PROFILE_NAMES, profile

MU_RANGE = (0.0, 0.20)
PHI_RANGE = (-0.50, 1.00)
GRID_SIZE = 100
THRESHOLD_GRID = tuple(round(0.10 + 0.05 * i, 2) for i in range(17))
SCENARIOS = {"normal": (0.01, 0.10), "crisis": (0.15, 0.50)}
# (eta, theta) pairs used for the threshold dominance maps and combined analysis
REPRESENTATIVE_THRESHOLDS = ((0.30, 0.05), (0.30, 0.20), (0.50, 0.10), (0.50, 0.30), (0.70, 0.10), (0.70, 0.20))

TRANS, FLOW, BOTH = "trans", "flow", "both"


def coupling_pct(t, f):
    """Coupling percentage of a trans multiplier ``t`` and a flow multiplier ``f``."""
    both = np.multiply(t, f)
    gap = np.abs(both - (np.add(t, f) - 1.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(both > 0.01, gap / both * 100.0, 0.0)
    return float(c) if np.ndim(c) == 0 else c


def dominance(premium_trans, premium_flow):
    """Which factor drives the premium, by the 1.5x rule."""
    pt = np.abs(premium_trans)
    pf = np.abs(premium_flow)
    out = np.where(pt > 1.5 * pf, TRANS, np.where(pf > 1.5 * pt, FLOW, BOTH))
    return str(out) if np.ndim(out) == 0 else out


def factor_multipliers(mu, phi, eta, theta, beta_trans=1.0, beta_flow=1.0, bounds=None):
    """Vectorized trans and flow multipliers; ``bounds`` is (b_flow_min, b_flow_max, b_trans_max)."""
    mu = np.asarray(mu, dtype=float)
    phi = np.asarray(phi, dtype=float)
    t = 1.0 + beta_trans * np.maximum(0.0, (mu - eta) / (1.0 - eta))
    adj = np.sign(phi) * np.maximum(0.0, (np.abs(phi) - theta) / (1.0 - theta))
    f = 1.0 + beta_flow * adj
    if bounds is not None:
        lo, hi, tmax = bounds
        t = np.clip(t, 1.0, tmax)
        f = np.clip(f, lo, hi)
    return t, f


def _p95(values: np.ndarray) -> float:
    ordered = np.sort(values, axis=None)
    return float(ordered[max(1, math.ceil(0.95 * ordered.size)) - 1])


@dataclass
class CouplingReport:
    label: str
    eta: float
    theta: float
    bounds: tuple[float, float, float] | None
    mu: np.ndarray
    phi: np.ndarray
    p_trans: np.ndarray
    p_flow: np.ndarray
    p_both: np.ndarray
    coupling: np.ndarray
    dominance: np.ndarray
    mean: float = field(init=False)
    max: float = field(init=False)
    p95: float = field(init=False)

    def __post_init__(self):
        self.mean = float(self.coupling.mean())
        self.max = float(self.coupling.max())
        self.p95 = _p95(self.coupling)

    def dominance_counts(self) -> dict[str, int]:
        return {k: int((self.dominance == k).sum()) for k in (TRANS, FLOW, BOTH)}

    def rows(self):
        """Long-format rows ``(mu, phi, P_trans, P_flow, P_both, coupling, dominance)``."""
        for i, m in enumerate(self.mu):
            for j, p in enumerate(self.phi):
                yield (
                    float(m),
                    float(p),
                    float(self.p_trans[i, j]),
                    float(self.p_flow[i, j]),
                    float(self.p_both[i, j]),
                    float(self.coupling[i, j]),
                    str(self.dominance[i, j]),
                )


def coupling_grid(
    eta: float,
    theta: float,
    *,
    beta_trans: float = 1.0,
    beta_flow: float = 1.0,
    bounds=None,
    n: int = GRID_SIZE,
    label: str = "",
) -> CouplingReport:
    """Coupling and dominance over an ``n x n`` grid of (mu, phi); axis 0 is mu."""
    mu = np.linspace(*MU_RANGE, n)
    phi = np.linspace(*PHI_RANGE, n)
    mm, pp = np.meshgrid(mu, phi, indexing="ij")
    t, f = factor_multipliers(mm, pp, eta, theta, beta_trans, beta_flow, bounds)
    return CouplingReport(
        label=label or f"eta={eta:.2f},theta={theta:.2f}",
        eta=eta,
        theta=theta,
        bounds=bounds,
        mu=mu,
        phi=phi,
        p_trans=t,
        p_flow=f,
        p_both=t * f,
        coupling=coupling_pct(t, f),
        dominance=dominance(t - 1.0, f - 1.0),
    )


def profile_bounds(name: str) -> tuple[float, float, float]:
    p = profile(name).params
    return (p.b_flow_min, p.b_flow_max, p.b_trans_max)


@dataclass
class Experiment1Result:
    threshold_rows: list[dict]
    profile_reports: list[CouplingReport]
    combined_rows: list[dict]
    headline: CouplingReport
    maps: list[CouplingReport]

    def summary(self) -> dict:
        means = [r["grid_mean"] for r in self.threshold_rows]
        maxes = [r["grid_max"] for r in self.threshold_rows]
        return {
            "headline": {
                "eta": self.headline.eta,
                "theta": self.headline.theta,
                "mean_coupling_pct": self.headline.mean,
                "max_coupling_pct": self.headline.max,
                "p95_coupling_pct": self.headline.p95,
                "dominance_counts": self.headline.dominance_counts(),
            },
            "threshold_sweep": {
                "configurations": len(self.threshold_rows),
                "mean_of_means_pct": float(np.mean(means)),
                "worst_mean_pct": float(np.max(means)),
                "worst_max_pct": float(np.max(maxes)),
                "scenario_max_pct": {
                    s: float(max(r[f"{s}_coupling"] for r in self.threshold_rows)) for s in SCENARIOS
                },
            },
            "profiles": {
                r.label: {"mean_pct": r.mean, "max_pct": r.max, "p95_pct": r.p95} for r in self.profile_reports
            },
            "combined": {
                "configurations": len(self.combined_rows),
                "worst_mean_pct": float(max(r["grid_mean"] for r in self.combined_rows)),
                "worst_max_pct": float(max(r["grid_max"] for r in self.combined_rows)),
            },
        }


def run_experiment1(
    etas=THRESHOLD_GRID,
    thetas=THRESHOLD_GRID,
    profiles=PROFILE_NAMES,
    *,
    n: int = GRID_SIZE,
    beta_trans: float = 1.0,
    beta_flow: float = 1.0,
    headline=(0.50, 0.10),
    combined_pairs=REPRESENTATIVE_THRESHOLDS,
) -> Experiment1Result:
    threshold_rows = []
    for eta in etas:
        for theta in thetas:
            rep = coupling_grid(eta, theta, beta_trans=beta_trans, beta_flow=beta_flow, n=n)
            row = {"eta": eta, "theta": theta, "grid_mean": rep.mean, "grid_max": rep.max, "grid_p95": rep.p95}
            for name, (mu, phi) in SCENARIOS.items():
                t, f = factor_multipliers(mu, phi, eta, theta, beta_trans, beta_flow)
                row[f"{name}_coupling"] = coupling_pct(float(t), float(f))
                row[f"{name}_dominance"] = dominance(float(t) - 1.0, float(f) - 1.0)
            threshold_rows.append(row)

    h_eta, h_theta = headline
    profile_reports = [
        coupling_grid(
            h_eta, h_theta, beta_trans=beta_trans, beta_flow=beta_flow, bounds=profile_bounds(p), n=n, label=p
        )
        for p in profiles
    ]

    combined_rows = []
    for eta, theta in combined_pairs:
        for p in profiles:
            b = profile_bounds(p)
            rep = coupling_grid(eta, theta, beta_trans=beta_trans, beta_flow=beta_flow, bounds=b, n=n)
            mu, phi = SCENARIOS["crisis"]
            t, f = factor_multipliers(mu, phi, eta, theta, beta_trans, beta_flow, b)
            combined_rows.append(
                {
                    "eta": eta,
                    "theta": theta,
                    "profile": p,
                    "grid_mean": rep.mean,
                    "grid_max": rep.max,
                    "crisis_coupling": coupling_pct(float(t), float(f)),
                }
            )

    headline_rep = coupling_grid(h_eta, h_theta, beta_trans=beta_trans, beta_flow=beta_flow, n=n)
    maps = [coupling_grid(e, t, beta_trans=beta_trans, beta_flow=beta_flow, n=n) for e, t in combined_pairs]
    return Experiment1Result(threshold_rows, profile_reports, combined_rows, headline_rep, maps)
