"""Feasible flow-sensitivity ranges as a function of the flow grace threshold."""

from __future__ import annotations

import math

from ..core import PROFILE_NAMES, profile

PHI_SEVERE = 0.50
PHI_ATTACK = 0.75
MAX_TOLERATED_PREMIUM = 1.0
MIN_DETERRENT_PREMIUM = 0.50
PHI_TYPICAL = 0.30

TABLE_THETAS = (0.00, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.50)
CURVE_THETAS = (0.00, 0.10, 0.20)
# reference ceiling values listed alongside the profile bounds, kept for comparison
REFERENCE_CEILINGS = {
    "ultra_conservative": 3.33,
    "conservative": 5.56,
    "moderate": 11.11,
    "aggressive": 22.22,
    "ultra_aggressive": 33.33,
}


def adjusted(phi: float, theta: float) -> float:
    return max(0.0, (phi - theta) / (1.0 - theta))


def beta_max(theta: float) -> float:
    """Largest sensitivity keeping the premium at severe imbalance within tolerance."""
    a = adjusted(PHI_SEVERE, theta)
    return MAX_TOLERATED_PREMIUM / a if a > 0 else math.inf


def beta_min(theta: float) -> float:
    """Smallest sensitivity that still deters at the attack imbalance."""
    a = adjusted(PHI_ATTACK, theta)
    return MIN_DETERRENT_PREMIUM / a if a > 0 else math.inf


def beta_ceiling(b_flow_max: float, theta: float, phi_typical: float = PHI_TYPICAL) -> float:
    a = adjusted(phi_typical, theta)
    return (b_flow_max - 1.0) / a if a > 0 else math.inf


def premium_at(beta_flow: float, phi: float, theta: float) -> float:
    """Unbounded flow premium as a fraction (0.44 means 44%)."""
    return beta_flow * adjusted(phi, theta)


def feasibility_table(thetas=TABLE_THETAS) -> list[dict]:
    rows = []
    for theta in thetas:
        lo, hi = beta_min(theta), beta_max(theta)
        rows.append(
            {
                "theta": theta,
                "phi_severe_adj": adjusted(PHI_SEVERE, theta),
                "phi_attack_adj": adjusted(PHI_ATTACK, theta),
                "beta_min": lo,
                "beta_max": hi,
                "width": hi - lo,
            }
        )
    return rows


def ceiling_table(theta: float = 0.10, phi_typical: float = PHI_TYPICAL, profiles=PROFILE_NAMES) -> list[dict]:
    """Per-profile ceiling; a bound binds when its ceiling is below the tolerance cap."""
    cap = beta_max(theta)
    rows = []
    for name in profiles:
        p = profile(name).params
        ceiling = beta_ceiling(p.b_flow_max, theta, phi_typical)
        rows.append(
            {
                "profile": name,
                "b_flow_min": p.b_flow_min,
                "b_flow_max": p.b_flow_max,
                "beta_ceiling": ceiling,
                "reference_ceiling": REFERENCE_CEILINGS.get(name, math.nan),
                "tolerance_cap": cap,
                "binding": ceiling < cap,
            }
        )
    return rows


def premium_curves(thetas=CURVE_THETAS, phi: float = PHI_TYPICAL, betas=None) -> list[dict]:
    if betas is None:
        betas = [round(0.05 * i, 2) for i in range(61)]
    return [
        {"theta": theta, "beta_flow": b, "premium_pct": 100.0 * premium_at(b, phi, theta)}
        for theta in thetas
        for b in betas
    ]


def run_experiment2() -> dict:
    return {
        "feasibility": feasibility_table(),
        "ceilings": ceiling_table(),
        "premium_curves": premium_curves(),
    }
