"""Brand-to-brand compensation flows computed on top of base settlement.

Sign convention for ``net``: positive means the destination brand pays the
source brand, negative means the source pays the destination. Under the
default ``"worked"`` convention the seasonal component is subtracted, so a
peak-season redemption costs the source brand extra. The ``"literal"``
convention adds all three components.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import InvalidParameterError, MarketFactors

CONVENTIONS = ("worked", "literal")


@dataclass(frozen=True)
class CompensationBreakdown:
    competition: float
    seasonal: float
    spillover: float
    net: float


def comp_competition(s_m: float, gamma_cannibal: float, kappa_ab: float) -> float:
    return s_m * gamma_cannibal * kappa_ab


def comp_seasonal(s_m: float, gamma_season: float, xi_b: float) -> float:
    return s_m * gamma_season * xi_b


def comp_spillover(s_m: float, gamma_synergy: float, sigma_ab: float, ltv_b: float = 1.0) -> float:
    return s_m * gamma_synergy * sigma_ab * ltv_b


def comp_total(
    competition: float, seasonal: float, spillover: float, convention: str = "worked"
) -> CompensationBreakdown:
    if convention == "worked":
        net = competition - seasonal + spillover
    elif convention == "literal":
        net = competition + seasonal + spillover
    else:
        raise InvalidParameterError(f"unknown compensation convention {convention!r}; expected {CONVENTIONS}")
    return CompensationBreakdown(competition, seasonal, spillover, net)


def compensate(s_m: float, factors: MarketFactors, convention: str = "worked") -> CompensationBreakdown:
    return comp_total(
        comp_competition(s_m, factors.gamma_cannibal, factors.kappa_ab),
        comp_seasonal(s_m, factors.gamma_season, factors.xi_b),
        comp_spillover(s_m, factors.gamma_synergy, factors.sigma_ab, factors.ltv_b),
        convention,
    )
