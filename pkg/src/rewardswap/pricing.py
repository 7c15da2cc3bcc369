"""Customer-facing price: what a customer pays in source-brand rewards.

Two paths are provided. ``full_customer_price`` evaluates the eight-factor
multiplicative model. ``operational_price`` is the broker-observable
relaxation that uses only transaction size and pool backing, with grace
thresholds and strategic clip bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    DegeneratePoolError,
    EmptyPoolError,
    InvalidParameterError,
    MarketFactors,
    PoolState,
    PricingParams,
    UnpricedBrandError,
    check_amount,
)


@dataclass(frozen=True)
class PriceBreakdown:
    base: float
    trans_factor: float = 1.0
    flow_factor: float = 1.0
    spillover_mult: float = 1.0
    cannibal_mult: float = 1.0
    demand_mult: float = 1.0
    season_mult: float = 1.0
    quality_mult: float = 1.0
    tier_mult: float = 1.0
    noise: float = 0.0
    mu: float = 0.0
    phi: float = 0.0
    phi_adjusted: float = 0.0
    final_raw: float = 0.0
    final_rounded: float = 0.0

    def multipliers(self) -> tuple[float, ...]:
        return (
            self.trans_factor,
            self.flow_factor,
            self.spillover_mult,
            self.cannibal_mult,
            self.demand_mult,
            self.season_mult,
            self.quality_mult,
            self.tier_mult,
        )


def base_price(y: float, p_b: float, p_a: float) -> float:
    """Source rewards of equal dollar value to ``y`` destination rewards."""
    check_amount("Y", y)
    if p_a == 0:
        raise UnpricedBrandError("source brand has zero reward price (P_A = 0)")
    if p_a < 0 or p_b <= 0:
        raise InvalidParameterError(f"prices must be positive, got P_A={p_a!r}, P_B={p_b!r}")
    return y * p_b / p_a


def utilization(m: float, m_a: float) -> float:
    if m_a <= 0:
        raise EmptyPoolError("source pool holds no M assets; no exchange possible")
    return m / m_a


def trans_factor(mu: float, eta: float, beta_trans: float) -> float:
    return 1.0 + beta_trans * max(0.0, (mu - eta) / (1.0 - eta))


def flow_indicator(pool: PoolState) -> float:
    """Relative shortfall of current backing against the pool's target ratio.

    Positive means underbacked. Evaluated against the pool's current
    ``r_optimal`` so governance updates take effect immediately.
    """
    if pool.m_current <= 0 or pool.x_current <= 0:
        raise DegeneratePoolError(
            f"pool {pool.brand} is degenerate (M={pool.m_current!r}, X={pool.x_current!r})"
        )
    return pool.r_optimal * pool.x_current / pool.m_current - 1.0


def flow_threshold_adjust(phi: float, theta: float) -> float:
    """Zero inside the grace band ``|phi| <= theta``, rescaled linearly outside it."""
    return math.copysign(max(0.0, (abs(phi) - theta) / (1.0 - theta)), phi) if phi != 0 else 0.0


def clip(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def flow_factor_bounded(phi_adjusted: float, params: PricingParams) -> float:
    return clip(1.0 + params.beta_flow * phi_adjusted, params.b_flow_min, params.b_flow_max)


def trans_factor_bounded(mu: float, params: PricingParams) -> float:
    return clip(trans_factor(mu, params.eta, params.beta_trans), 1.0, params.b_trans_max)


def round_customer_price(raw: float) -> float:
    """Nearest integer, halves away from zero."""
    check_amount("raw price", raw)
    return float(math.floor(raw + 0.5))


def operational_price(m: float, pool: PoolState, params: PricingParams) -> PriceBreakdown:
    """Operational two-factor price of settling ``m`` assets out of ``pool``.

    The result is in asset units; divide by the source reward price to get
    source rewards.
    """
    check_amount("m", m)
    mu = utilization(m, pool.m_current)
    phi = flow_indicator(pool)
    phi_adj = flow_threshold_adjust(phi, params.theta)
    t = trans_factor_bounded(mu, params)
    f = flow_factor_bounded(phi_adj, params)
    raw = m * t * f
    return PriceBreakdown(
        base=m,
        trans_factor=t,
        flow_factor=f,
        mu=mu,
        phi=phi,
        phi_adjusted=phi_adj,
        final_raw=raw,
        final_rounded=round_customer_price(raw),
    )


def full_customer_price(
    base: float,
    mu: float,
    factors: MarketFactors,
    params: PricingParams,
    phi: float,
    *,
    noise_sd: float = 0.0,
    rng=None,
) -> PriceBreakdown:
    """Eight-factor multiplicative customer price.

    Transaction and flow terms are unthresholded and unclipped here; only
    ``eta`` gates the size premium. ``noise_sd > 0`` adds a normal draw from
    ``rng`` (a ``numpy.random.Generator``) to the final price.
    """
    t = trans_factor(mu, params.eta, params.beta_trans)
    f = 1.0 + params.beta_flow * phi
    spill = 1.0 - factors.beta_spillover * factors.sigma_ab
    cannibal = 1.0 + factors.beta_cannibal * factors.kappa_ab
    demand = 1.0 + factors.beta_demand * factors.delta_b
    season = 1.0 + factors.beta_season * factors.xi_b
    quality = 1.0 + factors.beta_quality * (1.0 - factors.rho_b)
    tier = 1.0 + factors.omega
    noise = 0.0
    if noise_sd > 0:
        if rng is None:
            raise InvalidParameterError("noise_sd > 0 requires an rng")
        noise = float(rng.normal(0.0, noise_sd))
    raw = base * t * f * spill * cannibal * demand * season * quality * tier + noise
    return PriceBreakdown(
        base=base,
        trans_factor=t,
        flow_factor=f,
        spillover_mult=spill,
        cannibal_mult=cannibal,
        demand_mult=demand,
        season_mult=season,
        quality_mult=quality,
        tier_mult=tier,
        noise=noise,
        mu=mu,
        phi=phi,
        phi_adjusted=phi,
        final_raw=raw,
        final_rounded=round_customer_price(max(raw, 0.0)),
    )


def premium_discount_terms(
    factors: MarketFactors, params: PricingParams, mu: float, phi: float
) -> tuple[dict[str, float], dict[str, float]]:
    """Split the factor adjustments into premium and discount magnitudes.

    The tier term enters with the same sign it has in the multiplicative
    model (``1 + omega``), so positive omega is listed as a premium.
    """
    premiums: dict[str, float] = {}
    discounts: dict[str, float] = {}

    def put(name, signed):
        if signed > 0:
            premiums[name] = signed
        elif signed < 0:
            discounts[name] = -signed

    premiums["cannibal"] = factors.beta_cannibal * factors.kappa_ab
    discounts["spillover"] = factors.beta_spillover * factors.sigma_ab
    put("demand", factors.beta_demand * factors.delta_b)
    put("season", factors.beta_season * factors.xi_b)
    premiums["trans"] = params.beta_trans * max(0.0, (mu - params.eta) / (1.0 - params.eta))
    put("flow", params.beta_flow * phi)
    premiums["quality"] = factors.beta_quality * (1.0 - factors.rho_b)
    put("tier", factors.omega)
    return premiums, discounts


def premium_discount_form(
    base: float, factors: MarketFactors, params: PricingParams, mu: float, phi: float
) -> float:
    """First-order additive form: base * (1 + sum(premiums) - sum(discounts))."""
    premiums, discounts = premium_discount_terms(factors, params, mu, phi)
    return base * (1.0 + sum(premiums.values()) - sum(discounts.values()))
