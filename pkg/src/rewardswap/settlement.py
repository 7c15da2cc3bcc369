"""Pool lifecycle and atomic cross-brand redemptions.

A redemption of ``y`` destination rewards moves ``y * P_B`` M assets from the
source pool to the destination pool, nets the compensation transfer into the
same step, releases ``y`` rewards from the destination inventory and credits
the customer's paid source rewards to the source pool. Reward prices are the
pools' declared backing ratios (``r_optimal``).

Callers must serialize access to the pools passed to ``execute_exchange``;
no locking is done here.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from . import pricing
from .compensation import compensate
from .core import (
    DEFAULT_LOCK_TICKS,
    MAX_LOCK_TICKS,
    MIN_LOCK_TICKS,
    DestCapacityError,
    ExchangeReceipt,
    InvalidParameterError,
    MarketFactors,
    OverWithdrawalError,
    PoolState,
    PricingParams,
    SourceCapacityError,
    check_amount,
    check_brand_id,
)

logger = logging.getLogger(__name__)

PRICING_MODES = ("full_factor", "operational")
CREDIT_MODES = ("credit", "burn")


@dataclass(frozen=True)
class EngineConfig:
    """Settlement options.

    ``credit_mode="burn"`` discards the customer's paid source rewards instead
    of crediting them to the source pool.
    """

    lock_ticks: int = DEFAULT_LOCK_TICKS
    credit_mode: str = "credit"
    compensation_convention: str = "worked"

    def __post_init__(self):
        if not MIN_LOCK_TICKS <= int(self.lock_ticks) <= MAX_LOCK_TICKS:
            raise InvalidParameterError(
                f"lock_ticks must be in [{MIN_LOCK_TICKS}, {MAX_LOCK_TICKS}], got {self.lock_ticks!r}"
            )
        if self.credit_mode not in CREDIT_MODES:
            raise InvalidParameterError(f"credit_mode must be one of {CREDIT_MODES}, got {self.credit_mode!r}")
        if self.compensation_convention not in ("worked", "literal"):
            raise InvalidParameterError(
                f"compensation_convention must be 'worked' or 'literal', got {self.compensation_convention!r}"
            )


@dataclass(frozen=True)
class ExchangeRequest:
    source: str
    dest: str
    y: float
    factors: MarketFactors = field(default_factory=MarketFactors)
    params: PricingParams = field(default_factory=PricingParams)
    pricing_mode: str = "full_factor"

    def __post_init__(self):
        check_brand_id(self.source)
        check_brand_id(self.dest)
        if self.source == self.dest:
            raise InvalidParameterError("source and dest must differ")
        if check_amount("Y", self.y) <= 0:
            raise InvalidParameterError(f"Y must be > 0, got {self.y!r}")
        if self.pricing_mode not in PRICING_MODES:
            raise InvalidParameterError(f"pricing_mode must be one of {PRICING_MODES}, got {self.pricing_mode!r}")


@dataclass(frozen=True)
class WithdrawalRequest:
    brand: str
    amount: float
    requested_at: int
    unlock_at: int


def open_pool(brand: str, x_deposit: float, m_deposit: float) -> PoolState:
    """Create a pool whose target backing ratio is the deposit ratio."""
    check_brand_id(brand)
    x = check_amount("X_deposit", x_deposit)
    m = check_amount("M_deposit", m_deposit)
    if x <= 0 or m <= 0:
        raise InvalidParameterError(f"deposits must be > 0, got X={x!r}, M={m!r}")
    return PoolState(brand=brand, m_initial=m, x_initial=x, m_current=m, x_current=x, r_optimal=m / x)


def required_settlement(y: float, p_b: float) -> float:
    check_amount("Y", y)
    if p_b <= 0:
        raise InvalidParameterError(f"P_B must be > 0, got {p_b!r}")
    return y * p_b


def set_r_optimal(pool: PoolState, new_r: float) -> PoolState:
    if not new_r > 0 or new_r == float("inf"):
        raise InvalidParameterError(f"R_optimal must be a positive finite number, got {new_r!r}")
    pool.r_optimal = float(new_r)
    return pool


def _customer_price(req: ExchangeRequest, source: PoolState, p_a: float, p_b: float, s_m: float):
    if req.pricing_mode == "operational":
        bd = pricing.operational_price(s_m, source, req.params)
        raw = bd.final_raw / p_a
        factors = {
            "mode": "operational",
            "mu": bd.mu,
            "phi": bd.phi,
            "phi_adjusted": bd.phi_adjusted,
            "trans_factor": bd.trans_factor,
            "flow_factor": bd.flow_factor,
        }
        return raw, factors
    base = pricing.base_price(req.y, p_b, p_a)
    mu = pricing.utilization(s_m, source.m_current)
    phi = pricing.flow_indicator(source)
    bd = pricing.full_customer_price(base, mu, req.factors, req.params, phi)
    f = req.factors
    factors = {
        "mode": "full_factor",
        "base": base,
        "mu": mu,
        "phi": phi,
        "sigma_ab": f.sigma_ab,
        "kappa_ab": f.kappa_ab,
        "delta_b": f.delta_b,
        "xi_b": f.xi_b,
        "rho_b": f.rho_b,
        "omega": f.omega,
        "trans_factor": bd.trans_factor,
        "flow_factor": bd.flow_factor,
        "spillover_mult": bd.spillover_mult,
        "cannibal_mult": bd.cannibal_mult,
        "demand_mult": bd.demand_mult,
        "season_mult": bd.season_mult,
        "quality_mult": bd.quality_mult,
        "tier_mult": bd.tier_mult,
    }
    return bd.final_raw, factors


def quote_exchange(
    req: ExchangeRequest,
    source_pool: PoolState,
    dest_pool: PoolState,
    config: EngineConfig | None = None,
    *,
    tick: int | None = None,
) -> ExchangeReceipt:
    """Price, settle and compensate a redemption without touching either pool."""
    config = config or EngineConfig()
    if source_pool.brand != req.source or dest_pool.brand != req.dest:
        raise InvalidParameterError(
            f"pools ({source_pool.brand}, {dest_pool.brand}) do not match request ({req.source}, {req.dest})"
        )
    if dest_pool.x_current < req.y:
        raise DestCapacityError(
            f"{req.dest} holds {dest_pool.x_current!r} rewards, {req.y!r} requested"
        )
    p_a = source_pool.r_optimal
    p_b = dest_pool.r_optimal
    s_m = required_settlement(req.y, p_b)
    raw, factors = _customer_price(req, source_pool, p_a, p_b, s_m)
    comp = compensate(s_m, req.factors, config.compensation_convention)
    source_pays = s_m + max(0.0, -comp.net)
    if source_pool.m_current < source_pays:
        raise SourceCapacityError(
            f"{req.source} holds {source_pool.m_current!r} M, needs {source_pays!r}"
        )
    if dest_pool.m_current + s_m - comp.net < 0:
        raise DestCapacityError(
            f"{req.dest} cannot fund compensation {comp.net!r} from {dest_pool.m_current + s_m!r} M"
        )
    return ExchangeReceipt(
        source=req.source,
        dest=req.dest,
        y=req.y,
        customer_price_rewards=pricing.round_customer_price(max(raw, 0.0)),
        customer_price_raw=raw,
        settlement_m=s_m,
        comp_competition=comp.competition,
        comp_seasonal=comp.seasonal,
        comp_spillover=comp.spillover,
        comp_net=comp.net,
        factors_applied=factors,
        tick=tick,
    )


def execute_exchange(
    req: ExchangeRequest,
    source_pool: PoolState,
    dest_pool: PoolState,
    now: int = 0,
    config: EngineConfig | None = None,
) -> ExchangeReceipt:
    """Apply a redemption to both pools; on any error neither pool changes."""
    config = config or EngineConfig()
    receipt = quote_exchange(req, source_pool, dest_pool, config, tick=now)
    # every new value is computed before the first assignment
    transfer = receipt.settlement_m - receipt.comp_net
    src_m = source_pool.m_current - transfer
    dst_m = dest_pool.m_current + transfer
    dst_x = dest_pool.x_current - req.y
    src_x = source_pool.x_current
    if config.credit_mode == "credit":
        src_x += receipt.customer_price_rewards
    if src_m < 0 or dst_m < 0 or dst_x < 0:
        raise SourceCapacityError("exchange would drive a pool balance negative")
    src_out, dst_in = source_pool.outflow_total, dest_pool.inflow_total
    src_in, dst_out = source_pool.inflow_total, dest_pool.outflow_total
    if transfer >= 0:
        src_out += transfer
        dst_in += transfer
    else:
        src_in -= transfer
        dst_out -= transfer

    source_pool.m_current, source_pool.x_current = src_m, src_x
    source_pool.inflow_total, source_pool.outflow_total = src_in, src_out
    dest_pool.m_current, dest_pool.x_current = dst_m, dst_x
    dest_pool.inflow_total, dest_pool.outflow_total = dst_in, dst_out
    logger.debug("exchange %s->%s y=%s transfer=%s", req.source, req.dest, req.y, transfer)
    return receipt


def withdrawable(pool: PoolState) -> float:
    """M above the full-backing reserve ``r_optimal * x_current``."""
    return max(0.0, pool.m_current - pool.r_optimal * pool.x_current)


def request_withdrawal(
    pool: PoolState, amount: float, now: int, lock_ticks: int = DEFAULT_LOCK_TICKS
) -> WithdrawalRequest:
    amount = check_amount("withdrawal amount", amount)
    if amount <= 0:
        raise InvalidParameterError(f"withdrawal amount must be > 0, got {amount!r}")
    if not MIN_LOCK_TICKS <= lock_ticks <= MAX_LOCK_TICKS:
        raise InvalidParameterError(f"lock_ticks must be in [{MIN_LOCK_TICKS}, {MAX_LOCK_TICKS}]")
    available = withdrawable(pool)
    if amount > available:
        raise OverWithdrawalError(f"{pool.brand}: requested {amount!r}, withdrawable {available!r}")
    req = WithdrawalRequest(pool.brand, amount, int(now), int(now) + int(lock_ticks))
    pool.pending_withdrawals.append((amount, req.unlock_at))
    return req


def process_withdrawals(pool: PoolState, now: int) -> list[float]:
    """Release every matured request, capped by what is withdrawable at release time."""
    released = []
    still_pending = []
    for amount, unlock_at in pool.pending_withdrawals:
        if unlock_at <= now:
            out = min(amount, withdrawable(pool))
            pool.m_current -= out
            released.append(out)
        else:
            still_pending.append((amount, unlock_at))
    pool.pending_withdrawals = still_pending
    return released
