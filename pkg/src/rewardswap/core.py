"""Shared domain types, errors and validation.

Amounts are plain floats. Asset amounts are denominated in the universal
settlement asset M with a fixed unit price of 1.0; reward amounts are in the
units of one brand's own rewards.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

P_M = 1.0
DEFAULT_OMEGA_MAX = 0.10
DEFAULT_LOCK_TICKS = 7
MIN_LOCK_TICKS = 1
MAX_LOCK_TICKS = 30

PROFILE_NAMES = (
    "ultra_conservative",
    "conservative",
    "moderate",
    "aggressive",
    "ultra_aggressive",
)


class RewardSwapError(Exception):
    """Base class for domain errors (CLI exit code 1)."""

    code = "domain_error"


class InvalidParameterError(RewardSwapError, ValueError):
    code = "invalid_parameter"


class InvalidPoolError(InvalidParameterError):
    code = "invalid_pool"

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


class UnpricedBrandError(RewardSwapError, ZeroDivisionError):
    code = "unpriced_brand"


class EmptyPoolError(RewardSwapError):
    code = "empty_pool"


class DegeneratePoolError(RewardSwapError):
    code = "degenerate_pool"


class CapacityError(RewardSwapError):
    code = "capacity"


class DestCapacityError(CapacityError):
    code = "dest_capacity"


class SourceCapacityError(CapacityError):
    code = "source_capacity"


class OverWithdrawalError(RewardSwapError):
    code = "over_withdrawal"


class UndefinedMetricError(RewardSwapError):
    code = "undefined_metric"


def check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")
    return value


def check_amount(name: str, value: float) -> float:
    """Validate a non-negative finite amount (asset or reward units)."""
    value = check_finite(name, value)
    if value < 0:
        raise InvalidParameterError(f"{name} must be >= 0, got {value!r}")
    return value


def check_range(name: str, value: float, lo: float, hi: float, *, hi_open: bool = False) -> float:
    value = check_finite(name, value)
    too_high = value >= hi if hi_open else value > hi
    if value < lo or too_high:
        bracket = ")" if hi_open else "]"
        raise InvalidParameterError(f"{name} must be in [{lo}, {hi}{bracket}, got {value!r}")
    return value


def check_brand_id(brand: str) -> str:
    if not isinstance(brand, str) or not brand:
        raise InvalidParameterError(f"brand id must be a non-empty string, got {brand!r}")
    return brand


@dataclass
class PoolState:
    """One brand's deposited rewards and M reserve.

    Mutated in place by the settlement engine only. ``pending_withdrawals``
    holds ``(amount, unlock_at)`` pairs.
    """

    brand: str
    m_initial: float
    x_initial: float
    m_current: float
    x_current: float
    r_optimal: float
    inflow_total: float = 0.0
    outflow_total: float = 0.0
    pending_withdrawals: list[tuple[float, int]] = field(default_factory=list)

    def __post_init__(self):
        self.pending_withdrawals = [(float(a), int(t)) for a, t in self.pending_withdrawals]
        problems = validate_pool(self)
        if problems:
            raise InvalidPoolError(problems)

    @property
    def r_current(self) -> float:
        if self.x_current == 0:
            raise DegeneratePoolError(f"pool {self.brand} holds no rewards")
        return self.m_current / self.x_current

    def snapshot(self) -> tuple:
        return (
            self.brand,
            self.m_initial,
            self.x_initial,
            self.m_current,
            self.x_current,
            self.r_optimal,
            self.inflow_total,
            self.outflow_total,
            tuple(self.pending_withdrawals),
        )

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["pending_withdrawals"] = [list(p) for p in self.pending_withdrawals]
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> PoolState:
        d = dict(d)
        d["pending_withdrawals"] = [tuple(p) for p in d.get("pending_withdrawals", [])]
        return cls(**d)

    def to_json(self) -> str:
        # repr-based float encoding in json round-trips doubles exactly
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> PoolState:
        return cls.from_dict(json.loads(text))


def validate_pool(p: PoolState) -> list[str]:
    """Return every violated pool invariant; an empty list means the pool is ok."""
    out = []
    numeric = {
        "M_initial": p.m_initial,
        "X_initial": p.x_initial,
        "M_current": p.m_current,
        "X_current": p.x_current,
        "R_optimal": p.r_optimal,
        "inflow_total": p.inflow_total,
        "outflow_total": p.outflow_total,
    }
    for name, v in numeric.items():
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            out.append(f"{name} finite")
    if not isinstance(p.brand, str) or not p.brand:
        out.append("brand non-empty")
    if out:
        return out
    if p.m_initial <= 0:
        out.append("M_initial > 0")
    if p.x_initial <= 0:
        out.append("X_initial > 0")
    if p.r_optimal <= 0:
        out.append("R_optimal > 0")
    if p.m_current < 0:
        out.append("M_current ≥ 0")
    if p.x_current < 0:
        out.append("X_current ≥ 0")
    if p.inflow_total < 0:
        out.append("inflow_total ≥ 0")
    if p.outflow_total < 0:
        out.append("outflow_total ≥ 0")
    for amount, _ in p.pending_withdrawals:
        if not math.isfinite(amount) or amount <= 0:
            out.append("pending withdrawal amount > 0")
            break
    return out


@dataclass(frozen=True)
class PricingParams:
    beta_trans: float = 1.0
    beta_flow: float = 1.0
    eta: float = 0.5
    theta: float = 0.10
    b_trans_max: float = 3.0
    b_flow_min: float = 0.5
    b_flow_max: float = 2.0

    def __post_init__(self):
        for name in ("beta_trans", "beta_flow"):
            check_amount(name, getattr(self, name))
        check_range("eta", self.eta, 0.0, 1.0, hi_open=True)
        check_range("theta", self.theta, 0.0, 1.0, hi_open=True)
        check_finite("b_trans_max", self.b_trans_max)
        if self.b_trans_max < 1:
            raise InvalidParameterError(f"b_trans_max must be >= 1, got {self.b_trans_max!r}")
        check_range("b_flow_min", self.b_flow_min, 0.0, 1.0)
        if self.b_flow_min <= 0:
            raise InvalidParameterError(f"b_flow_min must be > 0, got {self.b_flow_min!r}")
        check_finite("b_flow_max", self.b_flow_max)
        if self.b_flow_max < 1:
            raise InvalidParameterError(f"b_flow_max must be >= 1, got {self.b_flow_max!r}")

    def replace(self, **changes) -> PricingParams:
        return PricingParams(**{**asdict(self), **changes})


# (b_flow_min, b_flow_max, theta, b_trans_max, beta_flow)
_PROFILE_TABLE = {
    "ultra_conservative": (0.8, 1.3, 0.15, 2.0, 0.75),
    "conservative": (0.7, 1.5, 0.10, 2.0, 1.00),
    "moderate": (0.5, 2.0, 0.10, 3.0, 1.50),
    "aggressive": (0.2, 3.0, 0.05, 5.0, 2.00),
    "ultra_aggressive": (0.1, 4.0, 0.05, 5.0, 2.25),
}


@dataclass(frozen=True)
class StrategicProfile:
    name: str
    params: PricingParams

    def __post_init__(self):
        if self.name not in PROFILE_NAMES:
            raise InvalidParameterError(f"unknown profile {self.name!r}; expected one of {PROFILE_NAMES}")


def profile(name: str, **overrides) -> StrategicProfile:
    """Preset pricing parameters for one of the five archetypal profiles."""
    if name not in _PROFILE_TABLE:
        raise InvalidParameterError(f"unknown profile {name!r}; expected one of {PROFILE_NAMES}")
    lo, hi, theta, tmax, bflow = _PROFILE_TABLE[name]
    params = PricingParams(
        beta_trans=1.0,
        beta_flow=bflow,
        eta=0.5,
        theta=theta,
        b_trans_max=tmax,
        b_flow_min=lo,
        b_flow_max=hi,
    )
    if overrides:
        params = params.replace(**overrides)
    return StrategicProfile(name, params)


@dataclass(frozen=True)
class MarketFactors:
    """Market adjustment inputs with their pricing (beta) and compensation (gamma) weights.

    Defaults are neutral: every multiplier evaluates to 1 and every
    compensation component to 0.
    """

    sigma_ab: float = 0.0
    kappa_ab: float = 0.0
    delta_b: float = 0.0
    xi_b: float = 0.0
    rho_b: float = 1.0
    omega: float = 0.0
    beta_spillover: float = 0.0
    beta_cannibal: float = 0.0
    beta_demand: float = 0.0
    beta_season: float = 0.0
    beta_quality: float = 0.0
    gamma_cannibal: float = 0.0
    gamma_season: float = 0.0
    gamma_synergy: float = 0.0
    ltv_b: float = 1.0
    omega_max: float = DEFAULT_OMEGA_MAX

    def __post_init__(self):
        check_range("sigma_ab", self.sigma_ab, 0.0, 1.0)
        check_range("kappa_ab", self.kappa_ab, 0.0, 1.0)
        check_range("delta_b", self.delta_b, -1.0, 1.0)
        check_range("xi_b", self.xi_b, -1.0, 1.0)
        check_range("rho_b", self.rho_b, 0.0, 1.0)
        check_amount("omega_max", self.omega_max)
        check_range("omega", self.omega, -self.omega_max, self.omega_max)
        for name in (
            "beta_spillover",
            "beta_cannibal",
            "beta_demand",
            "beta_season",
            "beta_quality",
            "gamma_cannibal",
            "gamma_season",
            "gamma_synergy",
            "ltv_b",
        ):
            check_amount(name, getattr(self, name))

    def replace(self, **changes) -> MarketFactors:
        return MarketFactors(**{**asdict(self), **changes})


@dataclass(frozen=True)
class ExchangeReceipt:
    source: str
    dest: str
    y: float
    customer_price_rewards: float
    customer_price_raw: float
    settlement_m: float
    comp_competition: float
    comp_seasonal: float
    comp_spillover: float
    comp_net: float
    factors_applied: dict = field(default_factory=dict)
    tick: int | None = None

    @property
    def source_m_delta(self) -> float:
        """Signed change of the source pool's M reserve."""
        return -self.settlement_m + self.comp_net

    @property
    def dest_m_delta(self) -> float:
        return self.settlement_m - self.comp_net

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)
