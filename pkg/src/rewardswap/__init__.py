"""Cross-brand reward exchange over M-backed liquidity pools."""

from .compensation import CompensationBreakdown, compensate
from .core import (
    ExchangeReceipt,
    MarketFactors,
    PoolState,
    PricingParams,
    RewardSwapError,
    StrategicProfile,
    profile,
    validate_pool,
)
from .settlement import (
    EngineConfig,
    ExchangeRequest,
    execute_exchange,
    open_pool,
    quote_exchange,
)

__version__ = "0.1.0"

__all__ = [
    "CompensationBreakdown",
    "compensate",
    "ExchangeReceipt",
    "MarketFactors",
    "PoolState",
    "PricingParams",
    "RewardSwapError",
    "StrategicProfile",
    "profile",
    "validate_pool",
    "EngineConfig",
    "ExchangeRequest",
    "execute_exchange",
    "open_pool",
    "quote_exchange",
]
