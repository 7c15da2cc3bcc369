"""Ecosystem-health and customer-response measures."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .core import InvalidParameterError, UndefinedMetricError, check_amount


class FlowLedger:
    """Per-brand M inflow/outflow records, tagged with the tick they happened at."""

    def __init__(self, brands=()):
        self._events: list[tuple[int, str, float, float]] = []
        self._brands: dict[str, None] = dict.fromkeys(brands)

    @property
    def brands(self) -> list[str]:
        return list(self._brands)

    def add_brand(self, brand: str) -> None:
        self._brands.setdefault(brand, None)

    def record(self, tick: int, brand: str, inflow: float = 0.0, outflow: float = 0.0) -> None:
        check_amount("inflow", inflow)
        check_amount("outflow", outflow)
        self.add_brand(brand)
        self._events.append((int(tick), brand, float(inflow), float(outflow)))

    def record_transfer(self, tick: int, payer: str, payee: str, amount: float) -> None:
        if amount >= 0:
            self.record(tick, payer, outflow=amount)
            self.record(tick, payee, inflow=amount)
        else:
            self.record(tick, payee, outflow=-amount)
            self.record(tick, payer, inflow=-amount)

    def totals(self, start: int | None = None, end: int | None = None) -> dict[str, tuple[float, float]]:
        """``{brand: (I, O)}`` over ticks in ``[start, end)``; ``None`` leaves a side open."""
        out = {b: [0.0, 0.0] for b in self._brands}
        for tick, brand, i, o in self._events:
            if start is not None and tick < start:
                continue
            if end is not None and tick >= end:
                continue
            out[brand][0] += i
            out[brand][1] += o
        return {b: (v[0], v[1]) for b, v in out.items()}


def net_flow(ledger: FlowLedger, brand: str, start: int | None = None, end: int | None = None) -> float:
    totals = ledger.totals(start, end)
    if brand not in totals:
        raise KeyError(f"unknown brand {brand!r}")
    i, o = totals[brand]
    return i - o


def buffer_depth(k: float, sigma: float, horizon: float) -> float:
    """Reserve depth covering net-flow swings of std ``sigma`` over ``horizon`` at confidence ``k``."""
    if k <= 0 or horizon <= 0 or sigma < 0:
        raise InvalidParameterError(f"need k > 0, sigma >= 0, T > 0; got {k!r}, {sigma!r}, {horizon!r}")
    return k * sigma * math.sqrt(horizon)


def efficiency_from_totals(totals) -> float:
    imbalance = sum(abs(i - o) for i, o in totals)
    activity = sum(i + o for i, o in totals)
    if activity <= 0:
        raise UndefinedMetricError("system efficiency undefined with zero flow activity")
    return 1.0 - imbalance / activity


def system_efficiency(ledger: FlowLedger, start: int | None = None, end: int | None = None) -> float:
    return efficiency_from_totals(ledger.totals(start, end).values())


def lrr(x_in: float, m_out: float) -> float:
    """Liability reduction ratio: collected value over paid value."""
    if m_out <= 0:
        raise UndefinedMetricError("LRR undefined when nothing was paid out")
    return x_in / m_out


@dataclass(frozen=True)
class SatisfactionState:
    value: float = 100.0
    lam: float = 0.2
    alpha: float = 0.019
    beta_exp: float = 1.4

    def __post_init__(self):
        if not 0.0 <= self.value <= 100.0:
            raise InvalidParameterError(f"satisfaction must be in [0, 100], got {self.value!r}")
        if not 0.0 < self.lam <= 1.0:
            raise InvalidParameterError(f"lambda must be in (0, 1], got {self.lam!r}")
        if not self.alpha > 0 or not self.beta_exp > 0:
            raise InvalidParameterError("alpha and beta_exp must be positive")


def satisfaction_target(premium_pct: float, alpha: float, beta_exp: float) -> float:
    return 100.0 * math.exp(-alpha * premium_pct**beta_exp)


def satisfaction_step(s: SatisfactionState, premium_pct: float) -> SatisfactionState:
    """Exponentially smooth satisfaction toward its level at the experienced premium.

    ``premium_pct`` is in percentage points (25.0 for a 25% premium).
    """
    if premium_pct < 0:
        raise InvalidParameterError(f"premium_pct must be >= 0, got {premium_pct!r}")
    v = (1.0 - s.lam) * s.value + s.lam * satisfaction_target(premium_pct, s.alpha, s.beta_exp)
    return replace(s, value=min(100.0, max(0.0, v)))


def nearest_rank(values, q: float) -> float:
    if not values:
        raise UndefinedMetricError("percentile of an empty series")
    ordered = sorted(values)
    rank = max(1, math.ceil(q / 100.0 * len(ordered)))
    return ordered[rank - 1]


@dataclass(frozen=True)
class TrajectoryStats:
    sat_at_50: float
    txns_until_below_50: int | None
    avg_premium: float
    p90_premium: float


def trajectory_stats(satisfaction, premiums, checkpoint: int = 50, floor: float = 50.0) -> TrajectoryStats:
    """Summary metrics for one run; transaction indices are 1-based."""
    sats = list(satisfaction)
    prem = list(premiums)
    if not sats or not prem:
        raise UndefinedMetricError("trajectory statistics need non-empty series")
    at = sats[checkpoint - 1] if len(sats) >= checkpoint else sats[-1]
    below = next((i + 1 for i, v in enumerate(sats) if v < floor), None)
    return TrajectoryStats(
        sat_at_50=at,
        txns_until_below_50=below,
        avg_premium=math.fsum(prem) / len(prem),
        p90_premium=nearest_rank(prem, 90),
    )
