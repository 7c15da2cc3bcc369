"""Scenario files: brands, market factors and scripted exchanges, in TOML.

Parsing is strict. Unknown keys, dangling brand references and out-of-range
values are rejected with the offending field path. See docs/scenario_format.md.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import (
    DEFAULT_LOCK_TICKS,
    DEFAULT_OMEGA_MAX,
    InvalidParameterError,
    MarketFactors,
    PoolState,
    PricingParams,
    RewardSwapError,
    profile,
)
from .metrics import FlowLedger, efficiency_from_totals
from .settlement import (
    EngineConfig,
    ExchangeRequest,
    execute_exchange,
    open_pool,
    process_withdrawals,
    quote_exchange,
    request_withdrawal,
    set_r_optimal,
)


class ScenarioError(InvalidParameterError):
    code = "invalid_scenario"


_SETTINGS = {
    "lock_ticks": DEFAULT_LOCK_TICKS,
    "on_error": "halt",
    "credit_mode": "credit",
    "compensation_convention": "worked",
    "omega_max": DEFAULT_OMEGA_MAX,
}
_WEIGHTS = {
    "beta_spillover": 0.0,
    "beta_cannibal": 0.0,
    "beta_demand": 0.0,
    "beta_season": 0.0,
    "beta_quality": 0.0,
    "gamma_cannibal": 0.0,
    "gamma_season": 0.0,
    "gamma_synergy": 0.0,
}
_PARAM_KEYS = set(PricingParams.__dataclass_fields__)
_TOP_KEYS = {"settings", "weights", "brands", "pairs", "markets", "exchanges", "withdrawals"}


def _check_keys(where: str, table: dict, allowed, required=()):
    if not isinstance(table, dict):
        raise ScenarioError(f"{where}: expected a table")
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {', '.join(unknown)}")
    missing = [k for k in required if k not in table]
    if missing:
        raise ScenarioError(f"{where}: missing required key(s) {', '.join(missing)}")


def _num(where: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ScenarioError(f"{where}: expected a finite number, got {value!r}")
    return float(value)


def _int(where: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ScenarioError(f"{where}: expected a non-negative integer, got {value!r}")
    return value


def _wrap(where: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ScenarioError:
        raise
    except InvalidParameterError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


@dataclass
class BrandSpec:
    id: str
    x_deposit: float
    m_deposit: float
    params: PricingParams
    profile: str
    r_optimal_updates: list[tuple[int, float]] = field(default_factory=list)


@dataclass
class ScriptedExchange:
    tick: int
    source: str
    dest: str
    y: float
    omega: float = 0.0
    mode: str = "full_factor"


@dataclass
class ScriptedWithdrawal:
    tick: int
    brand: str
    amount: float


@dataclass
class Scenario:
    settings: dict
    weights: dict
    brands: dict[str, BrandSpec]
    pairs: dict[tuple[str, str], dict]
    markets: dict[str, dict]
    exchanges: list[ScriptedExchange]
    withdrawals: list[ScriptedWithdrawal]

    @property
    def engine_config(self) -> EngineConfig:
        return EngineConfig(
            lock_ticks=self.settings["lock_ticks"],
            credit_mode=self.settings["credit_mode"],
            compensation_convention=self.settings["compensation_convention"],
        )

    def open_pools(self) -> dict[str, PoolState]:
        return {b.id: open_pool(b.id, b.x_deposit, b.m_deposit) for b in self.brands.values()}

    def factors_for(self, source: str, dest: str, omega: float = 0.0) -> MarketFactors:
        pair = self.pairs.get((source, dest), {})
        market = self.markets.get(dest, {})
        return MarketFactors(
            sigma_ab=pair.get("sigma", 0.0),
            kappa_ab=pair.get("kappa", 0.0),
            delta_b=market.get("delta", 0.0),
            xi_b=market.get("xi", 0.0),
            rho_b=market.get("rho", 1.0),
            ltv_b=market.get("ltv", 1.0),
            omega=omega,
            omega_max=self.settings["omega_max"],
            **self.weights,
        )

    def request(self, source: str, dest: str, y: float, omega: float = 0.0, mode: str = "full_factor") -> ExchangeRequest:
        for b in (source, dest):
            if b not in self.brands:
                raise ScenarioError(f"unknown brand {b!r}")
        return ExchangeRequest(
            source=source,
            dest=dest,
            y=y,
            factors=self.factors_for(source, dest, omega),
            params=self.brands[source].params,
            pricing_mode=mode,
        )

    def quote(self, source: str, dest: str, y: float, omega: float = 0.0, mode: str = "full_factor"):
        """Quote against freshly opened pools; nothing is mutated."""
        pools = self.open_pools()
        req = self.request(source, dest, y, omega, mode)
        return quote_exchange(req, pools[source], pools[dest], self.engine_config)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    return parse_scenario(data)


def loads_scenario(text: str) -> Scenario:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(str(exc)) from None
    return parse_scenario(data)


def parse_scenario(data: dict) -> Scenario:
    _check_keys("scenario", data, _TOP_KEYS, required=("brands",))

    settings = dict(_SETTINGS)
    raw = data.get("settings", {})
    _check_keys("settings", raw, _SETTINGS)
    settings.update(raw)
    settings["lock_ticks"] = _int("settings.lock_ticks", settings["lock_ticks"])
    settings["omega_max"] = _num("settings.omega_max", settings["omega_max"])
    if settings["on_error"] not in ("halt", "skip"):
        raise ScenarioError(f"settings.on_error: expected 'halt' or 'skip', got {settings['on_error']!r}")
    _wrap(
        "settings",
        EngineConfig,
        lock_ticks=settings["lock_ticks"],
        credit_mode=settings["credit_mode"],
        compensation_convention=settings["compensation_convention"],
    )

    weights = dict(_WEIGHTS)
    raw = data.get("weights", {})
    _check_keys("weights", raw, _WEIGHTS)
    weights.update({k: _num(f"weights.{k}", v) for k, v in raw.items()})
    _wrap("weights", MarketFactors, **weights)

    brands: dict[str, BrandSpec] = {}
    if not isinstance(data["brands"], list) or not data["brands"]:
        raise ScenarioError("brands: expected a non-empty array of tables")
    for i, b in enumerate(data["brands"]):
        where = f"brands[{i}]"
        _check_keys(where, b, {"id", "x_deposit", "m_deposit", "profile", "params", "r_optimal"},
                    required=("id", "x_deposit", "m_deposit"))
        bid = b["id"]
        if not isinstance(bid, str) or not bid:
            raise ScenarioError(f"{where}.id: expected a non-empty string")
        if bid in brands:
            raise ScenarioError(f"{where}.id: duplicate brand {bid!r}")
        prof_name = b.get("profile", "moderate")
        params = _wrap(f"{where}.profile", profile, prof_name).params
        overrides = b.get("params", {})
        _check_keys(f"{where}.params", overrides, _PARAM_KEYS)
        if overrides:
            params = _wrap(
                f"{where}.params", params.replace, **{k: _num(f"{where}.params.{k}", v) for k, v in overrides.items()}
            )
        updates = []
        for j, u in enumerate(b.get("r_optimal", [])):
            uw = f"{where}.r_optimal[{j}]"
            _check_keys(uw, u, {"tick", "value"}, required=("tick", "value"))
            value = _num(f"{uw}.value", u["value"])
            if value <= 0:
                raise ScenarioError(f"{uw}.value: R_optimal must be > 0, got {value!r}")
            updates.append((_int(f"{uw}.tick", u["tick"]), value))
        x = _num(f"{where}.x_deposit", b["x_deposit"])
        m = _num(f"{where}.m_deposit", b["m_deposit"])
        for key, value in (("x_deposit", x), ("m_deposit", m)):
            if value <= 0:
                raise ScenarioError(f"{where}.{key}: must be > 0, got {value!r}")
        _wrap(where, open_pool, bid, x, m)
        brands[bid] = BrandSpec(bid, x, m, params, prof_name, sorted(updates, key=lambda u: u[0]))

    def brand_ref(where, value):
        if value not in brands:
            raise ScenarioError(f"{where}: unknown brand {value!r}")
        return value

    pairs = {}
    for i, p in enumerate(data.get("pairs", [])):
        where = f"pairs[{i}]"
        _check_keys(where, p, {"source", "dest", "sigma", "kappa"}, required=("source", "dest"))
        key = (brand_ref(f"{where}.source", p["source"]), brand_ref(f"{where}.dest", p["dest"]))
        if key in pairs:
            raise ScenarioError(f"{where}: duplicate pair {key}")
        entry = {k: _num(f"{where}.{k}", p[k]) for k in ("sigma", "kappa") if k in p}
        _wrap(where, MarketFactors, sigma_ab=entry.get("sigma", 0.0), kappa_ab=entry.get("kappa", 0.0))
        pairs[key] = entry

    markets = {}
    for i, mk in enumerate(data.get("markets", [])):
        where = f"markets[{i}]"
        _check_keys(where, mk, {"brand", "delta", "xi", "rho", "ltv"}, required=("brand",))
        bid = brand_ref(f"{where}.brand", mk["brand"])
        if bid in markets:
            raise ScenarioError(f"{where}: duplicate market entry for {bid!r}")
        entry = {k: _num(f"{where}.{k}", mk[k]) for k in ("delta", "xi", "rho", "ltv") if k in mk}
        _wrap(
            where,
            MarketFactors,
            delta_b=entry.get("delta", 0.0),
            xi_b=entry.get("xi", 0.0),
            rho_b=entry.get("rho", 1.0),
            ltv_b=entry.get("ltv", 1.0),
        )
        markets[bid] = entry

    scenario = Scenario(settings, weights, brands, pairs, markets, [], [])

    for i, e in enumerate(data.get("exchanges", [])):
        where = f"exchanges[{i}]"
        _check_keys(where, e, {"tick", "source", "dest", "y", "omega", "mode"}, required=("tick", "source", "dest", "y"))
        ex = ScriptedExchange(
            tick=_int(f"{where}.tick", e["tick"]),
            source=brand_ref(f"{where}.source", e["source"]),
            dest=brand_ref(f"{where}.dest", e["dest"]),
            y=_num(f"{where}.y", e["y"]),
            omega=_num(f"{where}.omega", e.get("omega", 0.0)),
            mode=e.get("mode", "full_factor"),
        )
        _wrap(where, scenario.request, ex.source, ex.dest, ex.y, ex.omega, ex.mode)
        scenario.exchanges.append(ex)

    for i, w in enumerate(data.get("withdrawals", [])):
        where = f"withdrawals[{i}]"
        _check_keys(where, w, {"tick", "brand", "amount"}, required=("tick", "brand", "amount"))
        amount = _num(f"{where}.amount", w["amount"])
        if amount <= 0:
            raise ScenarioError(f"{where}.amount: must be > 0, got {amount!r}")
        scenario.withdrawals.append(
            ScriptedWithdrawal(_int(f"{where}.tick", w["tick"]), brand_ref(f"{where}.brand", w["brand"]), amount)
        )
    return scenario


@dataclass
class RunResult:
    log: list[dict]
    pools: dict[str, PoolState]
    ledger: FlowLedger
    released: dict[str, float]
    m_total_initial: float
    halted: bool
    lrr: dict[str, float | None]

    @property
    def m_total_final(self) -> float:
        return math.fsum(p.m_current for p in self.pools.values())

    def conservation(self) -> dict:
        released = math.fsum(self.released.values())
        residual = self.m_total_initial - (self.m_total_final + released)
        return {
            "m_total_initial": self.m_total_initial,
            "m_total_final": self.m_total_final,
            "released_withdrawals": released,
            "residual": residual,
            "conserved": abs(residual) <= 1e-9 * max(1.0, self.m_total_initial),
        }

    def metrics(self) -> dict:
        totals = self.ledger.totals()
        try:
            eff = efficiency_from_totals(totals.values())
        except RewardSwapError:
            eff = None
        return {
            "system_efficiency": eff,
            "brands": {b: {"inflow": i, "outflow": o, "net": i - o, "lrr": self.lrr.get(b)} for b, (i, o) in totals.items()},
        }


def run_scenario(scenario: Scenario, on_error: str | None = None) -> RunResult:
    """Replay the exchange and withdrawal script in tick order.

    Within a tick: R_optimal updates, matured withdrawals, new withdrawal
    requests, then exchanges in file order. After the last scripted tick the
    clock advances until every queued withdrawal has matured.
    """
    on_error = on_error or scenario.settings["on_error"]
    cfg = scenario.engine_config
    pools = scenario.open_pools()
    ledger = FlowLedger(pools)
    released = {b: 0.0 for b in pools}
    m_initial = math.fsum(p.m_current for p in pools.values())
    collected = {b: 0.0 for b in pools}
    paid = {b: 0.0 for b in pools}
    log: list[dict] = []
    halted = False

    ticks = {e.tick for e in scenario.exchanges} | {w.tick for w in scenario.withdrawals}
    for b in scenario.brands.values():
        ticks |= {t for t, _ in b.r_optimal_updates}

    def release(now):
        for bid, pool in pools.items():
            for amount in process_withdrawals(pool, now):
                released[bid] += amount
                log.append({"kind": "withdrawal_release", "tick": now, "status": "ok", "source": bid, "amount": amount})

    def fail(entry, exc):
        nonlocal halted
        entry.update(status="error", error=getattr(exc, "code", "error"), message=str(exc))
        log.append(entry)
        if on_error == "halt":
            halted = True

    for now in sorted(ticks):
        for b in scenario.brands.values():
            for t, value in b.r_optimal_updates:
                if t == now:
                    set_r_optimal(pools[b.id], value)
        release(now)
        for w in (w for w in scenario.withdrawals if w.tick == now):
            entry = {"kind": "withdrawal_request", "tick": now, "source": w.brand, "amount": w.amount}
            try:
                req = request_withdrawal(pools[w.brand], w.amount, now, cfg.lock_ticks)
                entry.update(status="ok", unlock_at=req.unlock_at)
                log.append(entry)
            except RewardSwapError as exc:
                fail(entry, exc)
                if halted:
                    break
        if halted:
            break
        for ex in (e for e in scenario.exchanges if e.tick == now):
            entry = {"kind": "exchange", "tick": now, "source": ex.source, "dest": ex.dest, "y": ex.y}
            try:
                req = scenario.request(ex.source, ex.dest, ex.y, ex.omega, ex.mode)
                p_a = pools[ex.source].r_optimal
                receipt = execute_exchange(req, pools[ex.source], pools[ex.dest], now, cfg)
            except RewardSwapError as exc:
                fail(entry, exc)
                if halted:
                    break
                continue
            ledger.record_transfer(now, ex.source, ex.dest, receipt.settlement_m - receipt.comp_net)
            collected[ex.source] += receipt.customer_price_rewards * p_a
            paid[ex.source] += receipt.settlement_m
            entry.update(status="ok", receipt=receipt,
                         source_m_after=pools[ex.source].m_current, dest_m_after=pools[ex.dest].m_current)
            log.append(entry)
        if halted:
            break

    if not halted:
        pending = [t for p in pools.values() for _, t in p.pending_withdrawals]
        if pending:
            release(max(pending))

    lrr = {b: (collected[b] / paid[b] if paid[b] > 0 else None) for b in pools}
    return RunResult(log, pools, ledger, released, m_initial, halted, lrr)
