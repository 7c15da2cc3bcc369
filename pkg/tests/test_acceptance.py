"""Acceptance gate. Each test carries a ``criterion`` marker; conftest prints
one PASS/FAIL line per criterion at the end of the run."""

from __future__ import annotations

import filecmp
import math
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rewardswap.cli import main
from rewardswap.core import CapacityError, MarketFactors, PricingParams, RewardSwapError
from rewardswap.experiments.coupling import coupling_grid
from rewardswap.experiments.feasibility import beta_max, beta_min, premium_at
from rewardswap.experiments.outflow import SweepAxes, run_sweep
from rewardswap.pricing import (
    flow_factor_bounded,
    flow_threshold_adjust,
    full_customer_price,
    operational_price,
    premium_discount_form,
    trans_factor,
    trans_factor_bounded,
    utilization,
)
from rewardswap.scenario import load_scenario
from rewardswap.settlement import (
    EngineConfig,
    ExchangeRequest,
    execute_exchange,
    open_pool,
    process_withdrawals,
    request_withdrawal,
)

ROOT = Path(__file__).resolve().parents[1]
WORKED = ROOT / "scenarios" / "worked_example.toml"
MASTER_SEED = 7

criterion = pytest.mark.criterion


# ---------------------------------------------------------------- 1

def _worked_receipt():
    scen = load_scenario(WORKED)
    ex = scen.exchanges[0]
    return scen, ex, scen.quote(ex.source, ex.dest, ex.y, ex.omega, ex.mode)


@criterion(1, "worked example golden test")
def test_c1_worked_example_raw_price():
    _, _, receipt = _worked_receipt()
    assert receipt.customer_price_raw == pytest.approx(93.5, rel=1e-9, abs=0)


@criterion(1, "worked example golden test")
def test_c1_worked_example_receipt_and_positions():
    t0 = time.perf_counter()
    scen, ex, receipt = _worked_receipt()
    assert receipt.customer_price_rewards == 94
    assert receipt.settlement_m == pytest.approx(10.0, rel=1e-9)
    assert receipt.comp_competition == pytest.approx(0.15, rel=1e-9)
    assert receipt.comp_seasonal == pytest.approx(1.00, rel=1e-9)
    assert receipt.comp_spillover == pytest.approx(0.80, rel=1e-9)
    assert receipt.comp_net == pytest.approx(-0.05, rel=1e-9)

    pools = scen.open_pools()
    before = {b: (p.m_current, p.x_current) for b, p in pools.items()}
    req = scen.request(ex.source, ex.dest, ex.y, ex.omega, ex.mode)
    execute_exchange(req, pools["A"], pools["B"], 0, scen.engine_config)
    assert pools["A"].m_current - before["A"][0] == pytest.approx(-10.05, rel=1e-9)
    assert pools["A"].x_current - before["A"][1] == 94
    assert pools["B"].m_current - before["B"][0] == pytest.approx(10.05, rel=1e-9)
    assert pools["B"].x_current - before["B"][1] == -20
    assert time.perf_counter() - t0 < 1.0


# ---------------------------------------------------------------- 2

@criterion(2, "transaction factor golden test")
def test_c2_transaction_factor():
    assert trans_factor(utilization(300, 1000), 0.5, 0.5) == 1.00
    assert trans_factor(utilization(750, 1000), 0.5, 0.5) == 1.25


# ---------------------------------------------------------------- 3

@criterion(3, "flow threshold golden test")
def test_c3_threshold():
    assert flow_threshold_adjust(0.08, 0.10) == 0.0
    assert flow_threshold_adjust(0.20, 0.10) == pytest.approx(0.1111, abs=5e-4)


# ---------------------------------------------------------------- 4

FEASIBLE_TABLE = {
    0.00: (0.67, 2.00),
    0.05: (0.68, 2.11),
    0.10: (0.69, 2.25),
    0.15: (0.71, 2.43),
    0.20: (0.73, 2.67),
    0.25: (0.75, 3.00),
    0.30: (0.78, 3.50),
}


@criterion(4, "feasible range table reproduction")
def test_c4_feasible_ranges():
    t0 = time.perf_counter()
    for theta, (lo, hi) in FEASIBLE_TABLE.items():
        assert beta_min(theta) == pytest.approx(lo, abs=0.01), theta
        assert beta_max(theta) == pytest.approx(hi, abs=0.01), theta
    for theta, pct in ((0.00, 60), (0.10, 44), (0.20, 25)):
        assert 100 * premium_at(2.0, 0.30, theta) == pytest.approx(pct, abs=1.0)
    assert time.perf_counter() - t0 < 1.0


# ---------------------------------------------------------------- 5

@criterion(5, "coupling grid reproduction")
def test_c5_coupling_grid():
    t0 = time.perf_counter()
    rep = coupling_grid(0.50, 0.10, beta_trans=1.0, beta_flow=1.0, n=100)
    assert rep.coupling.shape == (100, 100)
    assert rep.mean < 5.0
    assert rep.max < 10.0
    mu = rep.mu[:, None] * np.ones((1, 100))
    phi = rep.phi[None, :] * np.ones((100, 1))
    flow_region = (mu <= rep.eta) & (np.abs(phi) > rep.theta)
    trans_region = (np.abs(phi) <= rep.theta) & (mu > rep.eta)
    assert np.all(rep.dominance[flow_region] == "flow")
    assert np.all(rep.dominance[trans_region] == "trans")
    assert time.perf_counter() - t0 < 10.0


# ---------------------------------------------------------------- 6

LRR_TABLE = {0.5: 1.70, 1.0: 1.80, 1.5: 1.84, 2.0: 1.87}
COLLAPSE_TABLE = {
    0.010: {0.5: 32, 1.0: 24, 1.5: 20, 2.0: 18},
    0.019: {0.5: 26, 1.0: 21, 1.5: 18, 2.0: 16},
    0.030: {0.5: 23, 1.0: 18, 1.5: 16, 2.0: 15},
}


@pytest.fixture(scope="module")
def exp3_rows():
    axes = SweepAxes(
        beta_flows=tuple(LRR_TABLE),
        thetas=(0.10,),
        bounds=(("moderate", 0.6, 2.0),),
        alphas=tuple(COLLAPSE_TABLE),
        replications=20,
    )
    t0 = time.perf_counter()
    rows = run_sweep(axes, MASTER_SEED)
    elapsed = time.perf_counter() - t0
    return rows, elapsed


def _group(rows, beta, alpha):
    return [r for r in rows if r["beta_flow"] == beta and r["alpha"] == alpha]


@criterion(6, "outflow simulation reproduction")
def test_c6_lrr_levels(exp3_rows):
    rows, elapsed = exp3_rows
    for beta, target in LRR_TABLE.items():
        lrr = np.mean([r["final_lrr"] for r in _group(rows, beta, 0.019)])
        assert lrr == pytest.approx(target, abs=0.05), beta
    assert elapsed < 60.0


@criterion(6, "outflow simulation reproduction")
def test_c6_lrr_alpha_invariant(exp3_rows):
    rows, _ = exp3_rows
    for beta in LRR_TABLE:
        series = [[r["final_lrr"] for r in _group(rows, beta, a)] for a in COLLAPSE_TABLE]
        assert series[0] == series[1] == series[2]


@criterion(6, "outflow simulation reproduction")
def test_c6_collapse_times(exp3_rows):
    rows, _ = exp3_rows
    for alpha, by_beta in COLLAPSE_TABLE.items():
        for beta, target in by_beta.items():
            times = [r["txns_until_below_50"] for r in _group(rows, beta, alpha)]
            assert None not in times
            assert np.mean(times) == pytest.approx(target, abs=6), (alpha, beta)


@criterion(6, "outflow simulation reproduction")
def test_c6_universal_collapse(exp3_rows):
    rows, _ = exp3_rows
    late = [
        (r["alpha"], r["beta_flow"], r["replication"], r["txns_until_below_50"])
        for r in rows
        if r["txns_until_below_50"] is None or r["txns_until_below_50"] > 40
    ]
    assert late == []


# ---------------------------------------------------------------- 7

@st.composite
def scripts(draw):
    n = draw(st.integers(2, 5))
    brands = [
        (f"b{i}", draw(st.floats(10, 1e5)), draw(st.floats(10, 1e5)))
        for i in range(n)
    ]
    op = st.one_of(
        st.tuples(
            st.just("x"),
            st.integers(0, n - 1),
            st.integers(0, n - 1),
            # oversized amounts inject capacity failures mid-script
            st.one_of(st.floats(0.01, 500), st.floats(1e5, 1e7)),
            st.floats(0, 1),
            st.floats(0, 1),
            st.floats(-1, 1),
            st.sampled_from(["full_factor", "operational"]),
        ),
        st.tuples(st.just("w"), st.integers(0, n - 1), st.floats(0.01, 5e4)),
        st.tuples(st.just("t"), st.integers(1, 10)),
    )
    ops = draw(st.lists(op, min_size=1, max_size=25))
    return brands, ops


def _state(pools):
    return {b: p.to_json() for b, p in pools.items()}


@criterion(7, "conservation suite")
@settings(max_examples=1000)
@given(scripts())
def test_c7_conservation(script):
    brands, ops = script
    pools = {b: open_pool(b, x, m) for b, x, m in brands}
    ids = list(pools)
    total0 = math.fsum(p.m_current for p in pools.values())
    weights = dict(beta_spillover=0.3, beta_cannibal=0.2, beta_season=0.3,
                   gamma_cannibal=0.15, gamma_season=0.2, gamma_synergy=0.1)
    cfg = EngineConfig(lock_ticks=3)
    released = []
    now = 0
    for op in ops:
        before = _state(pools)
        try:
            if op[0] == "x":
                _, i, j, y, sigma, kappa, xi, mode = op
                if i == j:
                    continue
                req = ExchangeRequest(
                    ids[i], ids[j], y, MarketFactors(sigma_ab=sigma, kappa_ab=kappa, xi_b=xi, **weights),
                    PricingParams(), mode,
                )
                execute_exchange(req, pools[ids[i]], pools[ids[j]], now, cfg)
            elif op[0] == "w":
                request_withdrawal(pools[ids[op[1]]], op[2], now, cfg.lock_ticks)
            else:
                now += op[1]
                for p in pools.values():
                    released.extend(process_withdrawals(p, now))
        except RewardSwapError as exc:
            assert _state(pools) == before, f"state changed on {type(exc).__name__}"
        for p in pools.values():
            assert p.m_current >= 0 and p.x_current >= 0
        total = math.fsum(p.m_current for p in pools.values()) + math.fsum(released)
        assert total == pytest.approx(total0, rel=1e-9)


@criterion(7, "conservation suite")
def test_c7_injected_failure_is_atomic():
    a, b = open_pool("A", 1000, 1000), open_pool("B", 10, 10)
    snap = (a.to_json(), b.to_json())
    req = ExchangeRequest("A", "B", 20, MarketFactors(), PricingParams())
    with pytest.raises(CapacityError):
        execute_exchange(req, a, b, 0)
    assert (a.to_json(), b.to_json()) == snap


# ---------------------------------------------------------------- 8

N_PROP = 10_000


@pytest.fixture(scope="module")
def prop_rng():
    return np.random.default_rng(20240601)


def _params(rng):
    return PricingParams(
        beta_trans=float(rng.uniform(0, 5)),
        beta_flow=float(rng.uniform(0, 3)),
        eta=float(rng.uniform(0.05, 0.95)),
        theta=float(rng.uniform(0, 0.9)),
        b_trans_max=float(rng.uniform(1, 5)),
        b_flow_min=float(rng.uniform(0.1, 1)),
        b_flow_max=float(rng.uniform(1, 4)),
    )


def _pool(m0, x0, mt, xt):
    from rewardswap.core import PoolState

    return PoolState("P", m0, x0, mt, xt, m0 / x0)


@criterion(8, "pricing property suite")
def test_c8_scale_invariance(prop_rng):
    rng = prop_rng
    for _ in range(N_PROP):
        p = _params(rng)
        m0, x0 = rng.uniform(1, 1e5, 2)
        mt, xt = m0 * rng.uniform(0.2, 2), x0 * rng.uniform(0.2, 2)
        m = float(rng.uniform(0, mt))
        c = float(10 ** rng.uniform(-3, 3))
        a = operational_price(m, _pool(m0, x0, mt, xt), p)
        b = operational_price(m * c, _pool(m0 * c, x0 * c, mt * c, xt * c), p)
        assert b.trans_factor == pytest.approx(a.trans_factor, rel=1e-9)
        assert b.flow_factor == pytest.approx(a.flow_factor, rel=1e-9)
        if m > 0:
            assert b.final_raw / (m * c) == pytest.approx(a.final_raw / m, rel=1e-9)


@criterion(8, "pricing property suite")
def test_c8_monotonicity(prop_rng):
    rng = prop_rng
    for _ in range(N_PROP):
        p = _params(rng)
        m0 = x0 = 1e4
        mt, xt = m0 * rng.uniform(0.2, 2), x0 * rng.uniform(0.2, 2)
        m1, m2 = np.sort(rng.uniform(0, mt, 2))
        pool = _pool(m0, x0, mt, xt)
        assert operational_price(m2, pool, p).final_raw >= operational_price(m1, pool, p).final_raw
        # phi >= 0 and rising: grow X with M fixed, so utilization is untouched
        mt = float(rng.uniform(0.2, 2.0)) * m0
        x_lo = mt / (m0 / x0) * float(rng.uniform(1.0, 2.0))
        x_hi = x_lo * float(rng.uniform(1.0, 2.0))
        m = float(rng.uniform(0, mt))
        low = operational_price(m, _pool(m0, x0, mt, x_lo), p)
        high = operational_price(m, _pool(m0, x0, mt, x_hi), p)
        assert 0 <= low.phi <= high.phi
        assert high.final_raw >= low.final_raw


@criterion(8, "pricing property suite")
def test_c8_bound_containment(prop_rng):
    rng = prop_rng
    for _ in range(N_PROP):
        p = _params(rng)
        t = trans_factor_bounded(float(rng.uniform(0, 2)), p)
        f = flow_factor_bounded(float(rng.uniform(-3, 3)), p)
        assert 1.0 <= t <= p.b_trans_max
        assert p.b_flow_min <= f <= p.b_flow_max


@criterion(8, "pricing property suite")
def test_c8_grace_neutrality(prop_rng):
    rng = prop_rng
    for _ in range(N_PROP):
        p = _params(rng)
        phi = float(rng.uniform(-p.theta, p.theta))
        assert flow_factor_bounded(flow_threshold_adjust(phi, p.theta), p) == 1.0
        mu = float(rng.uniform(0, p.eta))
        assert trans_factor_bounded(mu, p) == 1.0


_SINGLE = [
    ("sigma_ab", "beta_spillover", 0.0, 1.0),
    ("kappa_ab", "beta_cannibal", 0.0, 1.0),
    ("delta_b", "beta_demand", -1.0, 1.0),
    ("xi_b", "beta_season", -1.0, 1.0),
    ("rho_b", "beta_quality", 0.0, 1.0),
]


@criterion(8, "pricing property suite")
def test_c8_single_factor_equivalence(prop_rng):
    rng = prop_rng
    neutral = PricingParams(beta_trans=0.0, beta_flow=0.0)
    for i in range(N_PROP):
        base = float(rng.uniform(0.01, 1e4))
        kind = i % 8
        if kind < 5:
            name, weight, lo, hi = _SINGLE[kind]
            factors = MarketFactors(**{name: float(rng.uniform(lo, hi)), weight: float(rng.uniform(0, 1))})
            args = (factors, neutral, 0.0, 0.0)
        elif kind == 5:
            factors = MarketFactors(omega=float(rng.uniform(-0.1, 0.1)))
            args = (factors, neutral, 0.0, 0.0)
        elif kind == 6:
            params = PricingParams(beta_trans=float(rng.uniform(0, 5)), beta_flow=0.0, eta=float(rng.uniform(0.05, 0.95)))
            args = (MarketFactors(), params, float(rng.uniform(0, 1)), 0.0)
        else:
            params = PricingParams(beta_trans=0.0, beta_flow=float(rng.uniform(0, 3)))
            args = (MarketFactors(), params, 0.0, float(rng.uniform(-0.5, 1.0)))
        full = full_customer_price(base, args[2], args[0], args[1], args[3]).final_raw
        assert premium_discount_form(base, *args) == pytest.approx(full, rel=1e-12)


# ---------------------------------------------------------------- 9

def _sweep(out: Path, jobs: int):
    code = main(["sweep", "--beta-flow", "0.5:2.0:0.5", "--seed", "7", "--jobs", str(jobs), "--out", str(out)])
    assert code == 0
    return sorted(p.name for p in out.iterdir())


@criterion(9, "sweep determinism")
def test_c9_sweep_byte_identical(tmp_path):
    names = _sweep(tmp_path / "j1", 1)
    assert _sweep(tmp_path / "j8", 8) == names
    assert _sweep(tmp_path / "again", 1) == names
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "j1", tmp_path / "j8", names, shallow=False)
    assert mismatch == [] and errors == []
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "j1", tmp_path / "again", names, shallow=False)
    assert mismatch == [] and errors == []
