import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bess_lifecycle import finance as F
from bess_lifecycle.errors import DomainError, EmptyLedger, NoRootInBracket, NoSignChange, ZeroEnergy
from bess_lifecycle.lifecycle import LedgerRow, LifecycleLedger

import oracles


def ledger(*rows):
    return LifecycleLedger(tuple(rows), rows[-1].year if rows else 0, "cluster")


# ----------------------------------------------------------------------------
# costs


def test_cost_presets():
    assert F.LFP_COSTS.initial_investment == 7_380_000.0
    assert F.replacement_cost(F.LFP_COSTS) == pytest.approx(4 / 11 * 4_150_000)
    assert round(F.replacement_cost(F.LFP_COSTS), -4) == 1_510_000
    assert F.replacement_cost(F.NCM_COSTS) == pytest.approx(4 / 11 * 8_330_000)
    assert F.replacement_cost(F.LFP_COSTS.replace(k_dec=1.0)) == 4_150_000.0


def test_recycling_income_formula_and_override():
    assert F.recycling_income(F.LFP_COSTS) == pytest.approx(2_025_000.0)
    assert F.recycling_income(F.NCM_COSTS) == pytest.approx(1_613_000.0)
    assert F.recycling_income(F.LFP_COSTS.replace(recycle_ratio_bat=0.0, recycle_ratio_equ=0.0)) == 0.0
    assert F.LFP_COSTS.replace(income_rcy_override=F.TABLE_INCOME_RCY["lfp"]).income_rcy == 1_190_000.0


def test_cost_validation():
    with pytest.raises(DomainError):
        F.LFP_COSTS.replace(cost_sta=-1.0)
    with pytest.raises(DomainError):
        F.cost_preset("lead-acid")


# ----------------------------------------------------------------------------
# cash flows


def test_zero_operation_cash_flows():
    flows = F.build_cashflows(ledger(LedgerRow(1, 0.0, 0.0, 0.2)), F.LFP_COSTS)
    assert flows.flows[0] == -7_380_000.0
    assert flows.flows[1] == pytest.approx(F.LFP_COSTS.income_rcy)


def test_one_year_cash_flow_arithmetic():
    costs = F.CostModel(50.0, 30.0, 20.0, income_rcy_override=5.0)
    flows = F.build_cashflows(ledger(LedgerRow(1, 100.0, 10.0, 0.2)), costs)
    assert list(flows.flows) == [-100.0, 95.0]


def test_cash_flows_match_resummation():
    rng = np.random.default_rng(3)
    inc = np.round(rng.uniform(1e5, 2e6, 12), 2)
    op = np.round(rng.uniform(1e3, 5e4, 12), 2)
    rows = [LedgerRow(i + 1, float(np.cumsum(inc)[i]), float(np.cumsum(op)[i]), 0.02 * (i + 1)) for i in range(12)]
    flows = F.build_cashflows(ledger(*rows), F.NCM_COSTS).flows
    expected = [-F.NCM_COSTS.initial_investment] + list(inc - op)
    expected[-1] += F.NCM_COSTS.income_rcy
    assert np.allclose(flows, expected, rtol=0, atol=1e-6)


def test_empty_ledger():
    with pytest.raises(EmptyLedger):
        F.build_cashflows(LifecycleLedger((), 0, "cluster"), F.LFP_COSTS)


# ----------------------------------------------------------------------------
# npv / irr


def test_npv_examples():
    assert F.npv([-100, 30, 80], 0.0) == 10.0
    assert F.npv([-100, 110], 0.10) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        F.npv([-100, 110], -1.0)


def test_irr_examples():
    assert F.irr([-100, 110]) == 0.10
    assert F.irr([-100, 60, 60]) == pytest.approx(oracles.irr_two_period(-100, 60, 60), abs=1e-9)
    assert F.irr([-100, 60, 60]) == pytest.approx(0.13066, abs=1e-5)
    assert F.irr([-100, 0, 121]) == 0.10


def test_irr_errors():
    with pytest.raises(NoSignChange):
        F.irr([-100, -5, -1])
    with pytest.raises(NoRootInBracket):
        F.irr([-1, 1000])  # the root, 999, lies beyond the bracket


def test_irr_multiple_sign_changes_warns():
    with pytest.warns(RuntimeWarning):
        rate = F.irr([-100, 230, -132])
    # roots are 0.10 and 0.20; the smaller one is returned
    assert rate == pytest.approx(0.10, abs=1e-9)
    with pytest.warns(RuntimeWarning):
        assert F.irr_report([-100, 230, -132])["multiple_sign_changes"] is True


@st.composite
def single_change(draw):
    c0 = -draw(st.floats(1e3, 1e7))
    n = draw(st.integers(1, 25))
    rest = draw(st.lists(st.floats(0, 5e6), min_size=n, max_size=n))
    if sum(rest) == 0:
        rest[-1] = 1.0
    return [c0, *rest]


@settings(max_examples=300, deadline=None)
@given(single_change())
def test_irr_root_property(flows):
    try:
        rate = F.irr(flows)
    except NoRootInBracket:
        assert F.npv(flows, F.IRR_HI) > 0 or F.npv(flows, F.IRR_LO) < 0
        return
    assert abs(F.npv(flows, rate)) <= 1e-9 * abs(flows[0])
    assert rate == pytest.approx(oracles.irr_bisect(flows), abs=1e-7)


@settings(max_examples=50, deadline=None)
@given(single_change(), st.floats(1e-3, 1e3))
def test_irr_scale_invariant(flows, k):
    try:
        base = F.irr(flows)
    except NoRootInBracket:
        return
    assert F.irr([k * f for f in flows]) == pytest.approx(base, abs=1e-8)


def test_irr_report_keys():
    rep = F.irr_report([-100, 110])
    assert set(rep) == {"irr", "npv_check", "multiple_sign_changes"}
    assert abs(rep["npv_check"]) <= 1e-7


# ----------------------------------------------------------------------------
# LCOS


def test_lcos_examples():
    one = (F.LcosYear(energy_out=100.0),)
    assert F.lcos(F.LcosInputs(1000.0, one, (0.0,))) == pytest.approx(10.0)
    assert F.lcos(F.LcosInputs(1000.0, one, (0.10,))) == pytest.approx(11.0)


def test_lcos_zero_energy():
    with pytest.raises(ZeroEnergy):
        F.lcos(F.LcosInputs(1000.0, (F.LcosYear(opex=5.0),), (0.08,)))


def test_stepped_schedule():
    sched = F.stepped_discount_schedule(2022, 15)
    assert sched[:5] == (0.08,) * 5 and sched[5:10] == (0.07,) * 5 and sched[10:] == (0.06,) * 5
    factors = F.discount_factors(sched)
    assert factors[6] == pytest.approx(1.08**5 * 1.07**2)


def _years(rng, n):
    return tuple(
        F.LcosYear(opex=float(o), charge_cost=float(c), energy_out=float(e))
        for o, c, e in zip(rng.uniform(0, 1e5, n), rng.uniform(0, 1e5, n), rng.uniform(1e3, 1e4, n))
    )


def test_lcos_matches_hand_sum():
    rng = np.random.default_rng(4)
    years = _years(rng, 12)
    sched = F.stepped_discount_schedule(2022, 12)
    num, den, factor = 5e6, 0.0, 1.0
    for y, r in zip(years, sched):
        factor *= 1 + r
        num += (y.opex + y.charge_cost) / factor
        den += y.energy_out / factor
    assert F.lcos(F.LcosInputs(5e6, years, sched)) == pytest.approx(num / den, rel=1e-12)


def test_lcos_homogeneity_and_monotonicity():
    rng = np.random.default_rng(5)
    years = _years(rng, 8)
    sched = F.stepped_discount_schedule(2022, 8)
    base = F.lcos(F.LcosInputs(2e6, years, sched))
    costs_x3 = tuple(F.LcosYear(opex=3 * y.opex, charge_cost=3 * y.charge_cost, energy_out=y.energy_out) for y in years)
    assert F.lcos(F.LcosInputs(6e6, costs_x3, sched)) == pytest.approx(3 * base, rel=1e-12)
    energy_x2 = tuple(F.LcosYear(opex=y.opex, charge_cost=y.charge_cost, energy_out=2 * y.energy_out) for y in years)
    assert F.lcos(F.LcosInputs(2e6, energy_x2, sched)) == pytest.approx(base / 2, rel=1e-12)
    dearer = list(years)
    dearer[3] = F.LcosYear(opex=years[3].opex + 1.0, charge_cost=years[3].charge_cost, energy_out=years[3].energy_out)
    assert F.lcos(F.LcosInputs(2e6, tuple(dearer), sched)) > base
    more = list(years)
    more[3] = F.LcosYear(opex=years[3].opex, charge_cost=years[3].charge_cost, energy_out=years[3].energy_out + 1.0)
    assert F.lcos(F.LcosInputs(2e6, tuple(more), sched)) < base


def test_lcos_inputs_from_ledger():
    rows = (
        LedgerRow(1, 100.0, 10.0, 0.1, charge_cost=40.0, energy_out=5.0),
        LedgerRow(2, 200.0, 20.0, 0.2, charge_cost=80.0, energy_out=10.0),
    )
    inputs = F.lcos_inputs_from_ledger(ledger(*rows), F.LFP_COSTS, (0.08, 0.08))
    assert inputs.capex == 7_380_000.0
    assert [y.opex for y in inputs.yearly] == [10.0, 10.0]
    assert [y.charge_cost for y in inputs.yearly] == [40.0, 40.0]
    assert [y.energy_out for y in inputs.yearly] == [5.0, 5.0]
    assert inputs.yearly[-1].other_income == F.LFP_COSTS.income_rcy
    assert math.isfinite(F.lcos(inputs))


def test_lcos_schedule_must_cover_years():
    with pytest.raises(DomainError):
        F.LcosInputs(1.0, (F.LcosYear(energy_out=1.0),) * 3, (0.08,))


def test_cash_flow_series_validation():
    with pytest.raises(DomainError):
        F.CashFlowSeries(np.array([-1.0]))
    with pytest.raises(DomainError):
        F.CashFlowSeries(np.array([-1.0, math.nan]))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert len(F.CashFlowSeries(np.array([-1.0, 2.0]))) == 2
