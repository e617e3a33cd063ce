import json
import math
from dataclasses import replace

import numpy as np
import pytest

from p2hgrid import analysis
from p2hgrid.analysis import (
    SITING_OPTIONS,
    kpis,
    no_p2h_options,
    run_dispatch,
    sweep_location,
    sweep_pairs,
    sweep_snsp,
    worker_count,
)
from p2hgrid.aviation import hydrogen_equivalent, route_spec
from p2hgrid.formulation import FormulationOptions

SITE2 = replace(SITING_OPTIONS, segments=2)
LEVELS = [0.55, 0.60, 0.65, 0.70, 0.75, 0.80]


@pytest.fixture(scope="module")
def toy_location(toy6):
    return sweep_location(toy6, toy6.bus_ids, SITE2, workers=1)


@pytest.fixture(scope="module")
def toy_pairs(toy6):
    return sweep_pairs(toy6, toy6.bus_ids, opts=SITE2, workers=1)


def test_worker_count(monkeypatch):
    monkeypatch.delenv(analysis.WORKERS_ENV, raising=False)
    assert worker_count(3) == 3
    monkeypatch.setenv(analysis.WORKERS_ENV, "2")
    assert worker_count() == 2
    monkeypatch.setenv(analysis.WORKERS_ENV, "zero")
    with pytest.raises(ValueError):
        worker_count()


def test_kpis_by_hand(toy6):
    run = run_dispatch(toy6, FormulationOptions(segments=2))
    base = run_dispatch(toy6, no_p2h_options(FormulationOptions(segments=2)))
    plan = hydrogen_equivalent(route_spec("DUB-LHR"))
    k = kpis(run.solution, toy6, plan, base.solution)
    sol = run.solution
    assert k.cost_meur_per_day == pytest.approx(sol.objective / 1e6)
    assert sum(k.cost_breakdown_meur_per_day.values()) == pytest.approx(k.cost_meur_per_day)
    assert k.curtailment_gwh_per_day == pytest.approx(sol.curtailment.sum() / 1e3)
    rates = [0.9, 0.45, 0.6]  # g2 falls back to the scenario default
    assert k.power_co2_t_per_day == pytest.approx(sum(r * sol.generation[i].sum() for i, r in enumerate(rates)))
    assert k.aviation_co2_t_per_day == 0.0
    assert k.h2_benefit_eur_per_mwh == pytest.approx((base.solution.objective - sol.objective) / 200.0)
    kb = kpis(base.solution, toy6, plan)
    assert kb.aviation_co2_t_per_day == pytest.approx(412.5)
    assert kb.xi_mw == 0.0 and kb.h2_benefit_eur_per_mwh is None
    json.dumps(k.as_dict())


def test_location_sweep_shape(toy_location, toy6):
    assert toy_location.axis_values() == toy6.bus_ids
    assert all(p.ok for p in toy_location.points)
    for p in toy_location.points:
        assert p.kpi.plant_buses == (p.axis,)
        assert p.metrics["xi_mw"] > 0
        assert p.metrics["h2_benefit_eur_per_mwh"] == pytest.approx(
            (toy_location.baseline.cost_meur_per_day - p.metrics["cost_meur_per_day"]) * 1e6 / 200.0)


def test_location_baseline_solved_once(toy6, monkeypatch):
    calls = []
    real = analysis.run_dispatch

    def counting(s, opts=None, solver_opts=None):
        calls.append(opts.p2h_buses)
        return real(s, opts, solver_opts)

    monkeypatch.setattr(analysis, "run_dispatch", counting)
    sweep_location(toy6, [2, 4, 5], SITE2, workers=1)
    assert calls.count(()) == 1
    assert sorted(c for c in calls if c) == [(2,), (4,), (5,)]


def test_single_bus_sweep_equals_plain_run(toy6, toy_location):
    plain = run_dispatch(toy6, replace(SITE2, p2h_buses=(4,)))
    point = next(p for p in toy_location.points if p.axis == 4)
    assert point.kpi.cost_meur_per_day == plain.solution.objective / 1e6
    assert point.kpi.xi_mw == plain.solution.xi
    base = run_dispatch(toy6, no_p2h_options(SITE2))
    assert toy_location.baseline.cost_meur_per_day == base.solution.objective / 1e6


def test_parallel_sweep_is_identical(toy6, toy_location):
    par = sweep_location(toy6, toy6.bus_ids, SITE2, workers=2)
    for a, b in zip(par.points, toy_location.points):
        assert a.metrics == b.metrics


def test_location_writes_outputs(toy_location, tmp_path):
    csv_path = toy_location.write_csv(tmp_path / "loc.csv")
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("bus,status,xi_mw,cost_meur_per_day")
    assert len(lines) == 7
    doc = json.loads(toy_location.write_json(tmp_path / "loc.json").read_text())
    assert doc["optimal_points"] == 6 and doc["failed"] == []


def test_unknown_bus_rejected(toy6):
    with pytest.raises(ValueError, match="unknown bus"):
        sweep_location(toy6, [1, 42], SITE2)


def test_pair_dominance(toy_pairs):
    assert len(toy_pairs.points) == 15
    for p in toy_pairs.points:
        assert p.ok
        cost = p.metrics["cost_meur_per_day"]
        for b in p.axis:
            single = toy_pairs.singles[b].metrics["cost_meur_per_day"]
            assert cost <= single + 1e-6 * abs(cost)
        assert p.metrics["xi_a_mw"] + p.metrics["xi_b_mw"] == pytest.approx(p.metrics["xi_mw"])


def test_pair_best_and_matrix(toy_pairs):
    best = toy_pairs.meta["best_pair"]
    cur = [p.metrics["curtailment_gwh_per_day"] for p in toy_pairs.points]
    assert toy_pairs.meta["best_value"] == pytest.approx(min(cur))
    buses, M = toy_pairs.matrix("curtailment_gwh_per_day")
    i, j = buses.index(best[0]), buses.index(best[1])
    assert M[i, j] == M[j, i] == toy_pairs.meta["best_value"]
    assert np.isnan(np.diag(M)).all()


def test_best_tie_break():
    pts = [analysis.SweepPoint((1, 2), "optimal", metrics={"a": 1.0, "b": 5.0}),
           analysis.SweepPoint((1, 3), "optimal", metrics={"a": 1.0, "b": 2.0}),
           analysis.SweepPoint((2, 3), "optimal", metrics={"a": 3.0, "b": 0.0})]
    res = analysis.SweepResult("pairs", "pair", pts)
    assert res.best("a").axis == (1, 2)
    assert res.best("a", tie_break="b").axis == (1, 3)
    assert res.best("a", minimize=False).axis == (2, 3)


def test_pair_needs_two_candidates(toy6):
    with pytest.raises(ValueError):
        sweep_pairs(toy6, [3, 3], opts=SITE2)


def _monotone(values, direction, rel=1e-9):
    for a, b in zip(values, values[1:]):
        if direction == "down":
            assert b <= a + rel * abs(a), (a, b)
        else:
            assert b >= a - rel * abs(a), (a, b)


def test_snsp_monotone_toy6(toy6):
    opts = FormulationOptions(segments=2)
    fixed = sweep_snsp(toy6, LEVELS, "fixed-demand", opts)
    _monotone([p.metrics["cost_meur_per_day"] for p in fixed.points], "down")
    mx = sweep_snsp(toy6, LEVELS, "max-h2", opts)
    assert mx.meta["cost_cap_eur"] == pytest.approx(1.05 * mx.meta["reference_cost_eur"])
    h2 = [p.metrics["h2_producible_mwh_per_day"] for p in mx.points]
    _monotone(h2, "up")
    assert h2[0] >= 200.0 - 1e-6
    for p in mx.points:
        assert p.metrics["cost_meur_per_day"] * 1e6 <= mx.meta["cost_cap_eur"] * (1 + 1e-9)


def test_snsp_bad_levels(toy6):
    for levels in ([], [0.0], [1.2]):
        with pytest.raises(ValueError):
            sweep_snsp(toy6, levels)
    with pytest.raises(ValueError):
        sweep_snsp(toy6, [0.7], mode="nope")


def test_infeasible_points_are_reported_not_raised(toy6):
    res = sweep_snsp(toy6, [0.7], opts=FormulationOptions(segments=2, fix_xi=0.0))
    assert res.points[0].status == "infeasible"
    assert res.summary()["failed"][0]["status"] == "infeasible"


@pytest.mark.slow
def test_ireland35_location_directions(ireland24):
    opts = replace(SITING_OPTIONS, segments=4)
    res = sweep_location(ireland24, [1, 15, 22, 25, 27], opts)
    assert all(p.ok for p in res.points)
    red = {p.axis: p.metrics["curtailment_reduction_gwh_per_day"] for p in res.points}
    assert all(v >= -1e-9 for v in red.values())
    # a wind bus absorbs more stranded wind than the demand centre
    assert max(red[25], red[27], red[15]) > red[1]
    assert all(math.isfinite(p.metrics["h2_benefit_eur_per_mwh"]) for p in res.points)


@pytest.mark.slow
def test_ireland35_pair_dominance(ireland24):
    res = sweep_pairs(ireland24, [15, 22, 27], opts=replace(SITING_OPTIONS, segments=4))
    for p in res.points:
        for b in p.axis:
            assert p.metrics["cost_meur_per_day"] <= res.singles[b].metrics["cost_meur_per_day"] * (1 + 1e-6)
