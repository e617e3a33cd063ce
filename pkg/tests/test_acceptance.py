"""Acceptance criteria, each at its stated tolerance and time budget.

Every test prints one PASS/FAIL line; the lines are repeated together in
the "acceptance criteria" section of the pytest summary. Run standalone
with ``python3 tests/test_acceptance.py``.
"""

import json
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from oracles import brute_force_lp, highs_mps, random_box_lp
from p2hgrid.analysis import SITING_OPTIONS, run_dispatch, sweep_pairs, sweep_snsp
from p2hgrid.aviation import FuelPriceInputs, equivalent_jet_fuel_price, hydrogen_equivalent, route_spec
from p2hgrid.datamodel import load_scenario
from p2hgrid.formulation import FormulationOptions, audit, build
from p2hgrid.linearize import evaluate_piecewise, linearize
from p2hgrid.lp import LinearProgram
from p2hgrid.solver import solve, write_mps

LEVELS = [0.55, 0.60, 0.65, 0.70, 0.75, 0.80]


@contextmanager
def criterion(record, number, title, budget_s=None):
    state = {"detail": ""}
    t0 = time.perf_counter()
    try:
        yield state
        elapsed = time.perf_counter() - t0
        if budget_s is not None:
            assert elapsed < budget_s, f"took {elapsed:.1f} s, budget {budget_s} s"
    except BaseException as exc:
        msg = str(exc).strip().splitlines()[0] if str(exc).strip() else ""
        record(number, "FAIL", title, f"{type(exc).__name__}: {msg}")
        raise
    budget = f" of {budget_s} s" if budget_s is not None else ""
    record(number, "PASS", title, f"{state['detail']}; {elapsed:.2f} s{budget}".lstrip("; "))


def test_criterion_01_aviation_exactness(record_criterion):
    with criterion(record_criterion, 1, "aviation figures for DUB-LHR", budget_s=1.0) as c:
        plan = hydrogen_equivalent(route_spec("DUB-LHR"), mode="paper")
        assert plan.daily_jet_fuel_kg == 119800
        assert plan.daily_co2_t == 412.5
        assert abs(plan.daily_h2_kg - 42785.7) <= 0.1
        assert abs(plan.daily_h2_mwh - 2353.175) <= 0.1
        p0 = equivalent_jet_fuel_price(plan, FuelPriceInputs(0.5, 0.0))
        assert abs(p0 - 25.45) <= 0.01
        c["detail"] = (f"D_f {plan.daily_jet_fuel_kg:.0f} kg, CO2 {plan.daily_co2_t} t, "
                       f"H2 {plan.daily_h2_kg:.2f} kg = {plan.daily_h2_mwh:.3f} MWh, P_ef {p0:.4f}")


def test_criterion_02_offset_price_formula(record_criterion):
    with criterion(record_criterion, 2, "max-offset equivalent price from the formula") as c:
        plan = hydrogen_equivalent(route_spec("DUB-LHR"), mode="paper")
        p = equivalent_jet_fuel_price(plan, FuelPriceInputs(0.5, 0.36))
        assert abs(p - 43.78) <= 0.01
        c["detail"] = f"P_ef {p:.4f} EUR/MWh from the formula"


def test_criterion_03_linearization(record_criterion):
    with criterion(record_criterion, 3, "piecewise cost for 100 generators, K in {1,2,10,50}", budget_s=5.0) as c:
        rng = np.random.default_rng(2024)

        class Gen:
            pass

        checked = 0
        for i in range(100):
            g = Gen()
            g.id, g.a, g.b, g.c = f"r{i}", rng.uniform(1e-4, 0.05), rng.uniform(5, 120), rng.uniform(0, 2000)
            g.pmin = float(rng.choice([0.0, rng.uniform(0, 300)]))
            g.pmax = g.pmin + rng.uniform(1, 700)
            q = lambda p: g.a * p * p + g.b * p + g.c
            for k in (1, 2, 10, 50):
                pw = linearize(g, k)
                bps = np.array(pw.breakpoints)
                for p in bps:
                    assert abs(evaluate_piecewise(pw, p) - q(p)) <= 1e-9 * abs(q(p))
                mids = 0.5 * (bps[:-1] + bps[1:])
                for p in np.r_[mids, bps[:-1] + 0.1 * np.diff(bps)]:
                    assert evaluate_piecewise(pw, p) >= q(p)
                assert np.all(np.diff(pw.slopes) >= 0)
                checked += 1
        c["detail"] = f"{checked} curves"


def test_criterion_04_solver_vs_vertex_enumeration(record_criterion):
    with criterion(record_criterion, 4, "simplex vs brute force on 500 random LPs", budget_s=60.0) as c:
        rng = np.random.default_rng(20240611)
        worst_obj = worst_gap = 0.0
        counts = {"optimal": 0, "infeasible": 0}
        for _ in range(500):
            A, s, b, lb, ub, cost = random_box_lp(rng)
            ref = brute_force_lp(A, s, b, lb, ub, cost)
            r = solve(LinearProgram.from_dense(A, s, b, lb, ub, cost))
            assert r.status.value == ref.status
            counts[ref.status] += 1
            if r.optimal:
                err = abs(r.objective - ref.objective)
                assert err <= 1e-6
                gap = abs(r.objective - r.dual_objective)
                assert gap <= 1e-6
                worst_obj, worst_gap = max(worst_obj, err), max(worst_gap, gap)
        c["detail"] = (f"{counts['optimal']} optimal, {counts['infeasible']} infeasible, "
                       f"max |obj err| {worst_obj:.1e}, max duality gap {worst_gap:.1e}")


def test_criterion_05_model_audit(record_criterion, toy6):
    with criterion(record_criterion, 5, "toy6 K=2 model audit", budget_s=10.0) as c:
        opts = FormulationOptions(segments=2)
        run = run_dispatch(toy6, opts)
        assert run.optimal
        assert len(toy6.buses) == 6 and toy6.profiles.horizon == 24
        res = audit(run.solution, toy6, opts)
        keys = ("nodal_balance", "flow_equation", "ramp", "soc_recursion", "h2_coverage", "snsp_ratio",
                "wind_closure", "cost_decomposition")
        for k in keys:
            assert res[k] <= 1e-6, f"{k} residual {res[k]:.2e}"
        c["detail"] = f"max residual {max(res[k] for k in keys):.1e}"


def _monotone(values, direction):
    for a, b in zip(values, values[1:]):
        ok = b <= a + 1e-9 * abs(a) if direction == "down" else b >= a - 1e-9 * abs(a)
        assert ok, f"{direction} violated between {a} and {b}"


@pytest.mark.slow
def test_criterion_06_snsp_monotonicity(record_criterion, toy6, ireland24):
    with criterion(record_criterion, 6, "cost and producible H2 monotone in SNSP, toy6 + ireland35 T=24",
                   budget_s=300.0) as c:
        parts = []
        for name, s in (("toy6", toy6), ("ireland35", ireland24)):
            fixed = sweep_snsp(s, LEVELS, "fixed-demand")
            costs = [p.metrics["cost_meur_per_day"] for p in fixed.points]
            _monotone(costs, "down")
            mx = sweep_snsp(s, LEVELS, "max-h2")
            h2 = [p.metrics["h2_producible_mwh_per_day"] for p in mx.points]
            _monotone(h2, "up")
            parts.append(f"{name} cost {costs[0]:.4f}->{costs[-1]:.4f} MEUR, H2 {h2[0]:.0f}->{h2[-1]:.0f} MWh")
        c["detail"] = "; ".join(parts)


def test_criterion_07_feasibility_logic(record_criterion, toy6):
    with criterion(record_criterion, 7, "fixed zero capacity vs zero demand") as c:
        assert toy6.economics.h2_demand_mwh_per_day > 0
        bad = run_dispatch(toy6, FormulationOptions(fix_xi=0.0))
        assert bad.status == "infeasible"
        assert toy6.economics.p2h_capital_eur_per_mw > 0
        free = run_dispatch(toy6, FormulationOptions(h2_demand_mwh_per_day=0.0))
        assert free.optimal and abs(free.solution.xi) <= 1e-6
        c["detail"] = f"xi=0, D>0 -> {bad.status}; D=0 -> xi {free.solution.xi:.1e}"


def test_criterion_08_pair_dominance(record_criterion, toy6):
    with criterion(record_criterion, 8, "toy6 pair cost <= each member's single cost") as c:
        res = sweep_pairs(toy6, toy6.bus_ids, "cost", opts=SITING_OPTIONS)
        worst = -np.inf
        for p in res.points:
            assert p.ok
            cost = p.kpi.cost_meur_per_day * 1e6
            for b in p.axis:
                single = res.singles[b].kpi.cost_meur_per_day * 1e6
                assert cost <= single + 1e-6 * abs(cost), f"pair {p.axis} vs bus {b}"
                worst = max(worst, cost - single)
        c["detail"] = f"{len(res.points)} pairs, max(pair - single) {worst:.3g} EUR"


@pytest.mark.slow
def test_criterion_09_cross_solver(record_criterion, toy6, ireland24, tmp_path):
    with criterion(record_criterion, 9, "exported MPS solved by HiGHS, toy6 + ireland35 T=24") as c:
        parts = []
        for name, s in (("toy6", toy6), ("ireland35", ireland24)):
            lp = build(s)
            ours = solve(lp)
            ref = highs_mps(write_mps(lp, tmp_path / f"{name}.mps"))
            assert ours.optimal and ref.status == "optimal"
            rel = abs(ours.objective - ref.objective) / abs(ref.objective)
            assert rel <= 1e-4
            parts.append(f"{name} rel diff {rel:.1e}")
        c["detail"] = ", ".join(parts)


@pytest.mark.slow
def test_criterion_10_snapshot_substitute(record_criterion):
    # absolute cost, curtailment, CO2, sizing and siting levels need generator, line and
    # profile data that is not available; the pinned snapshot is checked in their place
    with criterion(record_criterion, 10, "absolute KPI levels not reproducible; snapshot substitute") as c:
        snap = json.loads((Path(__file__).parent / "data" / "snapshots.json").read_text())["ireland35_t24_k10"]
        s = load_scenario("ireland35", horizon=24)
        run = run_dispatch(s, FormulationOptions())
        assert abs(run.solution.objective - snap["objective_eur"]) <= 1e-9 * abs(snap["objective_eur"])
        c["detail"] = f"ireland35 T=24 cost {run.solution.objective / 1e6:.6f} MEUR/day matches snapshot"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
