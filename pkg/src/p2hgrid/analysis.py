"""KPI reports and the three sensitivity sweeps (plant location, SNSP level, plant pairs).

Every sweep point is an independent solve. Points run in a process pool
when ``P2HGRID_WORKERS`` (or the ``workers`` argument) is above one;
results are always assembled in request order, so output does not depend
on the worker count.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Literal

import numpy as np

from .aviation import FuelPlan
from .datamodel import Scenario
from .formulation import COST_TERMS, DispatchSolution, FormulationOptions, build, build_max_h2, extract
from .solver import LPSolution, LPStatus, SolverOptions, solve

WORKERS_ENV = "P2HGRID_WORKERS"
DEFAULT_EPSILON = 0.05

# Location and pair sweeps bound charging by the plant capacity; without
# that bound the optimal capacity is just the daily demand spread over the
# day, identical at every bus.
SITING_OPTIONS = FormulationOptions(charge_limited=True)


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


# ------------------------------------------------------------------ solves


@dataclass
class DispatchRun:
    status: str
    solution: DispatchSolution | None
    lp_result: LPSolution

    @property
    def optimal(self) -> bool:
        return self.status == LPStatus.OPTIMAL.value


def run_dispatch(s: Scenario, opts: FormulationOptions | None = None,
                 solver_opts: SolverOptions | None = None) -> DispatchRun:
    """Build, solve and extract one dispatch problem."""
    opts = opts or FormulationOptions()
    lp = build(s, opts)
    res = solve(lp, solver_opts)
    sol = extract(lp, res.x, s, opts, res.status.value) if res.optimal else None
    return DispatchRun(res.status.value, sol, res)


def no_p2h_options(opts: FormulationOptions | None = None) -> FormulationOptions:
    """Options for the matching case without a plant (and so without hydrogen demand)."""
    opts = opts or FormulationOptions()
    return replace(opts, p2h_buses=(), h2_demand_mwh_per_day=0.0, fix_xi=None)


# -------------------------------------------------------------------- KPIs


@dataclass(frozen=True)
class KpiReport:
    """Daily figures for one solved case."""

    cost_meur_per_day: float
    cost_breakdown_meur_per_day: dict[str, float]
    curtailment_gwh_per_day: float
    shed_mwh_per_day: float
    power_co2_t_per_day: float
    aviation_co2_t_per_day: float
    xi_mw: float
    h2_produced_mwh_per_day: float
    h2_demand_mwh_per_day: float
    h2_benefit_eur_per_mwh: float | None
    plant_buses: tuple[int, ...]
    days: float

    def as_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["plant_buses"] = list(self.plant_buses)
        return out


def kpis(sol: DispatchSolution, s: Scenario, plan: FuelPlan | None = None,
         baseline: DispatchSolution | KpiReport | None = None,
         h2_demand_mwh_per_day: float | None = None) -> KpiReport:
    """Daily KPIs of an optimal dispatch.

    ``baseline`` is the paired no-P2H case; when given, the hydrogen benefit
    is (baseline daily cost - this daily cost) / daily hydrogen demand.
    Aviation CO2 is zero whenever a plant is supplying the flights' fuel,
    otherwise it is the route's daily jet-fuel CO2 from ``plan``.
    """
    if sol.status != LPStatus.OPTIMAL.value:
        raise ValueError(f"KPIs need an optimal solution, got status {sol.status!r}")
    days = sol.total_days
    tau = sol.step_hours
    breakdown = {k: sol.costs[k] / days / 1e6 for k in COST_TERMS}
    rates = np.array([s.emission_rate(g) for g in s.generators])
    co2 = float(np.sum(rates[:, None] * sol.generation * tau)) / days
    plant = len(sol.plant_buses) > 0
    aviation = 0.0 if (plant or plan is None) else plan.daily_co2_t
    if h2_demand_mwh_per_day is None:
        h2_demand_mwh_per_day = s.economics.h2_demand_mwh_per_day if plant else 0.0
    produced = float(np.sum(sol.discharge * tau)) / days
    cost_day = sol.objective / days / 1e6
    benefit = None
    if baseline is not None and h2_demand_mwh_per_day > 0:
        base_cost = (baseline.cost_meur_per_day if isinstance(baseline, KpiReport)
                     else baseline.objective / baseline.total_days / 1e6)
        benefit = (base_cost - cost_day) * 1e6 / h2_demand_mwh_per_day
    return KpiReport(
        cost_meur_per_day=cost_day,
        cost_breakdown_meur_per_day=breakdown,
        curtailment_gwh_per_day=float(np.sum(sol.curtailment * tau)) / days / 1e3,
        shed_mwh_per_day=float(np.sum(sol.shed * tau)) / days,
        power_co2_t_per_day=co2,
        aviation_co2_t_per_day=aviation,
        xi_mw=sol.xi,
        h2_produced_mwh_per_day=produced,
        h2_demand_mwh_per_day=float(h2_demand_mwh_per_day),
        h2_benefit_eur_per_mwh=benefit,
        plant_buses=tuple(sol.plant_buses),
        days=days,
    )


# ------------------------------------------------------------------ sweeps


@dataclass
class SweepPoint:
    axis: Any
    status: str
    kpi: KpiReport | None = None
    metrics: dict[str, float] = field(default_factory=dict)
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == LPStatus.OPTIMAL.value


@dataclass
class SweepResult:
    kind: str
    axis_name: str
    points: list[SweepPoint]
    baseline: KpiReport | None = None
    meta: dict[str, Any] = field(default_factory=dict)
    singles: dict[int, SweepPoint] = field(default_factory=dict)

    def axis_values(self) -> list:
        return [p.axis for p in self.points]

    def ok_points(self) -> list[SweepPoint]:
        return [p for p in self.points if p.ok]

    def best(self, metric: str, minimize: bool = True, tie_break: str | None = None) -> SweepPoint | None:
        """Best point by ``metric``; ties (within 1e-9 relative) go to ``tie_break``, then to order."""
        ok = [p for p in self.ok_points() if metric in p.metrics]
        if not ok:
            return None
        sign = 1.0 if minimize else -1.0
        top = min(sign * p.metrics[metric] for p in ok)
        tied = [p for p in ok if sign * p.metrics[metric] <= top + 1e-9 * max(1.0, abs(top))]
        if tie_break is not None and len(tied) > 1:
            return min(tied, key=lambda p: p.metrics[tie_break])
        return tied[0]

    def matrix(self, metric: str) -> tuple[list[int], np.ndarray]:
        """Symmetric bus-by-bus table of a pair metric (NaN off the evaluated pairs)."""
        if self.kind != "pairs":
            raise ValueError("matrix view is only defined for pair sweeps")
        buses = sorted({b for p in self.points for b in p.axis})
        pos = {b: i for i, b in enumerate(buses)}
        M = np.full((len(buses), len(buses)), np.nan)
        for p in self.ok_points():
            a, b = p.axis
            M[pos[a], pos[b]] = M[pos[b], pos[a]] = p.metrics[metric]
        return buses, M

    # -- output --------------------------------------------------------------

    def rows(self) -> list[dict[str, Any]]:
        out = []
        for p in self.points:
            row: dict[str, Any] = {}
            if self.kind == "pairs":
                row["bus_a"], row["bus_b"] = p.axis
            else:
                row[self.axis_name] = p.axis
            row["status"] = p.status
            for k in self.columns():
                row[k] = p.metrics.get(k, "")
            out.append(row)
        return out

    def columns(self) -> list[str]:
        seen: dict[str, None] = {}
        for p in self.points:
            for k in p.metrics:
                seen.setdefault(k, None)
        return list(seen)

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        rows = self.rows()
        head = (["bus_a", "bus_b"] if self.kind == "pairs" else [self.axis_name]) + ["status"] + self.columns()
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(head)
            for r in rows:
                w.writerow([_fmt(r.get(k, "")) for k in head])
        return path

    def summary(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "kind": self.kind,
            "axis": self.axis_name,
            "points": len(self.points),
            "optimal_points": len(self.ok_points()),
            "failed": [{"axis": _jsonable(p.axis), "status": p.status, "message": p.message}
                       for p in self.points if not p.ok],
            "meta": _jsonable(self.meta),
        }
        if self.baseline is not None:
            out["baseline"] = _jsonable(self.baseline.as_dict())
        return out

    def write_json(self, path: str | Path, extra: dict | None = None) -> Path:
        path = Path(path)
        doc = self.summary()
        if extra:
            doc.update(_jsonable(extra))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.10g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if not math.isfinite(v) else float(f"{v:.12g}")
    if isinstance(v, np.integer):
        return int(v)
    return v


# -- point evaluation (top level so process pools can pickle it) -------------


@dataclass(frozen=True)
class _Job:
    scenario: Scenario
    opts: FormulationOptions
    solver_opts: SolverOptions | None
    max_h2_cap: float | None = None


@dataclass
class _Outcome:
    status: str
    solution: DispatchSolution | None
    objective: float
    message: str = ""


def _evaluate(job: _Job) -> _Outcome:
    try:
        if job.max_h2_cap is None:
            run = run_dispatch(job.scenario, job.opts, job.solver_opts)
            return _Outcome(run.status, run.solution, run.lp_result.objective)
        lp = build_max_h2(job.scenario, job.max_h2_cap, job.opts)
        res = solve(lp, job.solver_opts)
        sol = None
        if res.optimal:
            sol = extract(lp, res.x, job.scenario, replace(job.opts, include_h2_demand=False), res.status.value)
            # report the capped cost, not the hydrogen objective
            sol.objective = float(sum(sol.costs.values()))
        return _Outcome(res.status.value, sol, res.objective)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        return _Outcome("error", None, math.nan, f"{type(exc).__name__}: {exc}")


def _run_jobs(jobs: list[_Job], workers: int | None) -> list[_Outcome]:
    n = worker_count(workers)
    if n == 1 or len(jobs) <= 1:
        return [_evaluate(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(n, len(jobs))) as pool:
        return list(pool.map(_evaluate, jobs))


def _point(axis, out: _Outcome, s: Scenario, plan: FuelPlan | None, baseline: KpiReport | None,
           h2_demand: float | None) -> SweepPoint:
    if out.status != LPStatus.OPTIMAL.value or out.solution is None:
        return SweepPoint(axis, out.status, message=out.message)
    k = kpis(out.solution, s, plan, baseline, h2_demand)
    return SweepPoint(axis, out.status, k, _metrics(k, baseline))


def _metrics(k: KpiReport, baseline: KpiReport | None) -> dict[str, float]:
    m = {
        "xi_mw": k.xi_mw,
        "cost_meur_per_day": k.cost_meur_per_day,
        "curtailment_gwh_per_day": k.curtailment_gwh_per_day,
        "power_co2_t_per_day": k.power_co2_t_per_day,
    }
    if baseline is not None:
        m["curtailment_reduction_gwh_per_day"] = baseline.curtailment_gwh_per_day - k.curtailment_gwh_per_day
        m["h2_benefit_eur_per_mwh"] = math.nan if k.h2_benefit_eur_per_mwh is None else k.h2_benefit_eur_per_mwh
    return m


def _baseline(s: Scenario, opts: FormulationOptions, solver_opts, plan) -> KpiReport:
    out = _evaluate(_Job(s, no_p2h_options(opts), solver_opts))
    if out.status != LPStatus.OPTIMAL.value:
        raise RuntimeError(f"no-P2H baseline is {out.status}: {out.message}")
    return kpis(out.solution, s, plan)


def _check_buses(s: Scenario, buses: Iterable[int]) -> list[int]:
    buses = [int(b) for b in buses]
    known = set(s.bus_ids)
    bad = [b for b in buses if b not in known]
    if bad:
        raise ValueError(f"unknown bus id(s) {bad}")
    return buses


def sweep_location(s: Scenario, buses: Iterable[int], opts: FormulationOptions | None = None,
                   plan: FuelPlan | None = None, solver_opts: SolverOptions | None = None,
                   workers: int | None = None) -> SweepResult:
    """Move a single plant across ``buses``; the no-plant baseline is solved once."""
    opts = SITING_OPTIONS if opts is None else opts
    buses = _check_buses(s, buses)
    h2 = opts.h2_demand(s)
    base = _baseline(s, opts, solver_opts, plan)
    jobs = [_Job(s, replace(opts, p2h_buses=(b,)), solver_opts) for b in buses]
    outs = _run_jobs(jobs, workers)
    points = [_point(b, o, s, plan, base, h2) for b, o in zip(buses, outs)]
    return SweepResult("location", "bus", points, base, _meta(s, opts))


def sweep_snsp(s: Scenario, levels: Iterable[float], mode: Literal["fixed-demand", "max-h2"] = "fixed-demand",
               opts: FormulationOptions | None = None, plan: FuelPlan | None = None,
               solver_opts: SolverOptions | None = None, workers: int | None = None,
               epsilon: float = DEFAULT_EPSILON) -> SweepResult:
    """Vary the SNSP limit.

    ``fixed-demand`` minimizes cost at each level with the daily hydrogen
    demand enforced. ``max-h2`` is a two-stage construction: the minimum
    cost C* is found at the lowest level, then each level maximizes total
    hydrogen output with the demand rows dropped and total cost capped at
    (1 + epsilon) * C*. One shared cap keeps the feasible sets nested, so
    producible hydrogen cannot fall as the limit rises.
    """
    opts = opts or FormulationOptions()
    levels = [float(v) for v in levels]
    if not levels:
        raise ValueError("no SNSP levels given")
    if any(not (0.0 < v <= 1.0) for v in levels):
        raise ValueError("SNSP levels must lie in (0, 1]")
    if mode not in ("fixed-demand", "max-h2"):
        raise ValueError(f"unknown SNSP sweep mode {mode!r}")
    h2 = opts.h2_demand(s)
    meta = _meta(s, opts)
    meta["mode"] = mode
    if mode == "fixed-demand":
        jobs = [_Job(s, replace(opts, snsp_limit=v), solver_opts) for v in levels]
        outs = _run_jobs(jobs, workers)
        points = [_point(v, o, s, plan, None, h2) for v, o in zip(levels, outs)]
        return SweepResult("snsp", "snsp_level", points, None, meta)

    ref_level = min(levels)
    ref = _evaluate(_Job(s, replace(opts, snsp_limit=ref_level), solver_opts))
    if ref.status != LPStatus.OPTIMAL.value:
        points = [SweepPoint(v, ref.status, message=f"reference solve at SNSP {ref_level} failed")
                  for v in levels]
        return SweepResult("snsp", "snsp_level", points, None, meta)
    cap = (1.0 + epsilon) * ref.objective
    meta.update(reference_level=ref_level, reference_cost_eur=ref.objective, epsilon=epsilon, cost_cap_eur=cap)
    jobs = [_Job(s, replace(opts, snsp_limit=v), solver_opts, max_h2_cap=cap) for v in levels]
    outs = _run_jobs(jobs, workers)
    points = [_point(v, o, s, plan, None, h2) for v, o in zip(levels, outs)]
    for p in points:
        if p.ok:
            p.metrics["h2_producible_mwh_per_day"] = p.kpi.h2_produced_mwh_per_day
            p.metrics["h2_multiple_of_demand"] = (p.kpi.h2_produced_mwh_per_day / h2) if h2 > 0 else math.nan
    return SweepResult("snsp", "snsp_level", points, None, meta)


def sweep_pairs(s: Scenario, candidates: Iterable[int], objective: Literal["curtailment", "cost"] = "curtailment",
                opts: FormulationOptions | None = None, plan: FuelPlan | None = None,
                solver_opts: SolverOptions | None = None, workers: int | None = None,
                singles: bool = True) -> SweepResult:
    """Evaluate every unordered pair of distinct candidate buses in two-plant mode.

    ``meta['best_pair']`` is the pair with the lowest curtailment or cost;
    with ``singles`` each candidate is also solved alone so pair results can
    be compared with single-plant ones.
    """
    opts = SITING_OPTIONS if opts is None else opts
    cands = sorted(set(_check_buses(s, candidates)))
    if len(cands) < 2:
        raise ValueError("pair sweep needs at least two distinct candidate buses")
    if objective not in ("curtailment", "cost"):
        raise ValueError(f"unknown pair objective {objective!r}")
    h2 = opts.h2_demand(s)
    base = _baseline(s, opts, solver_opts, plan)
    pairs = list(itertools.combinations(cands, 2))
    jobs = [_Job(s, replace(opts, p2h_buses=p), solver_opts) for p in pairs]
    if singles:
        jobs += [_Job(s, replace(opts, p2h_buses=(b,)), solver_opts) for b in cands]
    outs = _run_jobs(jobs, workers)
    points = []
    for p, o in zip(pairs, outs[: len(pairs)]):
        pt = _point(p, o, s, plan, base, h2)
        if pt.ok:
            sol = o.solution
            pt.metrics["xi_a_mw"] = float(sol.capacity[0])
            pt.metrics["xi_b_mw"] = float(sol.capacity[1])
        points.append(pt)
    meta = _meta(s, opts)
    meta["objective"] = objective
    res = SweepResult("pairs", "pair", points, base, meta)
    if singles:
        res.singles = {b: _point(b, o, s, plan, base, h2) for b, o in zip(cands, outs[len(pairs):])}
    metric = "curtailment_gwh_per_day" if objective == "curtailment" else "cost_meur_per_day"
    other = "cost_meur_per_day" if objective == "curtailment" else "curtailment_gwh_per_day"
    best = res.best(metric, tie_break=other)
    meta["best_pair"] = list(best.axis) if best else None
    meta["best_value"] = best.metrics[metric] if best else None
    return res


def _meta(s: Scenario, opts: FormulationOptions) -> dict[str, Any]:
    o = asdict(opts)
    o["p2h_buses"] = None if opts.p2h_buses is None else list(opts.p2h_buses)
    return {"scenario": s.name, "horizon": s.profiles.horizon, "options": o}
