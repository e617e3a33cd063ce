"""Command-line entry point: ``p2hgrid {aviation,dispatch,sweep,export}``.

Exit codes: 0 success, 2 bad usage or data, 3 infeasible model,
4 solver failure (iteration limit, unbounded, numerical trouble).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
import time
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .analysis import (
    SITING_OPTIONS,
    DispatchRun,
    KpiReport,
    kpis,
    no_p2h_options,
    run_dispatch,
    sweep_location,
    sweep_pairs,
    sweep_snsp,
)
from .aviation import (
    FuelPriceInputs,
    equivalent_jet_fuel_price,
    hydrogen_equivalent,
    load_routes,
    route_spec,
    RouteSpec,
)
from .datamodel import ScenarioError, load_scenario, resolve_scenario_path, scenario_to_dict, Scenario
from .formulation import FormulationOptions, build
from .solver import SolverOptions, write_mps

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 2, 3, 4
DEFAULT_JET_FUEL_EUR_PER_KG = 0.5
DEFAULT_OFFSET_PRICES = (0.0, 0.2, 0.36)

log = logging.getLogger("p2hgrid")


class UsageError(Exception):
    pass


# ----------------------------------------------------------------- parsing


def parse_bus_list(text: str) -> list[int]:
    """``"1..5,8,10..12"`` -> [1, 2, 3, 4, 5, 8, 10, 11, 12]."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                a, b = part.split("..", 1)
                lo, hi = int(a), int(b)
                if hi < lo:
                    raise UsageError(f"empty bus range {part!r}")
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise UsageError(f"bad bus list element {part!r}") from None
    if not out:
        raise UsageError("empty bus list")
    return out


def parse_levels(text: str) -> list[float]:
    """``"0.55:0.05:0.80"`` (start:step:stop, inclusive) or ``"0.6,0.7"``."""
    try:
        if ":" in text:
            a, step, b = (float(v) for v in text.split(":"))
            if step <= 0 or b < a:
                raise UsageError(f"bad level range {text!r}")
            n = int(round((b - a) / step))
            return [round(a + i * step, 10) for i in range(n + 1)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad SNSP levels {text!r}") from None


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", default="ireland35", help="bundled name (toy6, ireland35) or YAML path")
    p.add_argument("--horizon", type=int, help="use only the first N steps of the profiles")
    p.add_argument("--segments", type=int, default=10, help="piecewise segments per generator (default 10)")
    p.add_argument("--h2-demand", type=float, help="daily hydrogen demand, MWh/day (default: scenario)")
    p.add_argument("--snsp", type=float, help="SNSP limit as a fraction (default: scenario)")
    p.add_argument("--charge-limited", action=argparse.BooleanOptionalAction, default=None,
                   help="also bound charging by plant capacity")
    p.add_argument("--curtailment", choices=("equality", "inequality"), default="equality")
    p.add_argument("--fix-xi", type=float, help="fix plant capacity, MW")
    p.add_argument("--interconnector", action="store_true",
                   help="inject net import at the scenario's interconnector bus")
    p.add_argument("--max-iterations", type=int, help="simplex iteration limit")
    p.add_argument("--time-limit", type=float, help="simplex time limit per solve, seconds")
    p.add_argument("--route", default="DUB-LHR", help="flight route supplying the aviation KPIs")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="p2hgrid", description="P2H plant sizing inside a multi-period DC-OPF.")
    ap.add_argument("--version", action="version", version=f"p2hgrid {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("aviation", help="daily jet fuel, CO2 and hydrogen equivalent of a route")
    a.add_argument("--route", help="route code from the bundled table, e.g. DUB-LHR")
    a.add_argument("--flights-per-day", type=float)
    a.add_argument("--fuel-per-journey", type=float, help="kg of jet fuel per flight")
    a.add_argument("--seats", type=float, help="seats per aircraft")
    a.add_argument("--co2-per-pax", type=float, help="kg CO2 per passenger per leg")
    a.add_argument("--mode", choices=("paper", "truncated", "exact"), default="paper",
                   help="hydrogen mass from the rounded 2.8 heating-value ratio, the same ratio "
                        "with mass and energy truncated, or the exact ratio")
    a.add_argument("--jet-fuel-price", type=float, default=DEFAULT_JET_FUEL_EUR_PER_KG, help="EUR/kg")
    a.add_argument("--offset-prices", default=",".join(str(v) for v in DEFAULT_OFFSET_PRICES),
                   help="comma list of carbon-offset prices, EUR/kg of fuel")
    a.add_argument("--list-routes", action="store_true")
    a.add_argument("--out-dir", type=Path)

    d = sub.add_parser("dispatch", help="solve one dispatch case and write KPIs and trajectories")
    _add_model_args(d)
    d.add_argument("--p2h-bus", type=int, action="append", help="plant bus (repeat for a pair)")
    d.add_argument("--no-p2h", action="store_true", help="model without a plant")
    d.add_argument("--no-baseline", action="store_true", help="skip the paired no-P2H solve")
    d.add_argument("--out-dir", type=Path, default=Path("p2hgrid-out"))

    s = sub.add_parser("sweep", help="location, SNSP or bus-pair sensitivity study")
    s.add_argument("kind", choices=("location", "snsp", "pairs"))
    _add_model_args(s)
    s.add_argument("--buses", help="location sweep buses, e.g. 1..35 (default: all)")
    s.add_argument("--candidates", help="pair sweep candidate buses (default: all)")
    s.add_argument("--levels", default="0.55:0.05:0.80", help="SNSP levels start:step:stop or list")
    s.add_argument("--mode", choices=("fixed-demand", "max-h2", "both"), default="both")
    s.add_argument("--epsilon", type=float, default=0.05, help="max-H2 cost slack over the minimum")
    s.add_argument("--objective", choices=("curtailment", "cost"), default="curtailment")
    s.add_argument("--workers", type=int, help="parallel solves (default: $P2HGRID_WORKERS or 1)")
    s.add_argument("--strict", action="store_true", help="non-zero exit if any point fails")
    s.add_argument("--out-dir", type=Path, default=Path("p2hgrid-out"))

    e = sub.add_parser("export", help="write the LP in fixed-field MPS format")
    _add_model_args(e)
    e.add_argument("--p2h-bus", type=int, action="append")
    e.add_argument("--no-p2h", action="store_true")
    e.add_argument("--output", type=Path, required=True, help="MPS file to write")
    return ap


# ----------------------------------------------------------------- helpers


def _load(args) -> tuple[Scenario, Path]:
    path = resolve_scenario_path(args.scenario)
    return load_scenario(path, horizon=args.horizon), path


def scenario_hash(s: Scenario) -> str:
    doc = json.dumps(scenario_to_dict(s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(doc.encode("utf-8")).hexdigest()


def _options(args, default: FormulationOptions | None = None) -> FormulationOptions:
    base = default or FormulationOptions()
    plants = None
    if getattr(args, "no_p2h", False):
        if getattr(args, "p2h_bus", None):
            raise UsageError("--no-p2h and --p2h-bus are mutually exclusive")
        plants = ()
    elif getattr(args, "p2h_bus", None):
        plants = tuple(args.p2h_bus)
    if args.segments < 1:
        raise UsageError("--segments must be at least 1")
    if args.snsp is not None and not (0.0 < args.snsp <= 1.0):
        raise UsageError("--snsp must lie in (0, 1]")
    charge = base.charge_limited if args.charge_limited is None else args.charge_limited
    return FormulationOptions(
        p2h_buses=plants,
        segments=args.segments,
        fix_xi=args.fix_xi,
        charge_limited=charge,
        curtailment=args.curtailment,
        h2_demand_mwh_per_day=args.h2_demand,
        snsp_limit=args.snsp,
        interconnector=args.interconnector,
    )


def _solver_options(args) -> SolverOptions:
    return SolverOptions(max_iterations=args.max_iterations, time_limit=args.time_limit)


def _plan(code: str):
    return hydrogen_equivalent(route_spec(code))


def _write_json(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, Path):
        return str(v)
    raise TypeError(type(v).__name__)


def _manifest(command: str, args, s: Scenario, path: Path, opts, timings: dict, solver: dict) -> dict:
    skip = {"func", "out_dir"}
    return {
        "tool": "p2hgrid",
        "version": __version__,
        "command": command,
        "scenario": {"name": s.name, "path": str(path), "sha256": scenario_hash(s),
                     "horizon": s.profiles.horizon},
        "arguments": {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k not in skip},
        "options": _opts_dict(opts),
        "solver": solver,
        "timings_s": {k: round(v, 3) for k, v in timings.items()},
        "python": platform.python_version(),
    }


def _opts_dict(opts) -> dict:
    if opts is None:
        return {}
    d = asdict(opts)
    if d.get("p2h_buses") is not None:
        d["p2h_buses"] = list(d["p2h_buses"])
    return d


def _fmt(v: float) -> str:
    return f"{float(v):.10g}"


def _table(path: Path, header: list[str], hours: np.ndarray, columns: np.ndarray) -> None:
    """One row per step; ``columns`` is (n_series, T)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "hours"] + header)
        for t in range(len(hours)):
            w.writerow([t + 1, _fmt(hours[t])] + [_fmt(v) for v in columns[:, t]])


def write_trajectories(out: Path, run: DispatchRun) -> list[str]:
    sol = run.solution
    h = sol.step_hours
    buses = [f"bus{b}" for b in sol.bus_ids]
    files = {
        "generation.csv": ([f"{g}_mw" for g in sol.generator_ids], sol.generation),
        "wind.csv": ([f"{b}_mw" for b in buses], sol.wind),
        "curtailment.csv": ([f"{b}_mw" for b in buses], sol.curtailment),
        "shed.csv": ([f"{b}_mw" for b in buses], sol.shed),
        "angle.csv": ([f"{b}_rad" for b in buses], sol.angle),
        "flow.csv": ([f"{n}_mw" for n in sol.line_names], sol.flow),
    }
    if sol.plant_buses:
        head, cols = [], []
        for i, b in enumerate(sol.plant_buses):
            head += [f"pch_bus{b}_mw", f"pdch_bus{b}_mw", f"soc_bus{b}_mwh"]
            cols += [sol.charge[i], sol.discharge[i], sol.soc[i]]
        files["storage.csv"] = (head, np.array(cols))
    for name, (head, cols) in files.items():
        _table(out / name, head, h, cols)
    return sorted(files)


def _solver_stats(run: DispatchRun) -> dict:
    r = run.lp_result
    return {
        "status": r.status.value,
        "iterations": r.iterations,
        "phase1_iterations": r.phase1_iterations,
        "objective_eur": r.objective if np.isfinite(r.objective) else None,
        "primal_residual": None if not np.isfinite(r.primal_residual) else r.primal_residual,
        "dual_objective_eur": None if not np.isfinite(r.dual_objective) else r.dual_objective,
        "solve_time_s": round(r.solve_time, 3),
        "counters": dict(r.info),
    }


def _status_exit(status: str) -> int:
    if status == "optimal":
        return EXIT_OK
    if status == "infeasible":
        return EXIT_INFEASIBLE
    return EXIT_SOLVER


def _print_kpis(k: KpiReport, out=sys.stdout) -> None:
    print(f"daily cost            {k.cost_meur_per_day:12.6f} EUR M/day", file=out)
    for name, v in k.cost_breakdown_meur_per_day.items():
        print(f"  {name:<19} {v:12.6f} EUR M/day", file=out)
    print(f"wind curtailment      {k.curtailment_gwh_per_day:12.6f} GWh/day", file=out)
    print(f"load shed             {k.shed_mwh_per_day:12.4f} MWh/day", file=out)
    print(f"power CO2             {k.power_co2_t_per_day:12.2f} t/day", file=out)
    print(f"aviation CO2          {k.aviation_co2_t_per_day:12.2f} t/day", file=out)
    print(f"plant capacity xi     {k.xi_mw:12.4f} MW", file=out)
    if k.h2_benefit_eur_per_mwh is not None:
        print(f"H2 benefit            {k.h2_benefit_eur_per_mwh:12.4f} EUR/MWh", file=out)


# ---------------------------------------------------------------- commands


def cmd_aviation(args) -> int:
    routes = load_routes()
    if args.list_routes:
        for code, rec in routes.items():
            print(f"{rec.rank:>3}  {code:<10} {rec.flights_per_day:8.2f} flights/day")
        return EXIT_OK
    custom = [args.flights_per_day, args.fuel_per_journey, args.seats, args.co2_per_pax]
    try:
        if args.route:
            overrides = {k: v for k, v in (("flights_per_day", args.flights_per_day),
                                           ("fuel_burn_per_journey_kg", args.fuel_per_journey),
                                           ("seats_per_aircraft", args.seats),
                                           ("co2_per_pax_leg_kg", args.co2_per_pax)) if v is not None}
            spec = route_spec(args.route, **overrides)
            label = args.route
        elif all(v is not None for v in custom):
            spec = RouteSpec(args.flights_per_day, args.fuel_per_journey, args.seats, args.co2_per_pax)
            label = "custom"
        else:
            raise UsageError("give --route CODE or all of --flights-per-day --fuel-per-journey --seats --co2-per-pax")
        offsets = [float(v) for v in args.offset_prices.split(",") if v.strip()]
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    plan = hydrogen_equivalent(spec, args.mode)
    prices = []
    for off in offsets:
        try:
            p = equivalent_jet_fuel_price(plan, FuelPriceInputs(args.jet_fuel_price, off))
        except ZeroDivisionError:
            p = None
        prices.append({"carbon_offset_eur_per_kg": off, "equivalent_price_eur_per_mwh": p})

    print(f"route                    {label}")
    print(f"flights per day          {spec.flights_per_day:.4f}")
    print(f"daily jet fuel           {plan.daily_jet_fuel_kg:.1f} kg/day")
    print(f"daily CO2                {plan.daily_co2_t:.2f} t/day")
    print(f"hydrogen mass            {plan.daily_h2_kg:.1f} kg/day ({plan.mode} mode)")
    print(f"hydrogen energy          {plan.daily_h2_mwh:.3f} MWh/day")
    print(f"jet fuel price           {args.jet_fuel_price:.3f} EUR/kg")
    for row in prices:
        val = "undefined" if row["equivalent_price_eur_per_mwh"] is None else f"{row['equivalent_price_eur_per_mwh']:.4f}"
        print(f"  offset {row['carbon_offset_eur_per_kg']:.3f} EUR/kg    equivalent price {val} EUR/MWh")
    if args.out_dir:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(args.out_dir / "aviation.json", {
            "route": label,
            "inputs": asdict(spec),
            "plan": asdict(plan),
            "jet_fuel_eur_per_kg": args.jet_fuel_price,
            "prices": prices,
            "version": __version__,
        })
    return EXIT_OK


def cmd_dispatch(args) -> int:
    t0 = time.perf_counter()
    s, path = _load(args)
    opts = _options(args)
    plan = _plan(args.route)
    sopts = _solver_options(args)
    timings = {"load": time.perf_counter() - t0}
    t1 = time.perf_counter()
    run = run_dispatch(s, opts, sopts)
    timings["solve"] = time.perf_counter() - t1
    solver = {"case": _solver_stats(run)}
    args.out_dir.mkdir(parents=True, exist_ok=True)
    if not run.optimal:
        _write_json(args.out_dir / "manifest.json", _manifest("dispatch", args, s, path, opts, timings, solver))
        msg = {"infeasible": "model is infeasible (check hydrogen demand against plant limits, "
                             "or --no-p2h with positive demand)"}.get(run.status, f"solver stopped: {run.status}")
        print(f"error: {msg}", file=sys.stderr)
        return _status_exit(run.status)

    baseline = None
    if opts.plant_buses(s) and not args.no_baseline:
        t2 = time.perf_counter()
        base = run_dispatch(s, no_p2h_options(opts), sopts)
        timings["baseline_solve"] = time.perf_counter() - t2
        solver["baseline"] = _solver_stats(base)
        if base.optimal:
            baseline = kpis(base.solution, s, plan)
        else:
            print(f"warning: no-P2H baseline is {base.status}; H2 benefit not reported", file=sys.stderr)
    k = kpis(run.solution, s, plan, baseline, opts.h2_demand(s) if opts.plant_buses(s) else 0.0)
    files = write_trajectories(args.out_dir, run)
    doc = {"kpis": k.as_dict(), "baseline": baseline.as_dict() if baseline else None,
           "objective_eur": run.solution.objective, "trajectory_files": files}
    _write_json(args.out_dir / "kpis.json", doc)
    timings["total"] = time.perf_counter() - t0
    _write_json(args.out_dir / "manifest.json", _manifest("dispatch", args, s, path, opts, timings, solver))
    print(f"scenario {s.name}  steps {s.profiles.horizon}  plant bus(es) {list(k.plant_buses) or 'none'}")
    _print_kpis(k)
    print(f"outputs in {args.out_dir}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    t0 = time.perf_counter()
    s, path = _load(args)
    default = SITING_OPTIONS if args.kind in ("location", "pairs") else FormulationOptions()
    opts = _options(args, default)
    plan = _plan(args.route)
    sopts = _solver_options(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    results = []
    if args.kind == "location":
        buses = parse_bus_list(args.buses) if args.buses else s.bus_ids
        results.append(("location", sweep_location(s, buses, opts, plan, sopts, args.workers)))
    elif args.kind == "snsp":
        levels = parse_levels(args.levels)
        modes = ("fixed-demand", "max-h2") if args.mode == "both" else (args.mode,)
        for m in modes:
            r = sweep_snsp(s, levels, m, opts, plan, sopts, args.workers, args.epsilon)
            results.append((f"snsp_{m.replace('-', '_')}", r))
    else:
        cands = parse_bus_list(args.candidates) if args.candidates else s.bus_ids
        results.append(("pairs", sweep_pairs(s, cands, args.objective, opts, plan, sopts, args.workers)))

    failed = 0
    for stem, r in results:
        r.write_csv(args.out_dir / f"{stem}.csv")
        extra = {}
        if r.kind == "pairs":
            metric = "curtailment_gwh_per_day" if args.objective == "curtailment" else "cost_meur_per_day"
            buses, M = r.matrix(metric)
            with open(args.out_dir / f"{stem}_matrix.csv", "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow([f"bus_vs_bus_{metric}"] + buses)
                for b, row in zip(buses, M):
                    w.writerow([b] + ["" if np.isnan(v) else _fmt(v) for v in row])
            extra["singles"] = {str(b): p.metrics for b, p in r.singles.items()}
        r.write_json(args.out_dir / f"{stem}.json", extra)
        failed += len(r.points) - len(r.ok_points())
        _print_sweep(stem, r)
    timings = {"total": time.perf_counter() - t0}
    _write_json(args.out_dir / "manifest.json",
                _manifest(f"sweep {args.kind}", args, s, path, opts, timings, {"failed_points": failed}))
    if failed and args.strict:
        print(f"error: {failed} sweep point(s) failed", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _print_sweep(stem: str, r) -> None:
    print(f"[{stem}] {len(r.ok_points())}/{len(r.points)} points optimal")
    for p in r.points:
        if not p.ok:
            print(f"  {p.axis}: {p.status} {p.message}")
    if r.kind == "pairs" and r.meta.get("best_pair"):
        print(f"  best pair {r.meta['best_pair']} ({r.meta['objective']} = {r.meta['best_value']:.6g})")


def cmd_export(args) -> int:
    s, _ = _load(args)
    opts = _options(args)
    lp = build(s, opts)
    try:
        path = write_mps(lp, args.output)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote {path} ({lp.n_rows} rows, {lp.n_cols} columns, {lp.A.nnz} nonzeros)")
    return EXIT_OK


COMMANDS = {"aviation": cmd_aviation, "dispatch": cmd_dispatch, "sweep": cmd_sweep, "export": cmd_export}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
