"""Multi-period DC-OPF with a power-to-hydrogen plant, assembled as one LP.

Column families (in order)::

    seg[g,k,t]      generator segment loading, 0..width             N_G*K*T
    shed[b,t]       load shedding, 0..P^L                           N_B*T
    curt[b,t]       wind curtailment                                N_B*T
    wind[b,t]       wind injection, 0..w_t*capacity                 N_B*T
    angle[b,t]      bus angle (reference bus fixed to 0)            N_B*T
    flow[l,d,t]     directed line flow, d in {fwd, bwd}             2*N_L*T
    pch/pdch/soc[p,t]  plant charge, discharge, state of charge     3*P*T
    xi[p]           plant capacity                                  P

With a single plant (P = 1) the column count is
``N_G*K*T + 2*N_B*T + N_B*T + N_B*T + 2*N_L*T + 3*T + 1``.

Row families::

    balance[b,t] (=)  flowdef[l,d,t] (=)  ramp_up/ramp_dn[g,t>0] (<=)
    soc[p,t] (=)  dcap[p,t] (<=)  [ccap[p,t] (<=)]  h2[day] (>=)
    snsp[t] (<=)  windbal[w,t] (= or <=)
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
import scipy.sparse as sp

from .datamodel import Scenario
from .linearize import DEFAULT_SEGMENTS, linearize, quadratic
from .lp import LinearProgram, LPBuilder, VariableIndex

COST_TERMS = ("fuel", "emission", "shed", "curtailment", "p2h")


@dataclass(frozen=True)
class FormulationOptions:
    """How the scenario is turned into an LP.

    ``p2h_buses=None`` takes the plant location(s) from the scenario's
    ``has_p2h`` flags; an explicit tuple of one or two buses overrides them
    and ``()`` builds the no-P2H case (plant variables pinned at zero).
    """

    p2h_buses: tuple[int, ...] | None = None
    segments: int = DEFAULT_SEGMENTS
    fix_xi: float | None = None
    charge_limited: bool = False
    curtailment: Literal["equality", "inequality"] = "equality"
    h2_demand_mwh_per_day: float | None = None
    include_h2_demand: bool = True
    snsp_limit: float | None = None
    interconnector: bool = False
    snsp_check: bool = True

    def plant_buses(self, s: Scenario) -> tuple[int, ...]:
        if self.p2h_buses is None:
            return tuple(s.p2h_buses)
        return tuple(self.p2h_buses)

    def h2_demand(self, s: Scenario) -> float:
        if not self.include_h2_demand:
            return 0.0
        if self.h2_demand_mwh_per_day is not None:
            return float(self.h2_demand_mwh_per_day)
        return s.economics.h2_demand_mwh_per_day

    def snsp(self, s: Scenario) -> float:
        return s.economics.snsp_limit if self.snsp_limit is None else float(self.snsp_limit)


@dataclass
class _Data:
    """Dense arrays derived once from a scenario."""

    bus_pos: dict[int, int]
    tau: np.ndarray
    load: np.ndarray  # (B, T)
    wind_avail: np.ndarray  # (B, T) available wind MW
    wind_rows: np.ndarray  # bus positions hosting wind
    pmin: np.ndarray
    widths: np.ndarray  # (G, K)
    slopes: np.ndarray  # (G, K)
    base_cost: np.ndarray  # (G,)
    gen_bus: np.ndarray
    line_from: np.ndarray
    line_to: np.ndarray
    line_gain: np.ndarray  # MW per rad
    line_limit: np.ndarray
    plants: tuple[int, ...]
    pinned: bool  # no-P2H: plant variables fixed at zero
    day_need: np.ndarray  # per-day H2 requirement, MWh
    total_days: float


def _prepare(s: Scenario, opts: FormulationOptions) -> _Data:
    p = s.profiles
    T = p.horizon
    bus_pos = {b.id: i for i, b in enumerate(s.buses)}
    tau = np.asarray(p.step_hours, dtype=float)
    peak = np.array([b.peak_demand_mw for b in s.buses])
    load = np.outer(peak, np.asarray(p.demand_factor))
    wind_avail = np.zeros((len(s.buses), T))
    for w in s.wind:
        wind_avail[bus_pos[w.bus]] += w.capacity_mw * np.asarray(p.wind_availability)
    wind_rows = np.array(sorted({bus_pos[w.bus] for w in s.wind}), dtype=np.int64)

    K = opts.segments
    G = len(s.generators)
    widths = np.zeros((G, K))
    slopes = np.zeros((G, K))
    base = np.zeros(G)
    for gi, g in enumerate(s.generators):
        pw = linearize(g, K)
        base[gi] = pw.base_cost_eur_per_h
        for k, seg in enumerate(pw.segments):
            widths[gi, k] = seg.width_mw
            slopes[gi, k] = seg.slope_eur_per_mwh

    plants = opts.plant_buses(s)
    for b in plants:
        if b not in bus_pos:
            raise ValueError(f"P2H bus {b} not in scenario")
    if len(set(plants)) != len(plants):
        raise ValueError("P2H buses must be distinct")
    if len(plants) > 2:
        raise ValueError("at most two P2H plants are supported")

    day_need = np.array(
        [opts.h2_demand(s) * tau[list(day)].sum() / 24.0 for day in p.days]
    )
    return _Data(
        bus_pos=bus_pos,
        tau=tau,
        load=load,
        wind_avail=wind_avail,
        wind_rows=wind_rows,
        pmin=np.array([g.pmin_mw for g in s.generators]),
        widths=widths,
        slopes=slopes,
        base_cost=base,
        gen_bus=np.array([bus_pos[g.bus] for g in s.generators], dtype=np.int64),
        line_from=np.array([bus_pos[ln.from_bus] for ln in s.lines], dtype=np.int64),
        line_to=np.array([bus_pos[ln.to_bus] for ln in s.lines], dtype=np.int64),
        line_gain=np.array([s.base_mva * ln.susceptance_pu for ln in s.lines]),
        line_limit=np.array([ln.limit_mw for ln in s.lines]),
        plants=plants,
        pinned=len(plants) == 0,
        day_need=day_need,
        total_days=float(tau.sum()) / 24.0,
    )


def build(s: Scenario, opts: FormulationOptions | None = None) -> LinearProgram:
    opts = opts or FormulationOptions()
    d = _prepare(s, opts)
    e = s.economics
    T = s.profiles.horizon
    B, L, G, K = len(s.buses), len(s.lines), len(s.generators), opts.segments
    tlab = [f"t{t + 1}" for t in range(T)]
    blab = [str(b.id) for b in s.buses]
    glab = [g.id for g in s.generators]
    llab = [ln.name or f"l{i + 1}" for i, ln in enumerate(s.lines)]
    plab = [str(b) for b in d.plants] if d.plants else ["none"]
    P = len(plab)
    tau = d.tau

    lp = LPBuilder(name=s.name)

    # ---- columns
    seg = lp.add_vars(
        "seg", [glab, [f"k{k + 1}" for k in range(K)], tlab],
        lb=0.0,
        ub=d.widths[:, :, None] * np.ones(T),
        cost=(d.slopes[:, :, None] + e.emission_cost_eur_per_mwh) * tau,
    )
    shed = lp.add_vars("shed", [blab, tlab], 0.0, d.load, e.shed_cost_eur_per_mwh * tau)
    curt = lp.add_vars("curt", [blab, tlab], 0.0, d.wind_avail, e.curtailment_cost_eur_per_mwh * tau)
    wind = lp.add_vars("wind", [blab, tlab], 0.0, d.wind_avail)
    amin = np.array([b.angle_min_rad for b in s.buses])[:, None] * np.ones(T)
    amax = np.array([b.angle_max_rad for b in s.buses])[:, None] * np.ones(T)
    ref = d.bus_pos[s.reference_bus]
    amin[ref], amax[ref] = 0.0, 0.0
    angle = lp.add_vars("angle", [blab, tlab], amin, amax)
    lim = d.line_limit[:, None, None] * np.ones((2, T))
    flow = lp.add_vars("flow", [llab, ["fwd", "bwd"], tlab], -lim, lim)

    pin = 0.0 if d.pinned else np.inf
    soc_ub = pin if s.storage.soc_max_mwh is None or d.pinned else s.storage.soc_max_mwh
    pch = lp.add_vars("pch", [plab, tlab], 0.0, pin)
    pdch = lp.add_vars("pdch", [plab, tlab], 0.0, pin)
    soc = lp.add_vars("soc", [plab, tlab], 0.0, soc_ub)
    xi_lo, xi_hi = 0.0, pin
    if opts.fix_xi is not None:
        xi_lo = xi_hi = 0.0 if d.pinned else float(opts.fix_xi)
    xi = lp.add_vars("xi", [plab], xi_lo, xi_hi, e.p2h_cost_eur_per_mw_day * d.total_days)
    lp.obj_offset = float(np.sum(tau * np.sum(d.base_cost + e.emission_cost_eur_per_mwh * d.pmin)))

    # ---- nodal balance
    rhs = d.load.copy()
    np.add.at(rhs, d.gen_bus, -d.pmin[:, None] * np.ones(T))
    if opts.interconnector and s.interconnector_bus is not None:
        net_import = np.asarray(s.profiles.import_mw) - np.asarray(s.profiles.export_mw)
        rhs[d.bus_pos[s.interconnector_bus]] -= net_import
    bal = lp.add_rows("balance", [blab, tlab], "E", rhs)
    lp.add_terms(bal[d.gen_bus][:, None, :], seg, 1.0)
    lp.add_terms(bal, wind, 1.0)
    lp.add_terms(bal, shed, 1.0)
    for pi, b in enumerate(d.plants):
        lp.add_terms(bal[d.bus_pos[b]], pch[pi], -1.0)
    lp.add_terms(bal[d.line_from], flow[:, 0, :], -1.0)
    lp.add_terms(bal[d.line_to], flow[:, 1, :], -1.0)

    # ---- flow definitions: P_bi = base*B*(delta_b - delta_i), both directions
    fdef = lp.add_rows("flowdef", [llab, ["fwd", "bwd"], tlab], "E", 0.0)
    gain = d.line_gain[:, None]
    lp.add_terms(fdef, flow, 1.0)
    lp.add_terms(fdef[:, 0, :], angle[d.line_from], -gain)
    lp.add_terms(fdef[:, 0, :], angle[d.line_to], gain)
    lp.add_terms(fdef[:, 1, :], angle[d.line_to], -gain)
    lp.add_terms(fdef[:, 1, :], angle[d.line_from], gain)

    # ---- ramps between consecutive steps
    if T > 1:
        ru = np.array([g.ramp_up_mw_per_h for g in s.generators])[:, None] * tau[1:]
        rd = np.array([g.ramp_down_mw_per_h for g in s.generators])[:, None] * tau[1:]
        up = lp.add_rows("ramp_up", [glab, tlab[1:]], "L", ru)
        dn = lp.add_rows("ramp_dn", [glab, tlab[1:]], "L", rd)
        lp.add_terms(up[:, None, :], seg[:, :, 1:], 1.0)
        lp.add_terms(up[:, None, :], seg[:, :, :-1], -1.0)
        lp.add_terms(dn[:, None, :], seg[:, :, :-1], 1.0)
        lp.add_terms(dn[:, None, :], seg[:, :, 1:], -1.0)

    # ---- storage: SOC_t = SOC_{t-1} + (eta*Pch_t - Pdch_t)*tau_t
    st = s.storage
    soc_rhs = np.zeros((P, T))
    if not st.cyclic:
        soc_rhs[:, 0] = 0.0 if d.pinned else st.initial_soc_mwh
    srow = lp.add_rows("soc", [plab, tlab], "E", soc_rhs)
    lp.add_terms(srow, soc, 1.0)
    lp.add_terms(srow[:, 1:], soc[:, :-1], -1.0)
    if st.cyclic and T > 1:
        lp.add_terms(srow[:, 0], soc[:, -1], -1.0)
    lp.add_terms(srow, pch, -st.charge_efficiency * tau)
    lp.add_terms(srow, pdch, tau)

    dcap = lp.add_rows("dcap", [plab, tlab], "L", 0.0)
    lp.add_terms(dcap, pdch, 1.0)
    lp.add_terms(dcap, xi[:, None], -1.0)
    if opts.charge_limited:
        ccap = lp.add_rows("ccap", [plab, tlab], "L", 0.0)
        lp.add_terms(ccap, pch, 1.0)
        lp.add_terms(ccap, xi[:, None], -1.0)

    if opts.include_h2_demand:
        days = s.profiles.days
        h2 = lp.add_rows("h2", [[f"d{i + 1}" for i in range(len(days))]], "G", d.day_need)
        for di, day in enumerate(days):
            idx = np.asarray(day)
            lp.add_terms(h2[di], pdch[:, idx], tau[idx])

    # ---- SNSP: sum wind + import <= snsp*(sum load + sum Pch + export)
    lim_snsp = opts.snsp(s)
    prof = s.profiles
    snsp_rhs = lim_snsp * (d.load.sum(axis=0) + np.asarray(prof.export_mw)) - np.asarray(prof.import_mw)
    srow = lp.add_rows("snsp", [tlab], "L", snsp_rhs)
    lp.add_terms(srow, wind, 1.0)
    lp.add_terms(srow, pch, -lim_snsp)

    # ---- wind accounting on wind-hosting buses
    if d.wind_rows.size:
        sense = "E" if opts.curtailment == "equality" else "L"
        wrow = lp.add_rows("windbal", [[blab[i] for i in d.wind_rows], tlab], sense,
                           d.wind_avail[d.wind_rows])
        lp.add_terms(wrow, wind[d.wind_rows], 1.0)
        lp.add_terms(wrow, curt[d.wind_rows], 1.0)

    return lp.build()



def build_max_h2(s: Scenario, cost_cap_eur: float, opts: FormulationOptions | None = None) -> LinearProgram:
    """LP that maximizes hydrogen output subject to a cap on total cost.

    The daily hydrogen rows are dropped; every other constraint is kept and
    one extra row ``costcap`` bounds the original objective by
    ``cost_cap_eur``. The objective becomes ``-sum_t tau_t * Pdch_t`` (MWh),
    so the optimal value is minus the producible hydrogen energy.
    """
    opts = opts or FormulationOptions()
    base = build(s, replace(opts, include_h2_demand=False))
    cap_row = sp.csr_matrix(base.c.reshape(1, -1))
    rows = VariableIndex(dict(base.rows.families), base.rows.size)
    rows.add("costcap", [])
    c = np.zeros(base.n_cols)
    tau = np.asarray(s.profiles.step_hours, dtype=float)
    c[base.columns["pdch"]] = -tau
    return LinearProgram(
        A=sp.vstack([base.A, cap_row], format="csr"),
        senses=np.append(base.senses, "L").astype("<U1"),
        rhs=np.append(base.rhs, cost_cap_eur - base.obj_offset),
        lb=base.lb,
        ub=base.ub,
        c=c,
        obj_offset=0.0,
        columns=base.columns,
        rows=rows,
        name=base.name,
    )

def column_count(n_buses: int, n_lines: int, n_gens: int, segments: int, steps: int, plants: int = 1) -> int:
    T = steps
    return (n_gens * segments * T + 2 * n_buses * T + n_buses * T + n_buses * T
            + 2 * n_lines * T + 3 * T * plants + plants)


def row_count(n_buses: int, n_lines: int, n_gens: int, steps: int, n_days: int, n_wind_buses: int,
              plants: int = 1, charge_limited: bool = False, h2_rows: bool = True) -> int:
    T = steps
    return (n_buses * T + 2 * n_lines * T + 2 * n_gens * (T - 1) + plants * T * (3 if charge_limited else 2)
            + (n_days if h2_rows else 0) + T + n_wind_buses * T)


# --------------------------------------------------------------- extraction


@dataclass
class DispatchSolution:
    status: str
    objective: float
    costs: dict[str, float]
    generation: np.ndarray  # (G, T) MW
    segments: np.ndarray  # (G, K, T)
    shed: np.ndarray  # (B, T)
    wind: np.ndarray
    curtailment: np.ndarray
    angle: np.ndarray
    flow: np.ndarray  # (L, T) from->to
    flow_reverse: np.ndarray  # (L, T) to->from
    charge: np.ndarray  # (P, T)
    discharge: np.ndarray
    soc: np.ndarray
    capacity: np.ndarray  # (P,)
    plant_buses: tuple[int, ...]
    bus_ids: tuple[int, ...]
    generator_ids: tuple[str, ...]
    line_names: tuple[str, ...]
    step_hours: np.ndarray
    days: tuple[tuple[int, ...], ...]
    info: dict = field(default_factory=dict)

    @property
    def total_days(self) -> float:
        return float(self.step_hours.sum()) / 24.0

    @property
    def xi(self) -> float:
        return float(self.capacity.sum())


def extract(lp: LinearProgram, x, s: Scenario, opts: FormulationOptions | None = None,
            status: str = "optimal") -> DispatchSolution:
    opts = opts or FormulationOptions()
    x = np.asarray(x, dtype=float)
    if x.shape != (lp.n_cols,):
        raise ValueError(f"solution has {x.size} entries, LP has {lp.n_cols} columns")
    cols = lp.columns
    d = _prepare(s, opts)
    e = s.economics
    tau = d.tau
    get = lambda name: x[cols[name]]
    seg = get("seg")
    gen = d.pmin[:, None] + seg.sum(axis=1)
    shed, curt, wind = get("shed"), get("curt"), get("wind")
    flows = get("flow")
    pch, pdch, soc, xi = get("pch"), get("pdch"), get("soc"), get("xi")

    fuel = float(np.sum(tau * (d.base_cost[:, None] + np.einsum("gk,gkt->gt", d.slopes, seg))))
    costs = {
        "fuel": fuel,
        "emission": float(np.sum(tau * e.emission_cost_eur_per_mwh * gen)),
        "shed": float(np.sum(tau * e.shed_cost_eur_per_mwh * shed)),
        "curtailment": float(np.sum(tau * e.curtailment_cost_eur_per_mwh * curt)),
        "p2h": float(e.p2h_cost_eur_per_mw_day * d.total_days * xi.sum()),
    }
    fuel_quadratic = float(sum(
        np.sum(tau * quadratic(g, gen[gi])) for gi, g in enumerate(s.generators)
    ))
    sol = DispatchSolution(
        status=status,
        objective=lp.objective(x),
        costs=costs,
        generation=gen,
        segments=seg,
        shed=shed,
        wind=wind,
        curtailment=curt,
        angle=get("angle"),
        flow=flows[:, 0, :],
        flow_reverse=flows[:, 1, :],
        charge=pch,
        discharge=pdch,
        soc=soc,
        capacity=xi,
        plant_buses=d.plants,
        bus_ids=tuple(b.id for b in s.buses),
        generator_ids=tuple(g.id for g in s.generators),
        line_names=tuple(ln.name or f"l{i + 1}" for i, ln in enumerate(s.lines)),
        step_hours=tau,
        days=s.profiles.days,
    )
    sol.info["fuel_quadratic"] = fuel_quadratic
    return sol


# ------------------------------------------------------------------- audit


def audit(sol: DispatchSolution, s: Scenario, opts: FormulationOptions | None = None) -> dict[str, float]:
    """Model-level residuals of an extracted solution, recomputed from scenario data.

    Every entry is a non-negative violation (0 means the equation holds exactly).
    """
    opts = opts or FormulationOptions()
    d = _prepare(s, opts)
    tau = d.tau
    B, T = d.load.shape
    out: dict[str, float] = {}

    inj = np.zeros((B, T))
    np.add.at(inj, d.gen_bus, sol.generation)
    inj += sol.wind - d.load + sol.shed
    for pi, b in enumerate(d.plants):
        inj[d.bus_pos[b]] -= sol.charge[pi]
    if opts.interconnector and s.interconnector_bus is not None:
        inj[d.bus_pos[s.interconnector_bus]] += np.asarray(s.profiles.import_mw) - np.asarray(s.profiles.export_mw)
    out_flow = np.zeros((B, T))
    np.add.at(out_flow, d.line_from, sol.flow)
    np.add.at(out_flow, d.line_to, sol.flow_reverse)
    out["nodal_balance"] = float(np.abs(inj - out_flow).max(initial=0.0))

    dtheta = sol.angle[d.line_from] - sol.angle[d.line_to]
    expect = d.line_gain[:, None] * dtheta
    out["flow_equation"] = float(max(np.abs(sol.flow - expect).max(initial=0.0),
                                     np.abs(sol.flow_reverse + expect).max(initial=0.0)))
    out["line_limits"] = float(np.maximum(np.abs(sol.flow) - d.line_limit[:, None], 0.0).max(initial=0.0))

    ru = np.array([g.ramp_up_mw_per_h for g in s.generators])[:, None] * tau[1:]
    rd = np.array([g.ramp_down_mw_per_h for g in s.generators])[:, None] * tau[1:]
    step = np.diff(sol.generation, axis=1)
    out["ramp"] = float(max(np.maximum(step - ru, 0).max(initial=0.0), np.maximum(-step - rd, 0).max(initial=0.0)))
    pmax = np.array([g.pmax_mw for g in s.generators])[:, None]
    out["generator_limits"] = float(max(np.maximum(d.pmin[:, None] - sol.generation, 0).max(initial=0.0),
                                        np.maximum(sol.generation - pmax, 0).max(initial=0.0)))

    st = s.storage
    prev = np.zeros_like(sol.soc)
    prev[:, 1:] = sol.soc[:, :-1]
    prev[:, 0] = sol.soc[:, -1] if st.cyclic else (0.0 if d.pinned else st.initial_soc_mwh)
    rec = sol.soc - prev - (st.charge_efficiency * sol.charge - sol.discharge) * tau
    out["soc_recursion"] = float(np.abs(rec).max(initial=0.0))
    out["soc_nonnegative"] = float(np.maximum(-sol.soc, 0).max(initial=0.0))
    out["discharge_cap"] = float(np.maximum(sol.discharge - sol.capacity[:, None], 0).max(initial=0.0))
    if opts.charge_limited:
        out["charge_cap"] = float(np.maximum(sol.charge - sol.capacity[:, None], 0).max(initial=0.0))

    if opts.include_h2_demand:
        made = np.array([np.sum(tau[list(day)] * sol.discharge[:, list(day)]) for day in s.profiles.days])
        out["h2_coverage"] = float(np.maximum(d.day_need - made, 0).max(initial=0.0))

    limit = opts.snsp(s)
    prof = s.profiles
    num = sol.wind.sum(axis=0) + np.asarray(prof.import_mw)
    den = d.load.sum(axis=0) + sol.charge.sum(axis=0) + np.asarray(prof.export_mw)
    pos = den > 0
    ratio = np.zeros(T)
    ratio[pos] = num[pos] / den[pos]
    out["snsp_ratio"] = float(np.maximum(ratio[pos] - limit, 0).max(initial=0.0))

    total = sol.wind + sol.curtailment
    if opts.curtailment == "equality":
        out["wind_closure"] = float(np.abs(total - d.wind_avail).max(initial=0.0))
    else:
        out["wind_closure"] = float(np.maximum(total - d.wind_avail, 0).max(initial=0.0))
    out["wind_limits"] = float(np.maximum(sol.wind - d.wind_avail, 0).max(initial=0.0))
    out["shed_limits"] = float(np.maximum(sol.shed - d.load, 0).max(initial=0.0))

    out["cost_decomposition"] = abs(sum(sol.costs.values()) - sol.objective)

    # greedy fill: no load on segment k+1 while a cheaper segment k has room
    seg = sol.segments
    room = d.widths[:, :-1, None] - seg[:, :-1, :]
    steeper = (d.slopes[:, 1:] > d.slopes[:, :-1] + 1e-12)[:, :, None]
    clash = np.where(steeper, np.minimum(room, seg[:, 1:, :]), 0.0)
    out["greedy_fill"] = float(np.maximum(clash, 0).max(initial=0.0))
    return out
