"""Regenerate the bundled ireland35 scenario (YAML + hourly profile CSV).

Published inputs: generator capacities and connection buses, bus peak
demands, wind-farm buses and capacities, SNSP level, hydrogen demand and
P2H capital cost. Everything else is synthetic and labelled as such in the
scenario's provenance block: line topology and parameters, generator cost,
ramp, minimum-output and emission data, and the 240-hour profiles.

The profiles are smooth deterministic signals (no random numbers), so the
script is reproducible byte for byte.

    python tools/make_ireland35.py
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import yaml

OUT = Path(__file__).resolve().parents[1] / "src" / "p2hgrid" / "data" / "scenarios"

PEAK_DEMAND = {
    1: 175.65, 2: 7.75, 3: 224.74, 4: 61.12, 5: 220.42, 6: 28.31, 7: 110.21, 9: 74.05,
    10: 190.30, 11: 87.22, 12: 144.65, 13: 15.07, 15: 269.50, 16: 188.55, 17: 51.66,
    19: 348.70, 20: 346.98, 21: 229.03, 22: 567.41, 23: 60.27, 25: 242.81, 26: 224.74,
    27: 219.56, 28: 292.75, 29: 103.31, 30: 256.57, 31: 222.99, 32: 172.19, 33: 124.85,
    35: 138.64,
}

GENERATORS = [  # (capacity MW, bus)
    (90, 1), (90, 1), (431, 1), (405, 22), (61, 19), (118, 17), (58, 17), (58, 17),
    (431, 6), (342, 23), (408, 23), (17, 32), (91, 21), (285, 14), (285, 14), (285, 14),
    (104, 27), (230, 22), (230, 22), (52, 16), (52, 16), (81, 15), (81, 15), (54, 9),
    (54, 9), (241, 9), (241, 9), (52, 10), (52, 10), (400, 8), (137, 13), (444, 2),
]

WIND = {12: 611, 14: 648, 15: 666, 25: 537, 27: 629, 29: 537, 30: 574}

# (from, to, susceptance p.u. on 100 MVA, thermal limit MW)
LINES = [
    (1, 2, 12.0, 600), (1, 3, 10.0, 500), (2, 3, 9.0, 500), (3, 4, 8.0, 450), (4, 5, 9.0, 450),
    (5, 6, 10.0, 500), (6, 1, 8.0, 450), (5, 19, 7.0, 500), (6, 17, 9.0, 500),
    (7, 8, 8.0, 400), (8, 9, 10.0, 450), (9, 10, 9.0, 400), (10, 11, 8.0, 350), (11, 12, 7.0, 350),
    (7, 4, 6.0, 350), (8, 3, 7.0, 400), (12, 13, 6.0, 300), (10, 13, 7.0, 350),
    (13, 14, 8.0, 400), (14, 15, 9.0, 450), (15, 25, 7.0, 400), (14, 25, 6.0, 350),
    (13, 16, 8.0, 450), (15, 18, 7.0, 400),
    (16, 17, 10.0, 500), (17, 19, 11.0, 550), (19, 20, 12.0, 600), (20, 21, 12.0, 600),
    (21, 22, 14.0, 700), (22, 23, 12.0, 600), (20, 22, 13.0, 650), (16, 21, 9.0, 500),
    (23, 24, 9.0, 450), (18, 16, 8.0, 450), (18, 24, 8.0, 400),
    (24, 31, 8.0, 400), (31, 32, 9.0, 450), (32, 33, 9.0, 400), (33, 34, 8.0, 400),
    (34, 35, 8.0, 400), (35, 23, 9.0, 450), (31, 33, 7.0, 350),
    (25, 26, 7.0, 350), (26, 27, 8.0, 400), (27, 28, 8.0, 400), (28, 29, 7.0, 350),
    (29, 30, 8.0, 350), (30, 31, 7.0, 350), (26, 18, 7.0, 400), (28, 24, 7.0, 400),
]


def tech_class(cap: float) -> dict:
    if cap >= 400:
        return dict(technology="coal_or_large_ccgt", a=0.0006, b=38.0, c=900.0, pmin=0.30,
                    ramp=150.0, emission=0.80)
    if cap >= 200:
        return dict(technology="ccgt", a=0.0012, b=46.0, c=500.0, pmin=0.25, ramp=120.0,
                    emission=0.37)
    if cap >= 80:
        return dict(technology="ocgt", a=0.004, b=68.0, c=150.0, pmin=0.10, ramp=90.0,
                    emission=0.55)
    return dict(technology="distillate_peaker", a=0.01, b=95.0, c=40.0, pmin=0.0, ramp=None,
                emission=0.70)


def generators() -> list[dict]:
    out = []
    for i, (cap, bus) in enumerate(GENERATORS, start=1):
        t = tech_class(cap)
        tweak = 1.0 + 0.02 * ((i * 7) % 5 - 2)  # +-4% spread inside a class
        out.append(dict(
            id=f"g{i}",
            bus=bus,
            technology=t["technology"],
            a_eur_per_mw2h=round(t["a"] * tweak, 6),
            b_eur_per_mwh=round(t["b"] * tweak, 3),
            c_eur_per_h=t["c"],
            pmin_mw=round(t["pmin"] * cap, 1),
            pmax_mw=float(cap),
            ramp_up_mw_per_h=float(t["ramp"] or cap),
            ramp_down_mw_per_h=float(t["ramp"] or cap),
            emission_t_per_mwh=t["emission"],
        ))
    return out


def profiles(hours: int = 240) -> list[dict]:
    rows = []
    for t in range(hours):
        h = t % 24
        day = t // 24
        daily = 0.5 * (1 - math.cos(2 * math.pi * (h - 4) / 24))  # trough at 04:00
        evening = math.exp(-((h - 18.5) ** 2) / 4.0)
        weekend = 0.93 if day % 7 in (5, 6) else 1.0
        demand = weekend * (0.60 + 0.30 * daily + 0.10 * evening)
        wind = (0.42 + 0.30 * math.sin(2 * math.pi * t / 97.0)
                + 0.14 * math.sin(2 * math.pi * t / 31.0 + 1.0)
                + 0.05 * math.sin(2 * math.pi * t / 7.3))
        wind = min(0.97, max(0.03, wind))
        imp = 250.0 * max(0.0, 0.6 - wind) / 0.6 * (0.6 + 0.4 * evening)
        exp = 300.0 * max(0.0, wind - 0.55) / 0.45 * (1.0 - 0.5 * daily)
        rows.append(dict(
            step=t + 1,
            demand_factor=round(demand, 4),
            wind_availability=round(wind, 4),
            import_mw=round(imp, 1),
            export_mw=round(exp, 1),
        ))
    return rows


def main() -> None:
    buses = [dict(id=b, peak_demand_mw=PEAK_DEMAND.get(b, 0.0), has_p2h=(b == 22)) for b in range(1, 36)]
    doc = {
        "name": "ireland35",
        "base_mva": 100.0,
        "reference_bus": 22,
        "interconnector_bus": 22,
        "buses": buses,
        "lines": [dict(name=f"l{i}", from_bus=f, to_bus=t, susceptance_pu=5 * x, limit_mw=float(lim))
                  for i, (f, t, x, lim) in enumerate(LINES, start=1)],
        "generators": generators(),
        "wind": [dict(name=f"w{i}", bus=b, capacity_mw=float(c)) for i, (b, c) in enumerate(WIND.items(), 1)],
        "profiles": {"file": "ireland35_profiles.csv", "step_duration_h": 1.0, "steps_per_day": 24},
        "economics": {
            "emission_cost_eur_per_mwh": 20.0,
            "shed_cost_eur_per_mwh": 3000.0,
            "curtailment_cost_eur_per_mwh": 80.0,
            "p2h_capital_eur_per_mw": 236000.0,
            "p2h_amortization_per_day": 1.0 / (20 * 365),
            "snsp_limit": 0.7,
            "h2_demand_mwh_per_day": 2353.1,
            "default_emission_t_per_mwh": 0.5,
        },
        "storage": {"initial_soc_mwh": 0.0, "cyclic": False, "charge_efficiency": 1.0},
        "provenance": {
            "published": "generator capacities and buses; bus peak demands (buses 8, 14, 18, 24, 34 "
                         "have no published demand and are zero-demand buses); wind buses and "
                         "capacities (4200 MW); SNSP 0.7; H2 demand 2353.1 MWh/day; P2H capital "
                         "236000 EUR/MW",
            "synthetic": "line topology, susceptances and limits; generator cost coefficients, "
                         "minimum outputs, ramps and emission rates (per technology class by "
                         "capacity); emission, shedding and curtailment prices; 240-hour demand, "
                         "wind and import/export profiles (deterministic signals shaped like a "
                         "ten-day winter record); P2H amortization over 20 years",
            "generator": "tools/make_ireland35.py",
        },
    }
    OUT.mkdir(parents=True, exist_ok=True)
    header = "# Generated by tools/make_ireland35.py; see the provenance block for data sources.\n"
    with open(OUT / "ireland35.yaml", "w", encoding="utf-8") as fh:
        fh.write(header)
        yaml.safe_dump(doc, fh, sort_keys=False, default_flow_style=None, width=100)
    rows = profiles()
    with open(OUT / "ireland35_profiles.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


if __name__ == "__main__":
    main()
