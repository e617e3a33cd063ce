"""Pin KPI snapshots of the bundled scenarios for the regression tests.

Each case is solved with the package and its objective cross-checked
against HiGHS on the identical matrix before it is written.

    python tools/make_snapshots.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from scipy.optimize import linprog

from p2hgrid.analysis import kpis, no_p2h_options, run_dispatch
from p2hgrid.datamodel import load_scenario
from p2hgrid.formulation import FormulationOptions, build

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "snapshots.json"

CASES = {
    "toy6_k10": ("toy6", None, FormulationOptions()),
    "toy6_k2_charge_limited_bus4": ("toy6", None, FormulationOptions(segments=2, charge_limited=True, p2h_buses=(4,))),
    "ireland35_t24_k10": ("ireland35", 24, FormulationOptions()),
}


def highs_objective(lp) -> float:
    import numpy as np
    import scipy.sparse as sp

    A = sp.csr_matrix(lp.A)
    L, G, E = (lp.senses == k for k in "LGE")
    res = linprog(lp.c, A_ub=sp.vstack([A[L], -A[G]]), b_ub=np.r_[lp.rhs[L], -lp.rhs[G]],
                  A_eq=A[E], b_eq=lp.rhs[E], bounds=np.c_[lp.lb, lp.ub], method="highs")
    if res.status != 0:
        raise RuntimeError(res.message)
    return float(res.fun) + lp.obj_offset


def main() -> int:
    doc = {}
    for key, (name, horizon, opts) in CASES.items():
        s = load_scenario(name, horizon=horizon)
        run = run_dispatch(s, opts)
        base = run_dispatch(s, no_p2h_options(opts))
        ref = highs_objective(build(s, opts))
        gap = abs(run.solution.objective - ref) / abs(ref)
        if gap > 1e-7:
            print(f"{key}: HiGHS disagrees ({run.solution.objective} vs {ref})", file=sys.stderr)
            return 1
        k = kpis(run.solution, s, baseline=base.solution)
        doc[key] = {
            "scenario": name,
            "horizon": s.profiles.horizon,
            "options": {"segments": opts.segments, "charge_limited": opts.charge_limited,
                        "p2h_buses": list(opts.plant_buses(s))},
            "objective_eur": run.solution.objective,
            "baseline_objective_eur": base.solution.objective,
            "highs_objective_eur": ref,
            "kpis": {k2: v for k2, v in k.as_dict().items() if isinstance(v, float)},
        }
        print(f"{key}: {run.solution.objective:.6f} (HiGHS gap {gap:.1e})")
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
