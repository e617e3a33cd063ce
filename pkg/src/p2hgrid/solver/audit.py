"""Residual report for a candidate point, computed from the LP data alone."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..lp import LinearProgram


@dataclass(frozen=True)
class ResidualReport:
    row_violation: np.ndarray
    lower_violation: np.ndarray
    upper_violation: np.ndarray
    objective: float
    row_names: tuple[str, ...]
    col_names: tuple[str, ...]

    @property
    def max_row_violation(self) -> float:
        return float(self.row_violation.max(initial=0.0))

    @property
    def max_bound_violation(self) -> float:
        return float(max(self.lower_violation.max(initial=0.0), self.upper_violation.max(initial=0.0)))

    @property
    def max_violation(self) -> float:
        return max(self.max_row_violation, self.max_bound_violation)

    def violated_rows(self, tol: float = 1e-9) -> list[str]:
        return [self.row_names[i] for i in np.flatnonzero(self.row_violation > tol)]

    def violated_bounds(self, tol: float = 1e-9) -> list[str]:
        bad = (self.lower_violation > tol) | (self.upper_violation > tol)
        return [self.col_names[j] for j in np.flatnonzero(bad)]

    def ok(self, tol: float = 1e-9) -> bool:
        return self.max_violation <= tol

    def summary(self, tol: float = 1e-9) -> str:
        rows, cols = self.violated_rows(tol), self.violated_bounds(tol)
        lines = [
            f"objective            {self.objective:.10g}",
            f"max row violation    {self.max_row_violation:.3e}",
            f"max bound violation  {self.max_bound_violation:.3e}",
        ]
        if rows:
            lines.append(f"violated rows ({len(rows)}): " + ", ".join(rows[:20]))
        if cols:
            lines.append(f"violated bounds ({len(cols)}): " + ", ".join(cols[:20]))
        return "\n".join(lines)


def check_solution(lp: LinearProgram, x) -> ResidualReport:
    x = np.asarray(x, dtype=float)
    if x.shape != (lp.n_cols,):
        raise ValueError(f"point has shape {x.shape}, LP has {lp.n_cols} columns")
    ax = lp.A @ x
    gap = ax - lp.rhs
    viol = np.where(lp.senses == "L", np.maximum(gap, 0.0),
                    np.where(lp.senses == "G", np.maximum(-gap, 0.0), np.abs(gap)))
    with np.errstate(invalid="ignore"):
        lower = np.where(np.isfinite(lp.lb), np.maximum(lp.lb - x, 0.0), 0.0)
        upper = np.where(np.isfinite(lp.ub), np.maximum(x - lp.ub, 0.0), 0.0)
    return ResidualReport(
        row_violation=viol,
        lower_violation=lower,
        upper_violation=upper,
        objective=float(lp.c @ x) + lp.obj_offset,
        row_names=tuple(lp.row_names()),
        col_names=tuple(lp.col_names()),
    )
