"""Bounded-variable revised primal simplex.

Every row gets a logical (slack) column, so the working system is
``[A I] [x; s] = b`` with bounds on all columns; rows whose slack cannot
absorb the initial residual receive an artificial column that phase 1
drives to zero. Upper bounds are handled by bound flips, never by rows.

The basis is kept as a sparse LU factorization plus a product-form eta
file, refactorized periodically. Pricing is devex with incrementally
updated reduced costs. A run of ``stall_limit`` consecutive degenerate
pivots switches pricing to Bland's rule, which stays on until the next
step that actually moves the point; cycling needs an unbroken degenerate
run, so this keeps the method finite.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..lp import LinearProgram

log = logging.getLogger(__name__)

# nonbasic state codes
BASIC, AT_LOWER, AT_UPPER, FREE, FIXED = 0, 1, 2, 3, 4


class LPStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration-limit"


@dataclass(frozen=True)
class SolverOptions:
    feasibility_tol: float = 1e-7
    optimality_tol: float = 1e-7
    max_iterations: int | None = None
    scaling: bool = True
    refactor_every: int = 80
    pivot_tol: float = 1e-9
    stall_limit: int = 400
    time_limit: float | None = None

    def __post_init__(self) -> None:
        if not (self.feasibility_tol > 0 and self.optimality_tol > 0):
            raise ValueError("tolerances must be positive")


@dataclass
class LPSolution:
    status: LPStatus
    x: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    objective: float
    iterations: int
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    dual_objective: float = np.nan
    ray: np.ndarray | None = None
    phase1_iterations: int = 0
    solve_time: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


# ----------------------------------------------------------------- scaling


def _pow2(x: np.ndarray) -> np.ndarray:
    return np.exp2(np.round(np.log2(x)))


def equilibrate(A: sp.csr_matrix, passes: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Geometric-mean row/column scale factors, rounded to powers of two."""
    m, n = A.shape
    r, s = np.ones(m), np.ones(n)
    if A.nnz == 0:
        return r, s
    absA = abs(A).tocoo()
    rows, cols, vals = absA.row, absA.col, absA.data
    for _ in range(passes):
        v = vals * r[rows] * s[cols]
        lv = np.log(v)
        rmax = np.full(m, -np.inf)
        rmin = np.full(m, np.inf)
        np.maximum.at(rmax, rows, lv)
        np.minimum.at(rmin, rows, lv)
        ok = np.isfinite(rmax)
        r[ok] *= np.exp(-0.5 * (rmax[ok] + rmin[ok]))
        v = vals * r[rows] * s[cols]
        lv = np.log(v)
        cmax = np.full(n, -np.inf)
        cmin = np.full(n, np.inf)
        np.maximum.at(cmax, cols, lv)
        np.minimum.at(cmin, cols, lv)
        ok = np.isfinite(cmax)
        s[ok] *= np.exp(-0.5 * (cmax[ok] + cmin[ok]))
    return _pow2(r), _pow2(s)


# ------------------------------------------------------------------ basis


class _Basis:
    """LU of the basis matrix plus a product-form eta file."""

    def __init__(self, F: sp.csc_matrix, head: np.ndarray) -> None:
        B = F[:, head].tocsc()
        self.lu = spla.splu(B, permc_spec="COLAMD", options={"SymmetricMode": False})
        self.etas: list[tuple[int, float, np.ndarray, np.ndarray]] = []

    def ftran(self, v: np.ndarray) -> np.ndarray:
        w = self.lu.solve(v)
        for r, piv, idx, vals in self.etas:
            t = w[r] / piv
            if t != 0.0:
                w[idx] -= vals * t
            w[r] = t
        return w

    def btran(self, c: np.ndarray) -> np.ndarray:
        z = np.array(c, dtype=float)
        for r, piv, idx, vals in reversed(self.etas):
            z[r] = (z[r] - (vals @ z[idx] - piv * z[r])) / piv
        return self.lu.solve(z, trans="T")

    def update(self, r: int, alpha: np.ndarray) -> None:
        idx = np.flatnonzero(np.abs(alpha) > 1e-14)
        self.etas.append((r, float(alpha[r]), idx, alpha[idx].copy()))


# ------------------------------------------------------------------ solver


class _Simplex:
    def __init__(self, lp: LinearProgram, opts: SolverOptions) -> None:
        self.opts = opts
        self.lp = lp
        A = lp.A.tocsr().astype(float)
        m, n = A.shape
        self.m, self.n = m, n
        if opts.scaling:
            r, s = equilibrate(A)
        else:
            r, s = np.ones(m), np.ones(n)
        self.rs, self.cs = r, s
        As = sp.diags(r) @ A @ sp.diags(s)
        cmax = np.max(np.abs(lp.c * s)) if n else 0.0
        self.gamma = float(_pow2(np.array([1.0 / cmax]))[0]) if cmax > 0 else 1.0
        self.b = lp.rhs * r
        self.cost_struct = lp.c * s * self.gamma

        lo = np.where(np.isfinite(lp.lb), lp.lb / s, -np.inf)
        up = np.where(np.isfinite(lp.ub), lp.ub / s, np.inf)
        slo = np.where(lp.senses == "G", -np.inf, 0.0)
        sup = np.where(lp.senses == "L", np.inf, 0.0)
        self.lo = np.concatenate([lo, slo])
        self.up = np.concatenate([up, sup])
        self.F = sp.hstack([As, sp.identity(m, format="csc")], format="csc")

    # -- helpers -------------------------------------------------------------

    def _column(self, j: int) -> np.ndarray:
        F = self.F
        v = np.zeros(self.m)
        s, e = F.indptr[j], F.indptr[j + 1]
        v[F.indices[s:e]] = F.data[s:e]
        return v

    def _refactor(self) -> None:
        self.basis = _Basis(self.F, self.head)
        nonbasic = self.state != BASIC
        xN = np.where(nonbasic, self.x, 0.0)
        rhs = self.b - self.F @ xN
        self.x[self.head] = self.basis.ftran(rhs)
        self.since_refactor = 0

    def _price_all(self) -> None:
        y = self.basis.btran(self.cost[self.head])
        self.d = self.cost - self.FT @ y
        self.d[self.head] = 0.0

    def _initial_point(self) -> None:
        m, n = self.m, self.n
        lo, up = self.lo, self.up
        N = n + m
        x = np.zeros(N)
        state = np.full(N, AT_LOWER, dtype=np.int8)
        fin_lo, fin_up = np.isfinite(lo), np.isfinite(up)
        x[fin_lo] = lo[fin_lo]
        only_up = ~fin_lo & fin_up
        x[only_up] = up[only_up]
        state[only_up] = AT_UPPER
        state[~fin_lo & ~fin_up] = FREE
        # columns whose range straddles zero start at zero, between bounds
        inner = (lo < 0) & (up > 0)
        inner[n:] = False
        x[inner] = 0.0
        state[inner] = FREE
        state[fin_lo & fin_up & (lo == up)] = FIXED

        resid = self.b - self.F[:, :n] @ x[:n]
        slo, sup = lo[n:], up[n:]
        tol = self.opts.feasibility_tol
        ok = (resid >= slo - tol) & (resid <= sup + tol)
        head = np.arange(n, n + m)
        x[n:] = np.clip(resid, slo, sup)
        x[n:][ok] = resid[ok]
        state[n:][ok] = BASIC
        bad = np.flatnonzero(~ok)
        # slacks of violated rows stay nonbasic at the nearest bound
        state[n + bad] = np.where(x[n + bad] == slo[bad], AT_LOWER, AT_UPPER)
        state[n + bad] = np.where(slo[bad] == sup[bad], FIXED, state[n + bad])

        # crash: a column with a single nonzero in a violated row absorbs the gap
        if bad.size:
            S = self.F[:, :n]
            counts = np.diff(S.indptr)
            single = np.flatnonzero((counts == 1) & (state[:n] != FIXED))
            srow = S.indices[S.indptr[single]]
            sval = S.data[S.indptr[single]]
            is_bad = np.zeros(m, dtype=bool)
            is_bad[bad] = True
            keep = is_bad[srow]
            taken = np.zeros(m, dtype=bool)
            for j, i, a in zip(single[keep], srow[keep], sval[keep]):
                if taken[i]:
                    continue
                v = x[j] + (resid[i] - x[n + i]) / a
                if lo[j] - tol <= v <= up[j] + tol:
                    x[j] = min(max(v, lo[j]), up[j])
                    state[j] = BASIC
                    head[i] = j
                    taken[i] = True
            bad = bad[~taken[bad]]

        gap = resid[bad] - x[n + bad]
        sign = np.sign(gap)
        n_art = len(bad)
        if n_art:
            art = sp.csc_matrix((sign, (bad, np.arange(n_art))), shape=(m, n_art))
            self.F = sp.hstack([self.F, art], format="csc")
            x = np.concatenate([x, np.abs(gap)])
            state = np.concatenate([state, np.full(n_art, BASIC, dtype=np.int8)])
            self.lo = np.concatenate([lo, np.zeros(n_art)])
            self.up = np.concatenate([up, np.full(n_art, np.inf)])
            head[bad] = N + np.arange(n_art)
        state[head] = BASIC
        self.n_art = n_art
        self.x, self.state, self.head = x, state, head
        self.FT = self.F.T.tocsr()

    # -- main loop -----------------------------------------------------------

    def _phase(self, cost: np.ndarray, max_iter: int, deadline: float | None) -> str:
        opts = self.opts
        ftol, otol, ptol = opts.feasibility_tol, opts.optimality_tol, opts.pivot_tol
        self.cost = cost
        self._price_all()
        N = len(cost)
        weights = np.ones(N)
        lo, up, state = self.lo, self.up, self.state
        stall = 0
        bland = False
        recheck = False

        while True:
            if self.iterations >= max_iter:
                return "limit"
            if deadline is not None and time.perf_counter() > deadline:
                return "limit"
            d = self.d
            can_inc = (state == AT_LOWER) | (state == FREE)
            can_dec = (state == AT_UPPER) | (state == FREE)
            elig = (can_inc & (d < -otol)) | (can_dec & (d > otol))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                if not recheck and self.since_refactor > 0:
                    self._refactor()
                    self._price_all()
                    recheck = True
                    continue
                return "optimal"
            recheck = False
            if bland:
                q = int(cand[0])
            else:
                score = d[cand] ** 2 / weights[cand]
                q = int(cand[np.argmax(score)])
            direction = 1.0 if d[q] < 0 else -1.0

            alpha = self.basis.ftran(self._column(q))
            delta = -direction * alpha  # rate of change of basic values
            xb = self.x[self.head]
            lb_b, ub_b = lo[self.head], up[self.head]

            dec = delta < -ptol
            inc = delta > ptol
            ratio = np.full(self.m, np.inf)
            ratio[dec] = (xb[dec] - lb_b[dec]) / -delta[dec]
            ratio[inc] = (ub_b[inc] - xb[inc]) / delta[inc]
            if bland:
                theta = ratio.min() if self.m else np.inf
                r = -1
                if np.isfinite(theta):
                    ties = np.flatnonzero(ratio <= theta + 1e-12)
                    r = int(ties[np.argmin(self.head[ties])])
                    theta = max(ratio[r], 0.0)
            else:
                relaxed = np.full(self.m, np.inf)
                relaxed[dec] = (xb[dec] - lb_b[dec] + ftol) / -delta[dec]
                relaxed[inc] = (ub_b[inc] + ftol - xb[inc]) / delta[inc]
                tmax = relaxed.min() if self.m else np.inf
                r = -1
                theta = np.inf
                if np.isfinite(tmax):
                    cands = np.flatnonzero(ratio <= tmax)
                    r = int(cands[np.argmax(np.abs(delta[cands]))])
                    theta = max(ratio[r], 0.0)

            flip = up[q] - self.x[q] if direction > 0 else self.x[q] - lo[q]
            if np.isfinite(flip) and flip <= theta:
                # entering reaches its own bound first, basis unchanged
                theta = max(flip, 0.0)
                self.x[self.head] = xb + theta * delta
                self.x[q] = up[q] if direction > 0 else lo[q]
                state[q] = AT_UPPER if direction > 0 else AT_LOWER
                self.stats["flips"] += 1
                self.iterations += 1
                if theta > 0.0:
                    stall = 0
                    bland = False
                continue
            if r < 0:
                self.unbounded_dir = (q, direction, delta.copy())
                return "unbounded"

            # pivot
            self.stats["pivots"] += 1
            if theta <= 0.0:
                self.stats["degenerate"] += 1
            piv = alpha[r]
            leaving = int(self.head[r])
            rho = self.basis.btran(np.eye(1, self.m, r).ravel())
            alpha_row = self.FT @ rho  # row r of B^-1 F
            self.x[self.head] = xb + theta * delta
            self.x[q] += direction * theta
            if delta[r] < 0:
                self.x[leaving] = lo[leaving]
                state[leaving] = FIXED if lo[leaving] == up[leaving] else AT_LOWER
            else:
                self.x[leaving] = up[leaving]
                state[leaving] = FIXED if lo[leaving] == up[leaving] else AT_UPPER
            if not np.isfinite(self.x[leaving]):
                self.x[leaving] = 0.0
                state[leaving] = FREE

            dq = d[q]
            factor = dq / piv
            self.d = d - factor * alpha_row
            self.d[q] = 0.0
            self.d[leaving] = -factor
            # devex reference weights
            wq = max(weights[q], 1.0)
            ratio_row = alpha_row / piv
            with np.errstate(over="ignore", invalid="ignore"):
                weights = np.maximum(weights, ratio_row**2 * wq)
                weights[leaving] = max(wq / piv**2, 1.0)
            if weights[leaving] > 1e8 or not np.isfinite(weights).all():
                weights = np.ones(N)  # new reference framework

            self.head[r] = q
            state[q] = BASIC
            self.d[self.head] = 0.0
            self.basis.update(r, alpha)
            self.iterations += 1
            self.since_refactor += 1
            if self.since_refactor >= self.opts.refactor_every:
                self._refactor()
                self._price_all()
                weights = np.maximum(weights, 1.0)

            if theta > 0.0:
                stall = 0
                bland = False
            else:
                stall += 1
                if stall >= self.opts.stall_limit and not bland:
                    log.debug("degenerate stall at iteration %d; switching to Bland", self.iterations)
                    bland = True
                    self.stats["bland"] += 1

    def run(self) -> LPSolution:
        t0 = time.perf_counter()
        opts = self.opts
        m, n = self.m, self.n
        max_iter = opts.max_iterations or max(20000, 30 * (m + n))
        deadline = t0 + opts.time_limit if opts.time_limit else None
        self.iterations = 0
        self.stats = {"flips": 0, "pivots": 0, "degenerate": 0, "bland": 0}
        self.unbounded_dir = None
        self._initial_point()
        N = len(self.x)
        self._refactor()

        phase1_iters = 0
        if self.n_art:
            c1 = np.zeros(N)
            c1[n + m :] = 1.0
            outcome = self._phase(c1, max_iter, deadline)
            phase1_iters = self.iterations
            infeas = float(self.x[n + m :].sum())
            if outcome == "limit":
                return self._finish(LPStatus.ITERATION_LIMIT, t0, phase1_iters)
            if infeas > opts.feasibility_tol * max(1.0, np.abs(self.b).max(initial=0.0)) * 10:
                self._price_all()
                y = self.basis.btran(self.cost[self.head])
                ray = y * self.rs
                return self._finish(LPStatus.INFEASIBLE, t0, phase1_iters, ray=ray, infeas=infeas)
            # artificials are pinned at zero from here on
            self.up[n + m :] = 0.0
            art = np.arange(n + m, N)
            nb = art[self.state[art] != BASIC]
            self.x[nb] = 0.0
            self.state[nb] = FIXED

        c2 = np.zeros(N)
        c2[:n] = self.cost_struct
        outcome = self._phase(c2, max_iter, deadline)
        if outcome == "limit":
            return self._finish(LPStatus.ITERATION_LIMIT, t0, phase1_iters)
        if outcome == "unbounded":
            q, direction, delta = self.unbounded_dir
            ray = np.zeros(N)
            ray[q] = direction
            ray[self.head] = delta
            ray = ray[:n] * self.cs
            return self._finish(LPStatus.UNBOUNDED, t0, phase1_iters, ray=ray)
        return self._finish(LPStatus.OPTIMAL, t0, phase1_iters)

    def _finish(self, status, t0, phase1_iters, ray=None, infeas=None) -> LPSolution:
        n = self.n
        lp = self.lp
        x = self.x[:n] * self.cs
        # snap nonbasic values exactly onto their bounds
        at_lo = self.state[:n] == AT_LOWER
        at_up = self.state[:n] == AT_UPPER
        fixed = self.state[:n] == FIXED
        x[at_lo | fixed] = lp.lb[at_lo | fixed]
        x[at_up] = lp.ub[at_up]
        if status is LPStatus.OPTIMAL:
            y_s = self.basis.btran(self.cost[self.head])
            y = y_s * self.rs / self.gamma
            dcost = lp.c - lp.A.T @ y
        else:
            y = np.full(self.m, np.nan)
            dcost = np.full(n, np.nan)
        sol = LPSolution(
            status=status,
            x=x,
            duals=y,
            reduced_costs=dcost,
            objective=lp.objective(x),
            iterations=self.iterations,
            ray=ray,
            phase1_iterations=phase1_iters,
            solve_time=time.perf_counter() - t0,
        )
        sol.info.update(self.stats)
        sol.info["artificials"] = self.n_art
        if infeas is not None:
            sol.info["phase1_infeasibility"] = infeas
        if status is LPStatus.OPTIMAL:
            sol.primal_residual = primal_residual(lp, x)
            sol.dual_objective = dual_objective(lp, y, dcost)
            sol.dual_residual = dual_residual(lp, x, y, dcost)
        return sol


# ------------------------------------------------------------- certificates


def primal_residual(lp: LinearProgram, x: np.ndarray) -> float:
    """Largest constraint or bound violation, in original units."""
    ax = lp.A @ x
    viol = np.zeros(lp.n_rows)
    L, E, G = lp.senses == "L", lp.senses == "E", lp.senses == "G"
    viol[L] = np.maximum(ax[L] - lp.rhs[L], 0.0)
    viol[G] = np.maximum(lp.rhs[G] - ax[G], 0.0)
    viol[E] = np.abs(ax[E] - lp.rhs[E])
    bound = np.maximum(np.maximum(lp.lb - x, 0.0), np.maximum(x - lp.ub, 0.0))
    return float(max(viol.max(initial=0.0), bound.max(initial=0.0)))


def dual_objective(lp: LinearProgram, y: np.ndarray, d: np.ndarray) -> float:
    """Lagrangian dual bound b.y + sum of bound terms (inf if dual infeasible)."""
    val = float(lp.rhs @ y) + lp.obj_offset
    pos = d > 0
    neg = d < 0
    with np.errstate(invalid="ignore"):
        lo_term = np.where(pos, d * lp.lb, 0.0)
        up_term = np.where(neg, d * lp.ub, 0.0)
    # a tiny reduced cost against an infinite bound is treated as zero
    tiny = np.abs(d) < 1e-9 * (1 + np.abs(lp.c))
    lo_term = np.where(tiny & ~np.isfinite(lp.lb), 0.0, lo_term)
    up_term = np.where(tiny & ~np.isfinite(lp.ub), 0.0, up_term)
    return float(val + lo_term.sum() + up_term.sum())


def dual_residual(lp: LinearProgram, x: np.ndarray, y: np.ndarray, d: np.ndarray) -> float:
    """Largest sign violation of duals and reduced costs given the primal point."""
    scale = 1.0 + np.abs(lp.c)
    span = np.maximum(lp.ub - lp.lb, 0.0)
    tol = 1e-9 * (1.0 + np.abs(x)) + 1e-9 * np.where(np.isfinite(span), span, 0.0)
    at_lo = np.abs(x - lp.lb) <= tol
    at_up = np.abs(lp.ub - x) <= tol
    viol = np.zeros(lp.n_cols)
    # d > 0 needs x at lower; d < 0 needs x at upper
    viol = np.where(~at_lo, np.maximum(d, 0.0), viol)
    viol = np.maximum(viol, np.where(~at_up, np.maximum(-d, 0.0), 0.0))
    viol = viol / scale
    yv = np.zeros(lp.n_rows)
    L, G = lp.senses == "L", lp.senses == "G"
    yv[L] = np.maximum(y[L], 0.0)
    yv[G] = np.maximum(-y[G], 0.0)
    return float(max(viol.max(initial=0.0), yv.max(initial=0.0)))


# ------------------------------------------------------------------ entry


def _solve_without_rows(lp: LinearProgram, t0: float) -> LPSolution:
    x = np.where(lp.c > 0, lp.lb, np.where(lp.c < 0, lp.ub, np.where(np.isfinite(lp.lb), lp.lb, np.where(np.isfinite(lp.ub), lp.ub, 0.0))))
    if np.any(~np.isfinite(x)) or np.any(lp.lb > lp.ub):
        status = LPStatus.INFEASIBLE if np.any(lp.lb > lp.ub) else LPStatus.UNBOUNDED
        return LPSolution(status, np.where(np.isfinite(x), x, 0.0), np.zeros(0), lp.c.copy(), np.nan, 0)
    sol = LPSolution(LPStatus.OPTIMAL, x, np.zeros(0), lp.c.copy(), lp.objective(x), 0,
                     solve_time=time.perf_counter() - t0)
    sol.primal_residual = primal_residual(lp, x)
    sol.dual_objective = dual_objective(lp, sol.duals, sol.reduced_costs)
    sol.dual_residual = 0.0
    return sol


def solve(lp: LinearProgram, opts: SolverOptions | None = None) -> LPSolution:
    """Solve ``lp`` to optimality, or report infeasible/unbounded/iteration-limit."""
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    if np.any(lp.lb > lp.ub):
        n = lp.n_cols
        return LPSolution(LPStatus.INFEASIBLE, np.zeros(n), np.full(lp.n_rows, np.nan),
                          np.full(n, np.nan), np.nan, 0)
    if lp.n_rows == 0:
        return _solve_without_rows(lp, t0)
    sol = _Simplex(lp, opts).run()
    log.info("%s: %s obj=%.10g iters=%d (%.2fs)", lp.name, sol.status.value,
             sol.objective, sol.iterations, sol.solve_time)
    return sol
