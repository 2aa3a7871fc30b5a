"""LP / ILP kernel.

Two interchangeable backends sit behind :func:`make_solver`:

``native``
    A dense bounded-variable dual simplex written here.  Every structural
    variable is boxed, so the all-logical starting basis is dual feasible and
    no phase 1 is needed; rows added later enter with their logical basic,
    which keeps the basis dual feasible and allows warm reoptimisation.
    Branch and bound is layered on top.

``highs``
    The same contract delegated to HiGHS through ``highspy`` for instances
    beyond desk scale.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

LE, GE, EQ = "<=", ">=", "="

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-9
INT_TOL = 1e-6
GAP_TOL = 1e-9
MAX_ITER = 100_000

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class ConstraintRow:
    """Sparse linear row ``sum(coef * var) <sense> rhs``.

    Terms are merged, sorted by variable index and stripped of zero
    coefficients on construction.
    """

    terms: tuple
    sense: str
    rhs: float
    tag: str = "initial"

    def __post_init__(self):
        if self.sense not in (LE, GE, EQ):
            raise ValueError(f"bad sense {self.sense!r}")
        acc: dict[int, float] = {}
        for j, a in self.terms:
            acc[int(j)] = acc.get(int(j), 0.0) + float(a)
        terms = tuple((j, a) for j, a in sorted(acc.items()) if a != 0.0)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "rhs", float(self.rhs))

    def activity(self, values) -> float:
        return sum(a * values[j] for j, a in self.terms)

    def violation(self, values) -> float:
        """Positive amount by which ``values`` violates the row."""
        act = self.activity(values)
        if self.sense == LE:
            return act - self.rhs
        if self.sense == GE:
            return self.rhs - act
        return abs(act - self.rhs)

    def support(self) -> tuple:
        return tuple(j for j, _ in self.terms)

    def key(self) -> tuple:
        return (self.terms, self.sense, self.rhs)


@dataclass
class LinearProgram:
    """``min c.x + constant`` over boxed variables and a pool of rows."""

    objective: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    constant: float = 0.0
    rows: list = field(default_factory=list)
    active: list = field(default_factory=list)

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).copy()
        self.lower = np.asarray(self.lower, dtype=float).copy()
        self.upper = np.asarray(self.upper, dtype=float).copy()
        n = len(self.objective)
        if len(self.lower) != n or len(self.upper) != n:
            raise ValueError("bounds and objective differ in length")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("variable bounds must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        rows = list(self.rows)
        self.rows = []
        self.active = []
        self.add_rows(rows)

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def add_rows(self, rows: Iterable[ConstraintRow]) -> None:
        n = self.num_vars
        for r in rows:
            for j, _ in r.terms:
                if not 0 <= j < n:
                    raise ValueError(f"row references variable {j} outside [0, {n})")
            self.rows.append(r)
            self.active.append(True)

    def active_rows(self) -> list:
        return [r for r, a in zip(self.rows, self.active) if a]

    def copy(self) -> "LinearProgram":
        lp = LinearProgram(self.objective, self.lower, self.upper, self.constant)
        lp.rows = list(self.rows)
        lp.active = list(self.active)
        return lp


@dataclass
class LpSolution:
    status: str
    values: np.ndarray
    objective_value: float
    basis: object = None
    iterations: int = 0
    bound: float = -math.inf

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _row_bounds(row: ConstraintRow) -> tuple[float, float]:
    if row.sense == LE:
        return -math.inf, row.rhs
    if row.sense == GE:
        return row.rhs, math.inf
    return row.rhs, row.rhs


# --------------------------------------------------------------------------
# native dual simplex

_BASIC, _LOWER, _UPPER = -1, 0, 1


class DualSimplex:
    """Dense bounded-variable dual simplex with an explicit basis inverse.

    Variables ``0..n-1`` are structural, ``n..n+m-1`` are the row logicals
    ``r_i = a_i . x``.  The basis inverse is updated in product form and
    rebuilt every ``refactor_every`` pivots.
    """

    refactor_every = 64
    bland_after = 50

    def __init__(self, lp: LinearProgram):
        self.n = lp.num_vars
        self.c = lp.objective.copy()
        self.constant = lp.constant
        self.lo = lp.lower.copy()
        self.hi = lp.upper.copy()
        self.A = np.zeros((0, self.n))
        self.basic = np.zeros(0, dtype=np.int64)
        self.status = np.where(self.c >= 0, _LOWER, _UPPER).astype(np.int8)
        self.x = np.where(self.status == _LOWER, self.lo, self.hi)
        self.Binv = np.zeros((0, 0))
        self.d = self.c.copy()
        self.integer = np.zeros(self.n, dtype=bool)
        self.iterations = 0
        self.add_rows(lp.active_rows())

    # ---- bookkeeping -------------------------------------------------------

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def add_rows(self, rows: Sequence[ConstraintRow]) -> None:
        rows = list(rows)
        if not rows:
            return
        k = len(rows)
        m, n = self.m, self.n
        new = np.zeros((k, n))
        rlo = np.empty(k)
        rhi = np.empty(k)
        for i, r in enumerate(rows):
            for j, a in r.terms:
                new[i, j] = a
            rlo[i], rhi[i] = _row_bounds(r)
        # new logicals are appended after the existing ones and enter the basis
        old_total = n + m
        self.A = np.vstack([self.A, new])
        self.lo = np.concatenate([self.lo, rlo])
        self.hi = np.concatenate([self.hi, rhi])
        xs = self.x[:n]
        self.x = np.concatenate([self.x, new @ xs])
        self.status = np.concatenate([self.status, np.full(k, _BASIC, dtype=np.int8)])
        self.d = np.concatenate([self.d, np.zeros(k)])
        basic_new = np.arange(old_total, old_total + k)
        # basis rows for old basics restricted to the new rows
        aB = np.zeros((k, m))
        for pos, j in enumerate(self.basic):
            if j < n:
                aB[:, pos] = new[:, j]
        Binv = np.zeros((m + k, m + k))
        Binv[:m, :m] = self.Binv
        Binv[m:, :m] = aB @ self.Binv
        Binv[m:, m:] = -np.eye(k)
        self.Binv = Binv
        self.basic = np.concatenate([self.basic, basic_new])

    def set_bounds(self, j: int, lo: float, hi: float) -> None:
        self.lo[j] = lo
        self.hi[j] = hi
        if self.status[j] != _BASIC:
            self.x[j] = lo if self.status[j] == _LOWER else hi
        self._recompute_primal()

    def _column(self, j: int) -> np.ndarray:
        if j < self.n:
            return self.Binv @ self.A[:, j]
        return -self.Binv[:, j - self.n]

    def _basis_matrix(self) -> np.ndarray:
        n, m = self.n, self.m
        B = np.zeros((m, m))
        for pos, j in enumerate(self.basic):
            if j < n:
                B[:, pos] = self.A[:, j]
            else:
                B[j - n, pos] = -1.0
        return B

    def _recompute_primal(self) -> None:
        n = self.n
        nb = self.status != _BASIC
        self.x[nb] = np.where(self.status[nb] == _LOWER, self.lo[nb], self.hi[nb])
        if self.m == 0:
            return
        xs = np.where(nb[:n], self.x[:n], 0.0)
        xl = np.where(nb[n:], self.x[n:], 0.0)
        s = self.A @ xs - xl
        self.x[self.basic] = -(self.Binv @ s)

    def _recompute_dual(self) -> None:
        n = self.n
        cB = np.array([self.c[j] if j < n else 0.0 for j in self.basic])
        pi = cB @ self.Binv if self.m else np.zeros(0)
        self.d = np.concatenate([self.c - pi @ self.A, pi]) if self.m else self.c.copy()
        self.d[self.basic] = 0.0

    def refactor(self) -> None:
        if self.m:
            self.Binv = np.linalg.inv(self._basis_matrix())
        self._recompute_dual()
        # restore dual feasibility of boxed nonbasics by bound flips
        nb = self.status != _BASIC
        boxed = np.isfinite(self.lo) & np.isfinite(self.hi) & (self.lo < self.hi)
        flip_up = nb & boxed & (self.status == _LOWER) & (self.d < -FEAS_TOL)
        flip_dn = nb & boxed & (self.status == _UPPER) & (self.d > FEAS_TOL)
        self.status[flip_up] = _UPPER
        self.status[flip_dn] = _LOWER
        self._recompute_primal()

    # ---- snapshots for branch and bound -------------------------------------

    def snapshot(self):
        return (self.basic.copy(), self.status.copy(), self.lo[: self.n].copy(), self.hi[: self.n].copy())

    def restore(self, snap) -> None:
        basic, status, lo, hi = snap
        m_old = len(basic)
        total_old = self.n + m_old
        extra = np.arange(total_old, self.n + self.m)
        self.basic = np.concatenate([basic, extra]).astype(np.int64)
        self.status = np.concatenate([status, np.full(len(extra), _BASIC, dtype=np.int8)])
        self.lo[: self.n] = lo
        self.hi[: self.n] = hi
        self.refactor()

    # ---- the dual simplex loop --------------------------------------------

    def solve(self) -> LpSolution:
        self.refactor()
        bland = False
        degenerate = 0
        since_refactor = 0
        verified = False
        while True:
            if self.iterations > MAX_ITER:
                raise SolverError("dual simplex iteration limit reached")
            if since_refactor >= self.refactor_every:
                self.refactor()
                since_refactor = 0
            m = self.m
            if m == 0:
                break
            xb = self.x[self.basic]
            lb = self.lo[self.basic]
            ub = self.hi[self.basic]
            below = lb - xb
            above = xb - ub
            infeas = np.maximum(below, above)
            if bland:
                cand_rows = np.flatnonzero(infeas > FEAS_TOL)
                r = int(cand_rows[np.argmin(self.basic[cand_rows])]) if len(cand_rows) else 0
            else:
                r = int(np.argmax(infeas))
            if infeas[r] <= FEAS_TOL:
                if verified:
                    break
                self.refactor()
                since_refactor = 0
                verified = True
                continue
            verified = False
            to_lower = below[r] > 0
            rho = self.Binv[r]
            alpha = np.concatenate([rho @ self.A, -rho])
            nb = self.status != _BASIC
            movable = nb & (self.lo < self.hi)
            at_lo = self.status == _LOWER
            at_hi = self.status == _UPPER
            if to_lower:
                cand = movable & ((at_lo & (alpha < -PIVOT_TOL)) | (at_hi & (alpha > PIVOT_TOL)))
            else:
                cand = movable & ((at_lo & (alpha > PIVOT_TOL)) | (at_hi & (alpha < -PIVOT_TOL)))
            idx = np.flatnonzero(cand)
            if len(idx) == 0:
                if since_refactor == 0:
                    return self._result(INFEASIBLE)
                self.refactor()
                since_refactor = 0
                continue
            slack = np.where(at_lo[idx], self.d[idx], -self.d[idx])
            ratios = np.maximum(slack, 0.0) / np.abs(alpha[idx])
            tmin = ratios.min()
            if bland:
                ties = idx[ratios <= tmin + 1e-12]
                q = int(ties.min())
            else:
                near = ratios <= tmin + 1e-12
                sub = idx[near]
                q = int(sub[np.argmax(np.abs(alpha[sub]))])
            t = float(max(slack[idx == q][0], 0.0) / abs(alpha[q]))

            if to_lower:
                self.d += t * alpha
            else:
                self.d -= t * alpha
            self.d[q] = 0.0

            col = self._column(q)
            piv = col[r]
            leaving = int(self.basic[r])
            target = self.lo[leaving] if to_lower else self.hi[leaving]
            delta = (self.x[leaving] - target) / piv
            self.x[q] += delta
            self.x[self.basic] -= delta * col
            self.x[leaving] = target
            self.status[leaving] = _LOWER if to_lower else _UPPER
            self.status[q] = _BASIC
            self.basic[r] = q

            prow = self.Binv[r] / piv
            col[r] = 0.0
            self.Binv -= np.outer(col, prow)
            self.Binv[r] = prow

            self.iterations += 1
            since_refactor += 1
            if t <= 1e-12:
                degenerate += 1
                if degenerate > self.bland_after:
                    bland = True
            else:
                degenerate = 0
        return self._result(OPTIMAL)

    def _result(self, status: str) -> LpSolution:
        n = self.n
        values = np.clip(self.x[:n], self.lo[:n], self.hi[:n])
        if status == INFEASIBLE:
            return LpSolution(INFEASIBLE, values, math.inf, self.snapshot(), self.iterations)
        obj = float(self.c @ values + self.constant)
        return LpSolution(OPTIMAL, values, obj, self.snapshot(), self.iterations, bound=obj)


# --------------------------------------------------------------------------
# HiGHS backend


class HighsSolver:
    """Incremental HiGHS model with the :class:`DualSimplex` interface."""

    def __init__(self, lp: LinearProgram, seed: int = 0):
        import highspy

        self._hs = highspy
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("threads", 1)
        h.setOptionValue("random_seed", int(seed))
        h.setOptionValue("primal_feasibility_tolerance", FEAS_TOL)
        h.setOptionValue("dual_feasibility_tolerance", FEAS_TOL)
        h.setOptionValue("mip_feasibility_tolerance", FEAS_TOL)
        h.setOptionValue("mip_rel_gap", 0.0)
        h.setOptionValue("mip_abs_gap", GAP_TOL)
        self.h = h
        self.n = lp.num_vars
        self.constant = lp.constant
        self.c = lp.objective.copy()
        self.lo = lp.lower.copy()
        self.hi = lp.upper.copy()
        self.integer = np.zeros(self.n, dtype=bool)
        self.m = 0
        self.iterations = 0
        if self.n:
            h.addVars(self.n, self.lo, self.hi)
            h.changeColsCost(self.n, np.arange(self.n, dtype=np.int32), self.c)
        self.add_rows(lp.active_rows())

    def add_rows(self, rows: Sequence[ConstraintRow]) -> None:
        rows = list(rows)
        if not rows:
            return
        lo = np.empty(len(rows))
        hi = np.empty(len(rows))
        starts, idx, val = [], [], []
        for i, r in enumerate(rows):
            lo[i], hi[i] = _row_bounds(r)
            starts.append(len(idx))
            for j, a in r.terms:
                idx.append(j)
                val.append(a)
        inf = self._hs.kHighsInf
        lo = np.where(np.isinf(lo), -inf, lo)
        hi = np.where(np.isinf(hi), inf, hi)
        self.h.addRows(
            len(rows), lo, hi, len(idx),
            np.asarray(starts, dtype=np.int32), np.asarray(idx, dtype=np.int32), np.asarray(val, dtype=float),
        )
        self.m += len(rows)

    def set_bounds(self, j: int, lo: float, hi: float) -> None:
        self.lo[j], self.hi[j] = lo, hi
        self.h.changeColBounds(int(j), float(lo), float(hi))

    def set_integer(self, indices: Sequence[int]) -> None:
        indices = np.asarray(sorted(set(int(i) for i in indices)), dtype=np.int32)
        if len(indices) == 0:
            return
        self.integer[indices] = True
        kinds = np.array([self._hs.HighsVarType.kInteger] * len(indices))
        self.h.changeColsIntegrality(len(indices), indices, kinds)

    def solve(self) -> LpSolution:
        h = self.h
        h.run()
        status = h.getModelStatus()
        ms = self._hs.HighsModelStatus
        info = h.getInfo()
        self.iterations += max(int(info.simplex_iteration_count), 0)
        if status == ms.kInfeasible:
            return LpSolution(INFEASIBLE, np.zeros(self.n), math.inf, None, self.iterations)
        if status != ms.kOptimal:
            raise SolverError(f"HiGHS returned {h.modelStatusToString(status)}")
        values = np.clip(np.asarray(h.getSolution().col_value, dtype=float), self.lo, self.hi)
        if self.integer.any():
            values[self.integer] = np.round(values[self.integer])
        obj = float(self.c @ values + self.constant)
        bound = obj
        if self.integer.any():
            dual_bound = float(info.mip_dual_bound) + self.constant
            if math.isfinite(dual_bound):
                bound = min(obj, dual_bound)
        return LpSolution(OPTIMAL, values, obj, None, self.iterations, bound=bound)


# --------------------------------------------------------------------------
# public operations

NATIVE_SIZE_LIMIT = 2000


def make_solver(lp: LinearProgram, backend: str = "auto", seed: int = 0):
    """Create an incremental solver for ``lp``.

    ``auto`` picks the native kernel for small programs and HiGHS otherwise.
    """
    if backend == "auto":
        backend = "native" if lp.num_vars + len(lp.rows) <= NATIVE_SIZE_LIMIT else "highs"
    if backend == "native":
        return DualSimplex(lp)
    if backend == "highs":
        return HighsSolver(lp, seed=seed)
    raise ValueError(f"unknown LP backend {backend!r}")


def solve_lp(lp: LinearProgram, warm=None) -> LpSolution:
    """Solve the active rows of ``lp`` with the native kernel.

    ``warm`` is the ``basis`` token of an earlier :class:`LpSolution` of the
    same program (possibly with fewer rows).
    """
    solver = DualSimplex(lp)
    if warm is not None:
        solver.restore(warm)
    return solver.solve()


def add_rows_and_reoptimize(lp: LinearProgram, new_rows: Sequence[ConstraintRow], prior: LpSolution) -> LpSolution:
    """Append ``new_rows`` to ``lp`` and reoptimise from ``prior``'s basis."""
    lp.add_rows(new_rows)
    return solve_lp(lp, warm=prior.basis)


LazyCallback = Callable[[np.ndarray], Sequence[ConstraintRow]]


def branch_and_bound(solver: DualSimplex, integer_vars: Sequence[int], callback: Optional[LazyCallback] = None,
                     on_rows: Optional[Callable[[Sequence[ConstraintRow]], None]] = None) -> LpSolution:
    """Best-first branch and bound on an incremental native solver.

    Branches on the most fractional integer variable (lowest index on ties).
    ``callback`` may reject an integral candidate by returning violated rows;
    those rows are added to the global problem and the node is re-solved.
    """
    ints = np.asarray(sorted(set(int(i) for i in integer_vars)), dtype=np.int64)
    root = solver.solve()
    total_iter = root.iterations
    if not root.optimal:
        return root
    counter = 0
    root_snap = solver.snapshot()
    heap = [(root.objective_value, counter, root_snap, None)]
    incumbent: Optional[LpSolution] = None
    best = math.inf
    while heap:
        bound, _, snap, changes = heapq.heappop(heap)
        if bound >= best - GAP_TOL:
            continue
        solver.restore(snap)
        if changes is not None:
            j, lo, hi = changes
            solver.set_bounds(j, lo, hi)
        sol = solver.solve()
        total_iter = sol.iterations
        if not sol.optimal or sol.objective_value >= best - GAP_TOL:
            continue
        vals = sol.values
        frac = np.abs(vals[ints] - np.round(vals[ints])) if len(ints) else np.zeros(0)
        if len(ints) == 0 or frac.max(initial=0.0) <= INT_TOL:
            cand = vals.copy()
            if len(ints):
                cand[ints] = np.round(cand[ints])
            rows = list(callback(cand)) if callback is not None else []
            if rows:
                solver.add_rows(rows)
                if on_rows is not None:
                    on_rows(rows)
                counter += 1
                heapq.heappush(heap, (sol.objective_value, counter, solver.snapshot(), None))
                continue
            best = float(solver.c @ cand + solver.constant)
            incumbent = LpSolution(OPTIMAL, cand, best, solver.snapshot(), total_iter, bound=best)
            continue
        # most fractional: distance to nearest integer closest to 0.5
        dist = np.abs(frac - 0.5)
        k = int(np.flatnonzero(dist <= dist.min() + 1e-12)[0])
        j = int(ints[k])
        v = vals[j]
        base = solver.snapshot()
        lo_j, hi_j = solver.lo[j], solver.hi[j]
        counter += 1
        heapq.heappush(heap, (sol.objective_value, counter, base, (j, lo_j, float(math.floor(v)))))
        counter += 1
        heapq.heappush(heap, (sol.objective_value, counter, base, (j, float(math.ceil(v)), hi_j)))
    if incumbent is None:
        solver.restore(root_snap)
        return LpSolution(INFEASIBLE, np.zeros(solver.n), math.inf, None, total_iter)
    solver.restore(root_snap)
    incumbent.iterations = total_iter
    return incumbent


def solve_ilp(lp: LinearProgram, integer_vars: Sequence[int], callback: Optional[LazyCallback] = None,
              backend: str = "native") -> LpSolution:
    """Solve ``lp`` with ``integer_vars`` restricted to integers.

    Rows produced by ``callback`` are also appended to ``lp``'s pool.
    """
    if backend == "native":
        solver = DualSimplex(lp)
        return branch_and_bound(solver, integer_vars, callback, on_rows=lp.add_rows)
    solver = HighsSolver(lp)
    solver.set_integer(integer_vars)
    while True:
        sol = solver.solve()
        if not sol.optimal or callback is None:
            return sol
        rows = list(callback(sol.values))
        if not rows:
            return sol
        lp.add_rows(rows)
        solver.add_rows(rows)


# --------------------------------------------------------------------------
# LP file export


def _fmt_terms(terms, names) -> str:
    parts = []
    for j, a in terms:
        sign = "-" if a < 0 else "+"
        parts.append(f"{sign} {abs(a):.17g} {names[j]}")
    if not parts:
        return "0 " + names[0] if names else "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def export_lp(lp: LinearProgram, integer_vars: Sequence[int] = (), names: Optional[Sequence[str]] = None) -> str:
    """Render ``lp`` in CPLEX LP text format."""
    n = lp.num_vars
    names = list(names) if names is not None else [f"x{j}" for j in range(n)]
    lines = [f"\\ constant offset {lp.constant:.17g}", "Minimize"]
    obj_terms = [(j, float(a)) for j, a in enumerate(lp.objective) if a != 0.0]
    lines.append(" obj: " + _fmt_terms(obj_terms, names))
    lines.append("Subject To")
    for i, r in enumerate(lp.active_rows()):
        op = {LE: "<=", GE: ">=", EQ: "="}[r.sense]
        lines.append(f" c{i}_{r.tag.replace('-', '_')}: {_fmt_terms(r.terms, names)} {op} {r.rhs:.17g}")
    lines.append("Bounds")
    for j in range(n):
        lines.append(f" {lp.lower[j]:.17g} <= {names[j]} <= {lp.upper[j]:.17g}")
    ints = sorted(set(int(i) for i in integer_vars))
    if ints:
        lines.append("General")
        lines.append(" " + " ".join(names[j] for j in ints))
    lines.append("End")
    return "\n".join(lines) + "\n"
