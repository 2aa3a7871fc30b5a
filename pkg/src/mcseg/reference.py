"""Verification oracles: exhaustive minimisation and the local polytope LP.

Neither is used on the solve path; tests compare the engine against them.
"""

from __future__ import annotations

import numpy as np

from .model import SUPERVISED, FactorGraph, ModelError, Potts, Table, bell_number, energies, enumerate_partitions
from .simplex import EQ, ConstraintRow, LinearProgram, solve_lp

SEARCH_CAP = 10**7
CHUNK = 1 << 16


def _labelings_lex(n: int, L: int, start: int, stop: int) -> np.ndarray:
    # rows of the lexicographic enumeration of {0..L-1}^n, first variable slowest
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((len(idx), n), dtype=np.int64)
    for v in range(n - 1, -1, -1):
        out[:, v] = idx % L
        idx //= L
    return out


def brute_force_min(fg: FactorGraph):
    """Global minimiser and its energy; ties go to the lexicographically smallest labeling."""
    n = fg.num_variables
    if fg.mode == SUPERVISED:
        L = fg.num_labels
        total = L**n
        if total > SEARCH_CAP:
            raise ModelError(f"{total} labelings exceed the search cap {SEARCH_CAP}")
        best_x, best_v = None, np.inf
        for start in range(0, total, CHUNK):
            X = _labelings_lex(n, L, start, min(total, start + CHUNK))
            e = energies(fg, X)
            k = int(np.argmin(e))
            if e[k] < best_v:
                best_v, best_x = float(e[k]), X[k]
        return tuple(int(v) for v in best_x), best_v
    if bell_number(n) > SEARCH_CAP or n > 10:
        raise ModelError(f"{n} nodes exceed the partition enumeration limit")
    # restricted growth strings are the lexicographically smallest labeling of each partition
    X = np.array([p.rgs for p in enumerate_partitions(n)], dtype=np.int64)
    e = energies(fg, X)
    k = int(np.argmin(e))
    return tuple(int(v) for v in X[k]), float(e[k])


def local_polytope_lp(fg: FactorGraph) -> float:
    """Optimum of the local polytope relaxation of a supervised second-order model."""
    if fg.mode != SUPERVISED:
        raise ModelError("local polytope oracle expects a supervised model")
    n, L = fg.num_variables, fg.num_labels
    theta_u = np.zeros((n, L))
    theta_p: dict[tuple, np.ndarray] = {}
    constant = 0.0
    for f in fg.factors:
        k = f.kind
        if f.order == 1 and isinstance(k, Table):
            theta_u[f.vars[0]] += np.asarray(k.values)
        elif f.order == 2 and isinstance(k, (Table, Potts)):
            if isinstance(k, Potts):
                tab = np.full((L, L), k.unequal)
                np.fill_diagonal(tab, k.equal)
            else:
                tab = np.asarray(k.values).reshape(L, L)
            theta_p[f.vars] = theta_p.get(f.vars, 0.0) + tab
        else:
            raise ModelError("local polytope oracle supports first- and second-order tables and Potts only")
    scopes = sorted(theta_p)
    nu = n * L
    num = nu + len(scopes) * L * L
    c = np.concatenate([theta_u.ravel()] + [theta_p[s].ravel() for s in scopes])

    def mu(v, a):
        return v * L + a

    def mu2(k, a, b):
        return nu + k * L * L + a * L + b

    rows = [ConstraintRow(tuple((mu(v, a), 1.0) for a in range(L)), EQ, 1.0) for v in range(n)]
    for k, (i, j) in enumerate(scopes):
        for a in range(L):
            terms = tuple((mu2(k, a, b), 1.0) for b in range(L)) + ((mu(i, a), -1.0),)
            rows.append(ConstraintRow(terms, EQ, 0.0))
        for b in range(L):
            terms = tuple((mu2(k, a, b), 1.0) for a in range(L)) + ((mu(j, b), -1.0),)
            rows.append(ConstraintRow(terms, EQ, 0.0))
    lp = LinearProgram(c, np.zeros(num), np.ones(num), constant, rows=rows)
    sol = solve_lp(lp)
    if not sol.optimal:
        raise ModelError("local polytope LP reported infeasible")
    return sol.objective_value
