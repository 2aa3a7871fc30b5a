"""Map relaxed multicut points to labelings."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .model import energies
from .reduction import MulticutInstance, aux_values, edge_values, multicut_cost

PSEUDO_THRESHOLDS = tuple(np.round(np.linspace(0.0, 1.0, 101), 2))
KAPPA_SWEEP = tuple(np.round(np.arange(0.0, 0.5001, 0.05), 2))


class RoundingError(ValueError):
    pass


def _terminal_matrix(inst: MulticutInstance, y) -> np.ndarray:
    if not inst.supervised:
        raise RoundingError("label rounding needs terminal nodes")
    y = np.asarray(y, dtype=float)
    L, n = len(inst.terminals), inst.num_internal
    idx = np.array([[inst.terminal_edge(t, v) for v in range(n)] for t in range(L)], dtype=np.int64)
    return y[idx]


def labeling_energies(inst: MulticutInstance, X: np.ndarray) -> np.ndarray:
    """Energy of each labeling row, through the source model when available."""
    X = np.atleast_2d(np.asarray(X, dtype=np.int64))
    if inst.model is not None:
        return energies(inst.model, X)
    out = np.empty(len(X))
    for k, x in enumerate(X):
        ye = edge_values(inst, x)
        out[k] = multicut_cost(inst, ye, aux_values(inst, ye))
    return out


def round_nearest(inst: MulticutInstance, y) -> tuple:
    """Label of the terminal with the smallest edge value; ties go to the lowest label."""
    return tuple(int(v) for v in np.argmin(_terminal_matrix(inst, y), axis=0))


def assign_threshold(Y: np.ndarray, rho: float) -> np.ndarray:
    """First label with ``y_tv <= rho`` per column, else the last label."""
    hit = Y <= rho
    first = np.argmax(hit, axis=0)
    return np.where(hit.any(axis=0), first, Y.shape[0] - 1)


def derandomized_thresholds(inst: MulticutInstance, y) -> list:
    """Every distinct terminal edge value, plus 0 for the all-last-label sweep point."""
    return sorted({0.0} | set(float(v) for v in _terminal_matrix(inst, y).ravel()))


def round_derandomized(inst: MulticutInstance, y, thresholds: Optional[Sequence[float]] = None) -> tuple:
    """Best labeling over a threshold sweep.

    ``thresholds=None`` uses :func:`derandomized_thresholds`, which covers
    every point in [0, 1] where the assignment changes.
    """
    Y = _terminal_matrix(inst, y)
    if thresholds is None:
        thresholds = derandomized_thresholds(inst, y)
    thresholds = list(thresholds)
    if not thresholds:
        raise RoundingError("threshold list is empty")
    best, best_e = None, np.inf
    for start in range(0, len(thresholds), 256):
        X = np.stack([assign_threshold(Y, rho) for rho in thresholds[start:start + 256]])
        X = np.unique(X, axis=0)
        e = labeling_energies(inst, X)
        k = int(np.argmin(e))
        if e[k] < best_e or (e[k] == best_e and tuple(X[k]) < best):
            best, best_e = tuple(int(v) for v in X[k]), float(e[k])
    return best


def round_pseudo(inst: MulticutInstance, y) -> tuple:
    return round_derandomized(inst, y, PSEUDO_THRESHOLDS)


def round_components(inst: MulticutInstance, y, kappa: float = 0.25):
    """Shores are the connected components of ``{e : y_e <= kappa}``."""
    if not 0.0 <= kappa < 1.0:
        raise RoundingError("kappa must lie in [0, 1)")
    y = np.asarray(y, dtype=float)
    n = inst.num_internal
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e, (u, v) in enumerate(inst.edges):
        if v < n and y[e] <= kappa:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[max(ru, rv)] = min(ru, rv)
    ids: dict[int, int] = {}
    labels = tuple(ids.setdefault(find(v), len(ids)) for v in range(n))
    return edge_values(inst, labels), labels


def round_components_sweep(inst: MulticutInstance, y, kappas: Sequence[float] = KAPPA_SWEEP) -> tuple:
    """Best component rounding over several ``kappa`` values."""
    cands = np.array([round_components(inst, y, k)[1] for k in kappas], dtype=np.int64)
    cands = np.unique(cands, axis=0)
    e = labeling_energies(inst, cands)
    return tuple(int(v) for v in cands[int(np.argmin(e))])
