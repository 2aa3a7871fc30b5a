"""Local search references: ICM, a depth-1 lazy flipper, and multi-shore Kernighan-Lin."""

from __future__ import annotations

from collections import deque
from typing import Optional, Sequence

import numpy as np

from .model import UNSUPERVISED, FactorGraph, ModelError, Potts, Table, factor_value, table_to_lpi

IMPROVE_TOL = 1e-12


def default_init(fg: FactorGraph) -> list:
    """Per-variable unary argmin (supervised) or one shared shore (unsupervised)."""
    if fg.mode == UNSUPERVISED:
        return [0] * fg.num_variables
    g = np.zeros((fg.num_variables, fg.num_labels))
    for f in fg.factors:
        if f.order == 1 and isinstance(f.kind, Table):
            g[f.vars[0]] += np.asarray(f.kind.values)
    return [int(v) for v in np.argmin(g, axis=1)]


def _local_energies(fg: FactorGraph, x: list, v: int) -> np.ndarray:
    out = np.zeros(fg.label_counts[v])
    saved = x[v]
    for fi in fg.factors_of(v):
        f = fg.factors[fi]
        counts = [fg.label_counts[a] for a in f.vars]
        for lab in range(len(out)):
            x[v] = lab
            out[lab] += factor_value(f, [x[a] for a in f.vars], counts)
    x[v] = saved
    return out


def _improve(fg: FactorGraph, x: list, v: int) -> bool:
    e = _local_energies(fg, x, v)
    best = int(np.argmin(e))
    if e[best] < e[x[v]] - IMPROVE_TOL:
        x[v] = best
        return True
    return False


def icm(fg: FactorGraph, init: Optional[Sequence[int]] = None) -> tuple:
    """Ascending sweeps of conditional minimisation until a sweep changes nothing."""
    x = list(fg.check_labeling(init if init is not None else default_init(fg)))
    changed = True
    while changed:
        changed = False
        for v in range(fg.num_variables):
            changed |= _improve(fg, x, v)
    return tuple(x)


def lazy_flipper(fg: FactorGraph, init: Optional[Sequence[int]] = None, depth: int = 1) -> tuple:
    """Single-variable flips driven by a FIFO queue of variables whose neighbourhood changed."""
    if depth != 1:
        raise ModelError("only depth 1 is supported")
    x = list(fg.check_labeling(init if init is not None else default_init(fg)))
    nbrs = [sorted({a for fi in fg.factors_of(v) for a in fg.factors[fi].vars} - {v}) for v in range(fg.num_variables)]
    queue = deque(range(fg.num_variables))
    queued = [True] * fg.num_variables
    while queue:
        v = queue.popleft()
        queued[v] = False
        if _improve(fg, x, v):
            for a in [v] + nbrs[v]:
                if not queued[a]:
                    queued[a] = True
                    queue.append(a)
    return tuple(x)


def _pair_weights(fg: FactorGraph) -> dict:
    if fg.mode != UNSUPERVISED:
        raise ModelError("Kernighan-Lin needs an unsupervised model")
    w: dict = {}
    for f in fg.factors:
        k = f.kind
        if f.order != 2:
            raise ModelError("Kernighan-Lin needs a second-order model")
        if isinstance(k, Potts):
            beta = k.beta
        elif isinstance(k, Table):
            lw = table_to_lpi(k.values, 2, fg.label_counts[f.vars[0]])
            if lw is None:
                raise ModelError("Kernighan-Lin needs permutation-invariant pair terms")
            beta = lw[1] - lw[0]
        else:
            raise ModelError("Kernighan-Lin needs Potts or pairwise table factors")
        w[f.vars] = w.get(f.vars, 0.0) + beta
    return w


def _canonical(x: Sequence[int]) -> tuple:
    ids: dict = {}
    return tuple(ids.setdefault(a, len(ids)) for a in x)


def kernighan_lin(fg: FactorGraph) -> tuple:
    """Multi-shore KL passes starting from a single shore.

    Each pass moves every node once (greedy best gain, locking moved nodes)
    to a neighbouring shore or a fresh one, then keeps the best prefix of the
    move sequence.  Ties: lowest node, then lowest shore, fresh shore last.
    """
    w = _pair_weights(fg)
    n = fg.num_variables
    adj: list[dict] = [dict() for _ in range(n)]
    for (u, v), b in w.items():
        adj[u][v] = adj[u].get(v, 0.0) + b
        adj[v][u] = adj[v].get(u, 0.0) + b
    x = [0] * n
    while True:
        locked = [False] * n
        moves = []
        gains = []
        for _ in range(n):
            best = None
            fresh = max(x) + 1
            for v in range(n):
                if locked[v]:
                    continue
                to_shore: dict = {}
                for u, b in adj[v].items():
                    to_shore[x[u]] = to_shore.get(x[u], 0.0) + b
                own = to_shore.get(x[v], 0.0)
                targets = sorted(s for s in to_shore if s != x[v]) + [fresh]
                for s in targets:
                    gain = to_shore.get(s, 0.0) - own
                    if best is None or gain > best[0] + IMPROVE_TOL:
                        best = (gain, v, s)
            gain, v, s = best
            moves.append((v, x[v]))
            gains.append(gain)
            x[v] = s
            locked[v] = True
        cum = np.cumsum(gains)
        k = int(np.argmax(cum))
        keep = k + 1 if cum[k] > IMPROVE_TOL else 0
        for v, old in reversed(moves[keep:]):
            x[v] = old
        x = list(_canonical(x))
        if keep == 0:
            return tuple(x)
