"""Factor graph to multicut instance.

Variables of the resulting program are laid out as all edge indicators
``y`` first (in edge-index order) followed by the auxiliary product
variables ``s``.  ``y_e = 1`` means the edge is cut.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import (
    HOPotts,
    LPI,
    MAX_PARTITION_ORDER,
    SUPERVISED,
    FactorGraph,
    Junction,
    ModelError,
    Potts,
    Table,
    enumerate_partitions,
    junction_to_lpi,
    pair_index,
    table_to_lpi,
)
from .simplex import EQ, GE, LE, ConstraintRow, LinearProgram

TAG_INITIAL = "initial"
TAG_TERMINAL_FIXED = "terminal-fixed"
TAG_REDUCTION_A = "reduction-a"
TAG_REDUCTION_B = "reduction-b"
TAG_SUM_TO_ONE = "sum-to-one"


@dataclass(frozen=True)
class AuxVar:
    """Product variable ``s = prod(y_e, e in pos) * prod(1 - y_e, e in neg)``."""

    index: int
    pos: tuple
    neg: tuple
    cost: float = 0.0
    integral: bool = False


class MulticutInstance:
    """Weighted graph with optional terminals, auxiliaries and fixed rows."""

    def __init__(self, num_internal: int, num_terminals: int = 0):
        self.num_internal = int(num_internal)
        self.terminals = tuple(range(self.num_internal, self.num_internal + int(num_terminals)))
        self.edges: list[tuple[int, int]] = []
        self.weights: list[float] = []
        self.edge_index: dict[tuple[int, int], int] = {}
        self.aux: list[AuxVar] = []
        self.fixed_rows: list[ConstraintRow] = []
        self.constant_offset = 0.0
        self.model: Optional[FactorGraph] = None

    # ---- layout ------------------------------------------------------------

    @property
    def supervised(self) -> bool:
        return bool(self.terminals)

    @property
    def num_nodes(self) -> int:
        return self.num_internal + len(self.terminals)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_vars(self) -> int:
        return len(self.edges) + len(self.aux)

    def is_terminal(self, node: int) -> bool:
        return node >= self.num_internal

    def edge_id(self, u: int, v: int) -> Optional[int]:
        return self.edge_index.get((u, v) if u < v else (v, u))

    def terminal_edge(self, t: int, v: int) -> int:
        """Edge between the ``t``-th terminal and internal node ``v``."""
        return self.edge_index[(v, self.terminals[t])]

    def internal_edges(self) -> list[int]:
        return [e for e, (u, v) in enumerate(self.edges) if v < self.num_internal]

    # ---- mutation ----------------------------------------------------------

    def add_edge(self, u: int, v: int, w: float = 0.0) -> int:
        """Add ``w`` to edge ``uv``, creating it if needed; returns its index."""
        if u == v:
            raise ModelError("self loops are not edges")
        key = (u, v) if u < v else (v, u)
        e = self.edge_index.get(key)
        if e is not None:
            self.weights[e] += float(w)
            return e
        e = len(self.edges)
        if self.aux:
            self._shift_aux(e)
        self.edges.append(key)
        self.weights.append(float(w))
        self.edge_index[key] = e
        return e

    def _shift_aux(self, first_new: int) -> None:
        # a new edge variable pushes every auxiliary index up by one
        def shift(j):
            return j + 1 if j >= first_new else j

        self.aux = [AuxVar(a.index + 1, a.pos, a.neg, a.cost, a.integral) for a in self.aux]
        self.fixed_rows = [
            ConstraintRow(tuple((shift(j), c) for j, c in r.terms), r.sense, r.rhs, r.tag)
            for r in self.fixed_rows
        ]

    def new_aux(self, pos: Sequence[int], neg: Sequence[int], cost: float) -> AuxVar:
        aux, rows = reduce_product_term(pos, neg, self.num_vars)
        aux = AuxVar(aux.index, aux.pos, aux.neg, float(cost), aux.integral)
        self.aux.append(aux)
        self.fixed_rows.extend(rows)
        return aux

    # ---- views -------------------------------------------------------------

    def objective(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.weights, dtype=float), np.array([a.cost for a in self.aux], dtype=float)])

    def to_linear_program(self) -> LinearProgram:
        n = self.num_vars
        return LinearProgram(self.objective(), np.zeros(n), np.ones(n), self.constant_offset, rows=self.fixed_rows)

    def integral_aux(self) -> list[int]:
        return [a.index for a in self.aux if a.integral]


def terminal_weights(g: Sequence[float]) -> np.ndarray:
    """Terminal edge weights ``u`` with ``sum(u_l, l != k) == g_k`` for every ``k``."""
    g = np.asarray(g, dtype=float)
    if len(g) < 2:
        raise ModelError("terminal weights need at least two labels")
    return g.sum() / (len(g) - 1) - g


def reduce_product_term(pos: Sequence[int], neg: Sequence[int], s: int = -1):
    """Linearise ``prod(y_i, i in pos) * prod(1 - y_i, i in neg)`` with variable ``s``.

    Returns the auxiliary descriptor and the rows of both linearisations: the
    two aggregated inequalities followed by one row per literal.
    """
    pos = tuple(int(i) for i in pos)
    neg = tuple(int(i) for i in neg)
    if set(pos) & set(neg):
        raise ValueError("positive and negative literal sets overlap")
    m = len(pos) + len(neg)
    if m == 0:
        raise ValueError("product term needs at least one literal")
    k = len(neg)
    lits = [(i, -1.0) for i in pos] + [(i, 1.0) for i in neg]
    rows = [
        ConstraintRow(((s, float(m)),) + tuple(lits), LE, k, TAG_REDUCTION_A),
        ConstraintRow(((s, 1.0),) + tuple(lits), GE, 1 - m + k, TAG_REDUCTION_A),
    ]
    rows += [ConstraintRow(((s, 1.0), (i, -1.0)), LE, 0.0, TAG_REDUCTION_B) for i in pos]
    rows += [ConstraintRow(((s, 1.0), (i, 1.0)), LE, 1.0, TAG_REDUCTION_B) for i in neg]
    return AuxVar(s, pos, neg), rows


def _lpi_edges(inst: MulticutInstance, scope: Sequence[int]) -> list[int]:
    return [inst.add_edge(scope[i], scope[j], 0.0) for i, j in pair_index(len(scope))]


def attach_lpi_factor(inst: MulticutInstance, scope: Sequence[int], weights: Sequence[float]) -> MulticutInstance:
    """Encode a permutation-invariant factor with one auxiliary per partition."""
    n = len(scope)
    if n > MAX_PARTITION_ORDER:
        raise ModelError(f"partition reduction is limited to order {MAX_PARTITION_ORDER}")
    if n == 1:
        inst.constant_offset += float(weights[0])
        return inst
    edges = _lpi_edges(inst, scope)
    members = []
    for part, w in zip(enumerate_partitions(n), weights):
        pos = [e for e, c in zip(edges, part.chi) if c]
        neg = [e for e, c in zip(edges, part.chi) if not c]
        members.append(inst.new_aux(pos, neg, w).index)
    inst.fixed_rows.append(ConstraintRow(tuple((j, 1.0) for j in members), EQ, 1.0, TAG_SUM_TO_ONE))
    return inst


def _spanning_edges(inst: MulticutInstance, scope: Sequence[int]) -> list[int]:
    scope = list(scope)
    found = sorted(
        inst.edge_index[(u, v)]
        for i, u in enumerate(scope)
        for v in scope[i + 1:]
        if (u, v) in inst.edge_index
    )
    # union-find over the scope to see whether existing edges connect it
    parent = {v: v for v in scope}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in found:
        u, v = inst.edges[e]
        parent[find(u)] = find(v)
    reps: dict[int, int] = {}
    for v in scope:
        reps.setdefault(find(v), v)
    heads = sorted(reps.values())
    for a, b in zip(heads, heads[1:]):
        found.append(inst.add_edge(a, b, 0.0))
    return found


def attach_hopotts_factor(inst: MulticutInstance, scope: Sequence[int], equal: float, unequal: float) -> MulticutInstance:
    """Encode a higher-order Potts factor with a single auxiliary variable."""
    if len(scope) == 1:
        inst.constant_offset += float(equal)
        return inst
    edges = _spanning_edges(inst, scope)
    inst.new_aux((), edges, float(equal) - float(unequal))
    inst.constant_offset += float(unequal)
    return inst


def _classify(fg: FactorGraph, f):
    """Return ``("unary", g) | ("pair", equal, unequal) | ("lpi", w) | ("hopotts", a0, a1)``."""
    k = f.kind
    if isinstance(k, Potts):
        return ("pair", k.equal, k.unequal)
    if isinstance(k, HOPotts):
        return ("hopotts", k.equal, k.unequal)
    if isinstance(k, Junction):
        return ("lpi", junction_to_lpi(k.lam))
    if isinstance(k, LPI):
        return ("lpi", k.weights)
    assert isinstance(k, Table)
    if f.order == 1:
        return ("unary", k.values)
    w = table_to_lpi(k.values, f.order, fg.label_counts[f.vars[0]])
    if w is None:
        raise ModelError(f"table over {f.vars} is not label-permutation invariant")
    if f.order == 2:
        return ("pair", w[0], w[1])
    return ("lpi", w)


def build_multicut(fg: FactorGraph) -> MulticutInstance:
    n = fg.num_variables
    supervised = fg.mode == SUPERVISED
    L = fg.num_labels if supervised else 0
    inst = MulticutInstance(n, L)
    kinds = [_classify(fg, f) for f in fg.factors]

    # internal edges first (Potts scopes, then everything higher-order factors need)
    pair_w: dict[tuple[int, int], float] = {}
    for f, c in zip(fg.factors, kinds):
        if c[0] == "pair":
            key = tuple(f.vars)
            pair_w[key] = pair_w.get(key, 0.0) + (c[2] - c[1])
            inst.constant_offset += c[1]
    for key in sorted(pair_w):
        inst.add_edge(*key, pair_w[key])
    for f, c in zip(fg.factors, kinds):
        if c[0] == "lpi" and f.order >= 2:
            _lpi_edges(inst, f.vars)
        elif c[0] == "hopotts" and f.order >= 2:
            _spanning_edges(inst, f.vars)

    if supervised:
        g = np.zeros((n, L))
        for f, c in zip(fg.factors, kinds):
            if c[0] == "unary":
                g[f.vars[0]] += np.asarray(c[1])
        for v in range(n):
            u = terminal_weights(g[v])
            for t in range(L):
                inst.add_edge(v, inst.terminals[t], u[t])
        for a in range(L):
            for b in range(a + 1, L):
                inst.add_edge(inst.terminals[a], inst.terminals[b], 0.0)
        for v in range(n):
            terms = tuple((inst.terminal_edge(t, v), 1.0) for t in range(L))
            inst.fixed_rows.append(ConstraintRow(terms, EQ, L - 1, TAG_INITIAL))
        for a in range(L):
            for b in range(a + 1, L):
                e = inst.edge_id(inst.terminals[a], inst.terminals[b])
                inst.fixed_rows.append(ConstraintRow(((e, 1.0),), EQ, 1.0, TAG_TERMINAL_FIXED))
    elif any(c[0] == "unary" for c in kinds):
        raise ModelError("unsupervised models have no first-order factors")

    for f, c in zip(fg.factors, kinds):
        if c[0] == "lpi":
            attach_lpi_factor(inst, f.vars, c[1])
        elif c[0] == "hopotts":
            attach_hopotts_factor(inst, f.vars, c[1], c[2])
    inst.model = fg
    return inst


def multicut_cost(inst: MulticutInstance, y: Sequence[float], s: Sequence[float] = ()) -> float:
    y = np.asarray(y, dtype=float)
    s = np.asarray(s, dtype=float)
    aux_cost = np.array([a.cost for a in inst.aux], dtype=float)
    total = float(np.dot(inst.weights, y)) + inst.constant_offset
    if len(aux_cost):
        total += float(np.dot(aux_cost, s))
    return total


def edge_values(inst: MulticutInstance, x: Sequence[int]) -> np.ndarray:
    """Cut indicators of the partition given by labeling ``x``."""
    # terminal t carries label t
    node_label = np.concatenate([np.asarray(x, dtype=np.int64), np.arange(len(inst.terminals))])
    uv = np.asarray(inst.edges, dtype=np.int64).reshape(-1, 2)
    return (node_label[uv[:, 0]] != node_label[uv[:, 1]]).astype(float)


def aux_values(inst: MulticutInstance, y: np.ndarray) -> np.ndarray:
    out = np.empty(len(inst.aux))
    for k, a in enumerate(inst.aux):
        out[k] = float(np.prod(y[list(a.pos)]) * np.prod(1.0 - y[list(a.neg)]))
    return out


def induced_point(inst: MulticutInstance, x: Sequence[int]) -> np.ndarray:
    """Full variable vector ``(y, s)`` induced by labeling ``x``."""
    y = edge_values(inst, x)
    return np.concatenate([y, aux_values(inst, y)])
