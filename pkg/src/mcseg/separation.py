"""Separation procedures and the schedule grammar.

Every separator is a pure function of an instance and a point ``y`` (edge
values first, as laid out by :class:`MulticutInstance`).  Each returned row
is violated by more than ``EPS``.

Cycle searches run on the graph without terminal nodes; terminal edges are
handled by the triangle and multi-terminal families.
"""

from __future__ import annotations

import heapq
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .reduction import MulticutInstance
from .simplex import GE, LE, ConstraintRow

EPS = 1e-8
MAX_RIM = 25

TAG_CYCLE = "cycle"
TAG_TRIANGLE = "terminal-triangle"
TAG_MT = "multi-terminal"
TAG_WHEEL = "odd-wheel"


class ScheduleError(ValueError):
    pass


class SeparationUsageError(ValueError):
    pass


@dataclass
class SeparationReport:
    rows: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    max_violation: float = 0.0

    def add(self, row: ConstraintRow, violation: float) -> None:
        self.rows.append(row)
        self.counts[row.tag] = self.counts.get(row.tag, 0) + 1
        self.max_violation = max(self.max_violation, violation)

    def extend(self, other: "SeparationReport") -> None:
        for r in other.rows:
            self.counts[r.tag] = self.counts.get(r.tag, 0) + 1
        self.rows.extend(other.rows)
        self.max_violation = max(self.max_violation, other.max_violation)

    def __len__(self) -> int:
        return len(self.rows)


# --------------------------------------------------------------------------
# graph view


class _Graph:
    """Adjacency of the internal (non-terminal) subgraph."""

    def __init__(self, inst: MulticutInstance):
        n = inst.num_internal
        self.n = n
        self.adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        self.nbrs: list[set] = [set() for _ in range(n)]
        self.edges: list[int] = []
        for e, (u, v) in enumerate(inst.edges):
            if v < n:
                self.adj[u].append((v, e))
                self.adj[v].append((u, e))
                self.nbrs[u].add(v)
                self.nbrs[v].add(u)
                self.edges.append(e)
        L = len(inst.terminals)
        self.term = np.zeros((L, n), dtype=np.int64)
        for t in range(L):
            for v in range(n):
                self.term[t, v] = inst.terminal_edge(t, v)
        self.eu = np.array([inst.edges[e][0] for e in self.edges], dtype=np.int64)
        self.ev = np.array([inst.edges[e][1] for e in self.edges], dtype=np.int64)
        self.eid = np.array(self.edges, dtype=np.int64)


def _graph(inst: MulticutInstance) -> _Graph:
    g = getattr(inst, "_sep_graph", None)
    if g is None or g.n != inst.num_internal or len(g.edges) != len(inst.internal_edges()):
        g = _Graph(inst)
        inst._sep_graph = g
    return g


def _components(g: _Graph, keep) -> list[int]:
    """Component id per node of the subgraph with edges where ``keep[e]``."""
    comp = [-1] * g.n
    c = 0
    for s in range(g.n):
        if comp[s] >= 0:
            continue
        comp[s] = c
        stack = [s]
        while stack:
            a = stack.pop()
            for b, e in g.adj[a]:
                if comp[b] < 0 and keep[e]:
                    comp[b] = c
                    stack.append(b)
        c += 1
    return comp


# --------------------------------------------------------------------------
# cycle inequalities


def _cycle_row(path_edges: Sequence[int], target: int) -> ConstraintRow:
    return ConstraintRow(tuple((e, 1.0) for e in path_edges) + ((target, -1.0),), GE, 0.0, TAG_CYCLE)


def _shortest_path(g: _Graph, y, u: int, v: int, skip: int, limit: float, allowed=None) -> Optional[list]:
    """Dijkstra from ``u`` to ``v`` avoiding edge ``skip``; None if distance >= limit."""
    dist = {u: 0.0}
    prev: dict[int, tuple[int, int]] = {}
    heap = [(0.0, u)]
    done = set()
    while heap:
        d, a = heapq.heappop(heap)
        if d >= limit:
            return None
        if a in done:
            continue
        if a == v:
            path = []
            while a != u:
                a, e = prev[a]
                path.append(e)
            return path[::-1]
        done.add(a)
        for b, e in g.adj[a]:
            if e == skip or b in done or (allowed is not None and not allowed[e]):
                continue
            nd = d + y[e]
            if nd < dist.get(b, float("inf")):
                dist[b] = nd
                prev[b] = (a, e)
                heapq.heappush(heap, (nd, b))
    return None


def _shortest_chordless_path(g: _Graph, y, u: int, v: int, skip: int, limit: float, allowed=None) -> Optional[list]:
    """Label-setting search that rejects extensions creating a chord with the partial path."""
    # label: (dist, node, path nodes, path edges)
    heap = [(0.0, u, (u,), ())]
    done = set()
    nbrs = g.nbrs
    while heap:
        d, a, nodes, pedges = heapq.heappop(heap)
        if d >= limit:
            return None
        if a in done:
            continue
        if a == v:
            return list(pedges)
        done.add(a)
        for b, e in g.adj[a]:
            if e == skip or b in done or b in nodes or (allowed is not None and not allowed[e]):
                continue
            # b may touch only its predecessor, plus u when b closes the cycle
            touch = nbrs[b].intersection(nodes[:-1])
            if touch and not (b == v and touch == {u}):
                continue
            heapq.heappush(heap, (d + y[e], b, nodes + (b,), pedges + (e,)))
    return None


def _cycle_nodes(inst: MulticutInstance, path_edges: Sequence[int], u: int) -> list[int]:
    nodes = [u]
    cur = u
    for e in path_edges:
        a, b = inst.edges[e]
        cur = b if a == cur else a
        nodes.append(cur)
    return nodes


def _make_chordless(inst: MulticutInstance, g: _Graph, y, nodes: list, target_pos: int):
    """Split a violated cycle along chords until it is chordless.

    ``nodes`` lists the cycle; the cycle edge between ``nodes[i]`` and
    ``nodes[i+1]`` (indices modulo the length) is edge ``i``.  The designated
    edge is ``target_pos``.  Across a chord the two halves' violations add up
    to the whole cycle's violation, so the better half keeps at least half of
    it.
    """
    while True:
        k = len(nodes)
        cyc = [inst.edge_id(nodes[i], nodes[(i + 1) % k]) for i in range(k)]
        pos_of = {a: i for i, a in enumerate(nodes)}
        chord = None
        for i in range(k):
            for b in g.nbrs[nodes[i]]:
                j = pos_of.get(b)
                if j is not None and j > i + 1 and not (i == 0 and j == k - 1):
                    chord = (i, j)
                    break
            if chord:
                break
        if chord is None:
            path = [cyc[i] for i in range(k) if i != target_pos]
            viol = y[cyc[target_pos]] - sum(y[e] for e in path)
            return path, cyc[target_pos], viol
        i, j = chord
        ce = inst.edge_id(nodes[i], nodes[j])
        # side A: nodes i..j (edges i..j-1) + chord; side B: nodes j..i wrapping (edges j..i-1) + chord
        side_a = list(range(i, j))
        side_b = [p % k for p in range(j, i + k)]
        in_a = target_pos in side_a
        own, other = (side_a, side_b) if in_a else (side_b, side_a)
        t_edge = cyc[target_pos]
        v_own = y[t_edge] - sum(y[cyc[p]] for p in own if p != target_pos) - y[ce]
        v_chord = y[ce] - sum(y[cyc[p]] for p in other)
        if v_own >= v_chord:
            keep, designate_chord = own, False
        else:
            keep, designate_chord = other, True
        # rebuild the node list of the kept side, closed by the chord
        if keep is side_a:
            new_nodes = nodes[i:j + 1]
        else:
            new_nodes = nodes[j:] + nodes[:i + 1]
        m = len(new_nodes)
        new_cyc = [inst.edge_id(new_nodes[p], new_nodes[(p + 1) % m]) for p in range(m)]
        if designate_chord:
            target_pos = new_cyc.index(ce)
        else:
            target_pos = new_cyc.index(t_edge)
        nodes = new_nodes


def _bfs_path(g: _Graph, u: int, v: int, skip: int, allowed) -> Optional[list]:
    prev = {u: None}
    q = deque([u])
    while q:
        a = q.popleft()
        if a == v:
            path = []
            while prev[a] is not None:
                a, e = prev[a]
                path.append(e)
            return path[::-1]
        for b, e in g.adj[a]:
            if e != skip and b not in prev and allowed[e]:
                prev[b] = (a, e)
                q.append(b)
    return None


def separate_cycles(inst: MulticutInstance, y, integer: bool = False, facet: bool = False,
                    bounded: bool = False, eps: float = EPS) -> SeparationReport:
    """Cycle inequalities ``sum(y_e, e in P) >= y_uv``.

    Paths are searched on the internal graph only.  With terminals present the
    only chordless cycles through a terminal are triangles, so the triangle
    rows are checked here as well.
    """
    g = _graph(inst)
    yl = [float(v) for v in np.asarray(y, dtype=float)[: inst.num_edges]]
    report = SeparationReport()
    seen = set()
    if integer:
        zero = [v < 0.5 for v in yl]
        comp = _components(g, zero)
    elif bounded:
        comp = _components(g, [v < 1.0 for v in yl])
    else:
        comp = None
    allowed = None
    if bounded and not integer:
        allowed = [v < 1.0 for v in yl]

    for e in g.edges:
        yuv = yl[e]
        if yuv <= eps:
            continue
        u, v = inst.edges[e]
        if comp is not None and comp[u] != comp[v]:
            continue
        if integer:
            if yuv < 0.5:
                continue
            path = _bfs_path(g, u, v, e, zero)
        elif facet:
            path = _shortest_chordless_path(g, yl, u, v, e, yuv - eps, allowed)
            if path is None:
                path = _shortest_path(g, yl, u, v, e, yuv - eps, allowed)
        else:
            path = _shortest_path(g, yl, u, v, e, yuv - eps, allowed)
        if path is None:
            continue
        target = e
        if facet:
            nodes = _cycle_nodes(inst, path, u)
            # cycle order u -> ... -> v -> u; the designated edge closes it
            path, target, viol = _make_chordless(inst, g, yl, nodes, len(nodes) - 1)
        else:
            viol = yuv - sum(yl[p] for p in path)
        if viol <= eps:
            continue
        row = _cycle_row(path, target)
        if row.key() in seen:
            continue
        seen.add(row.key())
        report.add(row, viol)
    if inst.supervised:
        tri = separate_terminal_triangles_integer if integer else separate_terminal_triangles
        report.extend(tri(inst, y, eps))
    return report


# --------------------------------------------------------------------------
# terminal families


def _require_terminals(inst: MulticutInstance, what: str) -> None:
    if not inst.supervised:
        raise SeparationUsageError(f"{what} separation needs terminal nodes")


def _triangle_rows(report, seen, e, tu, tv, yuv, ytu, ytv, eps):
    # (tu + tv >= uv), (tu + uv >= tv), (tv + uv >= tu)
    cand = (
        (yuv - ytu - ytv, ((tu, 1.0), (tv, 1.0), (e, -1.0))),
        (ytv - ytu - yuv, ((tu, 1.0), (e, 1.0), (tv, -1.0))),
        (ytu - ytv - yuv, ((tv, 1.0), (e, 1.0), (tu, -1.0))),
    )
    for viol, terms in cand:
        if viol > eps:
            row = ConstraintRow(terms, GE, 0.0, TAG_TRIANGLE)
            if row.key() not in seen:
                seen.add(row.key())
                report.add(row, viol)


def separate_terminal_triangles(inst: MulticutInstance, y, eps: float = EPS) -> SeparationReport:
    """Scan every internal edge and terminal for the three triangle forms."""
    _require_terminals(inst, "terminal triangle")
    g = _graph(inst)
    y = np.asarray(y, dtype=float)
    report = SeparationReport()
    if len(g.eid) == 0:
        return report
    yuv = y[g.eid][None, :]
    ytu = y[g.term[:, g.eu]]
    ytv = y[g.term[:, g.ev]]
    hit = (yuv - ytu - ytv > eps) | (ytv - ytu - yuv > eps) | (ytu - ytv - yuv > eps)
    seen = set()
    for k in np.flatnonzero(hit.any(axis=0)):
        e = int(g.eid[k])
        for t in np.flatnonzero(hit[:, k]):
            tu, tv = int(g.term[t, g.eu[k]]), int(g.term[t, g.ev[k]])
            _triangle_rows(report, seen, e, tu, tv, y[e], y[tu], y[tv], eps)
    return report


def separate_terminal_triangles_integer(inst: MulticutInstance, y, eps: float = EPS) -> SeparationReport:
    """Triangle check on integral points against each endpoint's own terminal."""
    _require_terminals(inst, "terminal triangle")
    g = _graph(inst)
    y = np.asarray(y, dtype=float)
    report = SeparationReport()
    if len(g.eid) == 0:
        return report
    lab = np.argmin(y[g.term], axis=0)
    seen = set()
    for k in range(len(g.eid)):
        e, u, v = int(g.eid[k]), int(g.eu[k]), int(g.ev[k])
        for t in sorted({int(lab[u]), int(lab[v])}):
            tu, tv = int(g.term[t, u]), int(g.term[t, v])
            _triangle_rows(report, seen, e, tu, tv, y[e], y[tu], y[tv], eps)
    return report


def separate_multiterminal(inst: MulticutInstance, y, eps: float = EPS) -> SeparationReport:
    """Most violated ``y_uv >= sum(y_tu - y_tv, t in S)`` per internal edge."""
    _require_terminals(inst, "multi-terminal")
    g = _graph(inst)
    y = np.asarray(y, dtype=float)
    report = SeparationReport()
    if len(g.eid) == 0:
        return report
    diff = y[g.term[:, g.eu]] - y[g.term[:, g.ev]]
    fwd = np.where(diff > 0, diff, 0.0).sum(axis=0)
    bwd = np.where(diff < 0, -diff, 0.0).sum(axis=0)
    yuv = y[g.eid]
    for k in np.flatnonzero((np.maximum(fwd, bwd) - yuv) > eps):
        e = int(g.eid[k])
        col = diff[:, k]
        sign = 1.0 if fwd[k] >= bwd[k] else -1.0
        terms = [(e, 1.0)]
        for t in np.flatnonzero(sign * col > 0):
            a, b = int(g.term[t, g.eu[k]]), int(g.term[t, g.ev[k]])
            if sign < 0:
                a, b = b, a
            terms += [(a, -1.0), (b, 1.0)]
        row = ConstraintRow(tuple(terms), GE, 0.0, TAG_MT)
        report.add(row, float(max(fwd[k], bwd[k]) - yuv[k]))
    return report


# --------------------------------------------------------------------------
# odd wheels


def _odd_simple_cycle(walk: list) -> list:
    """Shrink an odd closed walk (first node repeated at the end) to an odd simple cycle."""
    while True:
        seen = {}
        found = None
        for i, a in enumerate(walk[:-1]):
            if a in seen:
                found = (seen[a], i)
                break
            seen[a] = i
        if found is None:
            return walk[:-1]
        i, j = found
        inner = walk[i:j + 1]
        outer = walk[:i] + walk[j:]
        walk = inner if (len(inner) - 1) % 2 == 1 else outer


def separate_odd_wheels(inst: MulticutInstance, y, eps: float = EPS, max_rim: int = MAX_RIM) -> SeparationReport:
    """Odd-wheel rows ``sum(rim) - sum(spokes) <= floor(q/2)`` via parity-doubled shortest paths."""
    g = _graph(inst)
    yv = np.asarray(y, dtype=float)
    report = SeparationReport()
    seen = set()
    for c in range(g.n):
        hub = sorted(g.nbrs[c])
        if len(hub) < 3:
            continue
        spoke = {b: e for b, e in g.adj[c]}
        inside = set(hub)
        hadj = {a: [(b, e) for b, e in g.adj[a] if b in inside] for a in hub}
        cost = {}
        for a in hub:
            for b, e in hadj[a]:
                cost[e] = max(0.0, 0.5 + 0.5 * (yv[spoke[a]] + yv[spoke[b]]) - yv[e])
        best = None
        for s in hub:
            if not hadj[s]:
                continue
            # nodes (a, parity); find shortest (s,0) -> (s,1)
            dist = {(s, 0): 0.0}
            prev = {}
            heap = [(0.0, s, 0)]
            done = set()
            while heap:
                d, a, p = heapq.heappop(heap)
                if d >= 0.5 - eps:
                    break
                if (a, p) in done:
                    continue
                done.add((a, p))
                if (a, p) == (s, 1):
                    break
                for b, e in hadj[a]:
                    key = (b, 1 - p)
                    nd = d + cost[e]
                    if key not in done and nd < dist.get(key, float("inf")):
                        dist[key] = nd
                        prev[key] = (a, p)
                        heapq.heappush(heap, (nd, b, 1 - p))
            if (s, 1) not in done:
                continue
            walk = [s]
            key = (s, 1)
            while key != (s, 0):
                key = prev[key]
                walk.append(key[0])
            rim = _odd_simple_cycle(walk[::-1])
            q = len(rim)
            if q < 3 or q > max_rim:
                continue
            rim_edges = [inst.edge_id(rim[i], rim[(i + 1) % q]) for i in range(q)]
            spokes = [spoke[a] for a in rim]
            lhs = float(sum(yv[e] for e in rim_edges) - sum(yv[e] for e in spokes))
            viol = lhs - q // 2
            if viol > eps and (best is None or viol > best[0]):
                best = (viol, rim_edges, spokes, q)
        if best is not None:
            viol, rim_edges, spokes, q = best
            row = ConstraintRow(tuple((e, 1.0) for e in rim_edges) + tuple((e, -1.0) for e in spokes),
                                LE, float(q // 2), TAG_WHEEL)
            if row.key() not in seen:
                seen.add(row.key())
                report.add(row, viol)
    return report


# --------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class Stage:
    """One schedule token.

    ``kind`` is ``cycles``, ``T``, ``MT``, ``TI``, ``OW`` or ``integer-switch``.
    """

    kind: str
    token: str
    integer: bool = False
    facet: bool = False
    bounded: bool = False

    @property
    def is_switch(self) -> bool:
        return self.kind == "integer-switch"

    @property
    def terminal(self) -> bool:
        return self.kind in ("T", "MT", "TI")


@dataclass(frozen=True)
class Schedule:
    text: str
    stages: tuple

    def procedures_at(self, k: int) -> list:
        """Cumulative separator set active in stage ``k``."""
        return [s for s in self.stages[: k + 1] if not s.is_switch]

    @property
    def needs_terminals(self) -> bool:
        return any(s.terminal for s in self.stages)

    @property
    def integer_from(self) -> Optional[int]:
        for k, s in enumerate(self.stages):
            if s.is_switch:
                return k
        return None


_CYCLE = re.compile(r"C(I?)(F?)(B?)")


def parse_schedule(text: str) -> Schedule:
    """Parse ``MC-TOKEN-TOKEN...``; the ``I`` token switches to integer mode."""
    parts = text.strip().split("-")
    if parts[0] != "MC":
        raise ScheduleError(f"schedule must start with 'MC', got {parts[0]!r}")
    if len(parts) < 2:
        raise ScheduleError("schedule needs at least one separation token")
    stages = []
    integer = False
    for tok in parts[1:]:
        if tok == "I":
            if integer:
                raise ScheduleError("token 'I' appears twice")
            integer = True
            stages.append(Stage("integer-switch", tok))
        elif tok in ("T", "MT", "OW"):
            stages.append(Stage(tok, tok))
        elif tok == "TI":
            if not integer:
                raise ScheduleError("token 'TI' is only valid after 'I'")
            stages.append(Stage("TI", tok, integer=True))
        else:
            m = _CYCLE.fullmatch(tok)
            if not m:
                raise ScheduleError(f"unknown token {tok!r}")
            if m.group(1) and not integer:
                raise ScheduleError(f"token {tok!r} is only valid after 'I'")
            stages.append(Stage("cycles", tok, integer=bool(m.group(1)), facet=bool(m.group(2)), bounded=bool(m.group(3))))
    return Schedule(text.strip(), tuple(stages))


def run_procedure(inst: MulticutInstance, y, stage: Stage, eps: float = EPS) -> SeparationReport:
    if stage.kind == "cycles":
        return separate_cycles(inst, y, integer=stage.integer, facet=stage.facet, bounded=stage.bounded, eps=eps)
    if stage.kind == "T":
        return separate_terminal_triangles(inst, y, eps)
    if stage.kind == "TI":
        return separate_terminal_triangles_integer(inst, y, eps)
    if stage.kind == "MT":
        return separate_multiterminal(inst, y, eps)
    if stage.kind == "OW":
        return separate_odd_wheels(inst, y, eps)
    raise ValueError(f"stage {stage.token!r} is not a separator")


def separate(inst: MulticutInstance, y, procedures: Sequence[Stage], eps: float = EPS) -> SeparationReport:
    """Run a separator set once; odd wheels only run when no cycle row was found."""
    out = SeparationReport()
    seen = set()
    cycle_rows = 0
    wheels = []
    for st in procedures:
        if st.kind == "OW":
            wheels.append(st)
            continue
        rep = run_procedure(inst, y, st, eps)
        if st.kind == "cycles":
            cycle_rows += len(rep)
        for r in rep.rows:
            if r.key() not in seen:
                seen.add(r.key())
                out.add(r, r.violation(y))
    if wheels and cycle_rows == 0:
        for r in run_procedure(inst, y, wheels[0], eps).rows:
            if r.key() not in seen:
                seen.add(r.key())
                out.add(r, r.violation(y))
    return out
