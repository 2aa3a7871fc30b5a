"""Seeded synthetic models and the modularity loader.

All randomness comes from :class:`SplitMix64` so generated models are
identical across platforms for a given seed.
"""

from __future__ import annotations

from importlib import resources

from .model import UNSUPERVISED, Factor, FactorGraph, Junction, ModelError, Potts, Table

_MASK = (1 << 64) - 1

INCLUSION_SMOOTHNESS = 0.25


class SplitMix64:
    """64-bit splitmix generator (Steele, Lea and Flood constants)."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Uniform double in ``[lo, hi)`` built from the top 53 bits."""
        return lo + (hi - lo) * ((self.next_u64() >> 11) * 2.0**-53)


def grid_pairs(width: int, height: int) -> list:
    """4-neighbour pairs in row-major order: right neighbour, then lower neighbour."""
    pairs = []
    for r in range(height):
        for c in range(width):
            v = r * width + c
            if c + 1 < width:
                pairs.append((v, v + 1))
            if r + 1 < height:
                pairs.append((v, v + width))
    return pairs


def gen_synth_potts(width: int, height: int, labels: int, seed: int) -> FactorGraph:
    """Grid with uniform [0,1] unaries and uniform [-1,1] Potts couplings.

    Draw order: all unaries (pixel-major, label-minor), then one coupling per
    pair of :func:`grid_pairs`.
    """
    if width < 1 or height < 1 or labels < 2:
        raise ModelError("synth-potts needs positive dimensions and at least two labels")
    rng = SplitMix64(seed)
    n = width * height
    factors = [Factor((v,), Table([rng.uniform() for _ in range(labels)])) for v in range(n)]
    for u, v in grid_pairs(width, height):
        factors.append(Factor((u, v), Potts(0.0, rng.uniform(-1.0, 1.0))))
    return FactorGraph(n, labels, factors)


def inclusion_template(width: int, height: int, labels: int) -> list:
    """Concentric rectangles: ring depth mapped onto labels ``0..labels-1`` from the border inwards."""
    rings = max(1, (min(width, height) + 1) // 2)
    out = []
    for r in range(height):
        for c in range(width):
            depth = min(r, c, height - 1 - r, width - 1 - c)
            out.append(min(labels - 1, depth * labels // rings))
    return out


def gen_synth_inclusion(width: int, height: int, labels: int, lam: float, noise: float, seed: int) -> FactorGraph:
    """Noisy nested-rectangle image with L1 unaries, Potts smoothing and junction penalties.

    Pixel intensities are ``l / (labels - 1)`` plus uniform noise in
    ``[-noise, noise]``.  One junction factor per 2x2 block penalises blocks
    showing three or more labels; none are emitted for ``lam == 0``.
    """
    if width < 2 or height < 2 or labels < 2:
        raise ModelError("synth-inclusion needs at least 2x2 pixels and two labels")
    rng = SplitMix64(seed)
    truth = inclusion_template(width, height, labels)
    n = width * height
    factors = []
    for v in range(n):
        intensity = truth[v] / (labels - 1) + rng.uniform(-noise, noise)
        factors.append(Factor((v,), Table([abs(intensity - l / (labels - 1)) for l in range(labels)])))
    for u, v in grid_pairs(width, height):
        factors.append(Factor((u, v), Potts(0.0, INCLUSION_SMOOTHNESS)))
    if lam > 0:
        for r in range(height - 1):
            for c in range(width - 1):
                v = r * width + c
                factors.append(Factor((v, v + 1, v + width, v + width + 1), Junction(lam)))
    return FactorGraph(n, labels, factors)


def parse_edge_list(text: str) -> tuple:
    """Parse ``u v`` lines into ``(num_nodes, edges)``; node ids are relabelled densely in sorted order."""
    raw = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ModelError(f"line {lineno}: expected two node ids, got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ModelError(f"line {lineno}: node ids must be integers") from None
        if u < 0 or v < 0:
            raise ModelError(f"line {lineno}: node ids must be non-negative")
        if u == v:
            raise ModelError(f"line {lineno}: self-loop on node {u}")
        raw.append((lineno, u, v))
    ids = sorted({u for _, u, _ in raw} | {v for _, _, v in raw})
    index = {a: i for i, a in enumerate(ids)}
    seen = set()
    edges = []
    for lineno, u, v in raw:
        key = tuple(sorted((index[u], index[v])))
        if key in seen:
            raise ModelError(f"line {lineno}: duplicate edge {u} {v}")
        seen.add(key)
        edges.append(key)
    return len(ids), edges


def load_modularity(edge_list_text: str) -> FactorGraph:
    """Fully connected correlation clustering model whose energy is minus the modularity."""
    n, edges = parse_edge_list(edge_list_text)
    if n < 2:
        raise ModelError("modularity needs at least one edge")
    m = len(edges)
    deg = [0] * n
    adj = set(edges)
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    # self-pair terms of the modularity sum are a constant
    const = sum(d * d for d in deg) / (4.0 * m * m)
    factors = []
    for u in range(n):
        for v in range(u + 1, n):
            q = ((1.0 if (u, v) in adj else 0.0) - deg[u] * deg[v] / (2.0 * m)) / m
            eq, ne = -q, 0.0
            if not factors:
                eq, ne = eq + const, ne + const
            factors.append(Factor((u, v), Potts(eq, ne)))
    return FactorGraph(n, n, factors, mode=UNSUPERVISED)


def karate_edge_list() -> str:
    return resources.files("mcseg").joinpath("data/karate.txt").read_text(encoding="utf-8")


def modularity(num_nodes: int, edges, labels) -> float:
    """Direct modularity ``Q`` of a partition, for cross-checks."""
    m = len(edges)
    deg = [0] * num_nodes
    inside = 0
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
        inside += labels[u] == labels[v]
    tot: dict = {}
    for v in range(num_nodes):
        tot[labels[v]] = tot.get(labels[v], 0) + deg[v]
    return inside / m - sum(t * t for t in tot.values()) / (4.0 * m * m)


__all__ = [
    "SplitMix64",
    "gen_synth_potts",
    "gen_synth_inclusion",
    "inclusion_template",
    "load_modularity",
    "parse_edge_list",
    "karate_edge_list",
    "modularity",
    "grid_pairs",
]
