"""Factor graphs with label-permutation-invariant higher-order terms.

A :class:`FactorGraph` holds variables, their label counts and an ordered
list of :class:`Factor` objects.  Every factor of order two or more must be
invariant to label permutations, i.e. its value depends only on which of its
arguments share a label.  Such functions are parameterised by one weight per
set partition of the factor scope; partitions are ordered canonically as
restricted-growth strings in ascending lexicographic order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product
from typing import Sequence, Union

import numpy as np

SUPERVISED = "supervised"
UNSUPERVISED = "unsupervised"

MAX_PARTITION_ORDER = 10


class ModelError(ValueError):
    """Raised for malformed models or labelings."""


# --------------------------------------------------------------------------
# function kinds


@dataclass(frozen=True)
class Table:
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


@dataclass(frozen=True)
class Potts:
    equal: float
    unequal: float

    @property
    def beta(self) -> float:
        return self.unequal - self.equal


@dataclass(frozen=True)
class HOPotts:
    """``equal`` if all arguments share one label, ``unequal`` otherwise."""

    equal: float
    unequal: float


@dataclass(frozen=True)
class LPI:
    """Generic permutation-invariant function, one weight per partition."""

    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(v) for v in self.weights))


@dataclass(frozen=True)
class Junction:
    """``lam`` if more than two distinct labels occur among four arguments."""

    lam: float


FunctionKind = Union[Table, Potts, HOPotts, LPI, Junction]


@dataclass(frozen=True)
class Factor:
    vars: tuple
    kind: FunctionKind

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(int(v) for v in self.vars))

    @property
    def order(self) -> int:
        return len(self.vars)


# --------------------------------------------------------------------------
# partitions


def bell_number(n: int) -> int:
    # Bell triangle
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def pair_index(n: int) -> list[tuple[int, int]]:
    """Pairs ``(i, j)``, ``i < j``, in lexicographic order."""
    return list(combinations(range(n), 2))


@dataclass(frozen=True)
class Partition:
    rgs: tuple
    chi: tuple

    @property
    def num_blocks(self) -> int:
        return max(self.rgs) + 1 if self.rgs else 0


def _restricted_growth_strings(n: int):
    if n == 0:
        yield ()
        return

    def rec(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for a in range(top + 2):
            prefix.append(a)
            yield from rec(prefix, max(top, a))
            prefix.pop()

    yield from rec([0], 0)


@lru_cache(maxsize=None)
def _partitions(n: int) -> tuple:
    pairs = pair_index(n)
    out = []
    for rgs in _restricted_growth_strings(n):
        chi = tuple(int(rgs[i] != rgs[j]) for i, j in pairs)
        out.append(Partition(rgs, chi))
    return tuple(out)


def enumerate_partitions(n: int) -> list[Partition]:
    """All set partitions of ``n`` elements in canonical order.

    The canonical order is ascending lexicographic order of restricted-growth
    strings; it defines the weight layout of :class:`LPI` factors.
    """
    if not 1 <= n <= MAX_PARTITION_ORDER:
        raise ModelError(f"partition order must lie in [1, {MAX_PARTITION_ORDER}], got {n}")
    return list(_partitions(n))


@lru_cache(maxsize=None)
def _rgs_lookup(n: int) -> dict:
    return {p.rgs: i for i, p in enumerate(_partitions(n))}


def canonical_rgs(labels: Sequence[int]) -> tuple:
    seen: dict = {}
    out = []
    for lab in labels:
        if lab not in seen:
            seen[lab] = len(seen)
        out.append(seen[lab])
    return tuple(out)


def partition_index(labels: Sequence[int]) -> int:
    """Index of the partition induced by ``labels`` in canonical order."""
    return _rgs_lookup(len(labels))[canonical_rgs(labels)]


def tau(labels: Sequence[int]) -> tuple:
    """Pairwise cut indicator: 1 for every pair with different labels."""
    n = len(labels)
    if n < 2:
        raise ModelError("tau needs at least two labels")
    return tuple(int(labels[i] != labels[j]) for i, j in pair_index(n))


def junction_to_lpi(lam: float) -> tuple:
    """Expand a junction penalty into the 15 canonical 4-element partition weights."""
    return tuple(float(lam) if p.num_blocks >= 3 else 0.0 for p in _partitions(4))


def table_to_lpi(values: Sequence[float], order: int, num_labels: int) -> tuple | None:
    """Return LPI weights if a table over ``order`` variables is permutation invariant.

    Partitions with more blocks than ``num_labels`` cannot be realised by any
    labeling and receive weight 0.  Returns ``None`` when the table is not
    invariant.
    """
    weights: dict[int, float] = {}
    arr = np.asarray(values, dtype=float)
    for flat, labels in enumerate(product(range(num_labels), repeat=order)):
        idx = partition_index(labels)
        v = float(arr[flat])
        if idx in weights:
            if abs(weights[idx] - v) > 1e-12 * max(1.0, abs(v)):
                return None
        else:
            weights[idx] = v
    return tuple(weights.get(i, 0.0) for i in range(bell_number(order)))


# --------------------------------------------------------------------------
# factor graph


@dataclass(frozen=True)
class FactorGraph:
    num_variables: int
    label_counts: tuple
    factors: tuple = ()
    mode: str = SUPERVISED
    _by_var: tuple = field(default=(), init=False, repr=False, compare=False)

    def __init__(self, num_variables, label_counts, factors=(), mode=SUPERVISED):
        n = int(num_variables)
        if mode not in (SUPERVISED, UNSUPERVISED):
            raise ModelError(f"unknown mode {mode!r}")
        if isinstance(label_counts, (int, np.integer)):
            label_counts = (int(label_counts),) * n
        label_counts = tuple(int(c) for c in label_counts)
        object.__setattr__(self, "num_variables", n)
        object.__setattr__(self, "label_counts", label_counts)
        object.__setattr__(self, "factors", tuple(factors))
        object.__setattr__(self, "mode", mode)
        self._validate()
        by_var: list[list[int]] = [[] for _ in range(n)]
        for fi, f in enumerate(self.factors):
            for v in f.vars:
                by_var[v].append(fi)
        object.__setattr__(self, "_by_var", tuple(tuple(b) for b in by_var))

    def _validate(self):
        n = self.num_variables
        if n < 1:
            raise ModelError("model needs at least one variable")
        if len(self.label_counts) != n:
            raise ModelError("label_counts length differs from num_variables")
        if any(c < 1 for c in self.label_counts):
            raise ModelError("label counts must be positive")
        if self.mode == UNSUPERVISED:
            if any(c != n for c in self.label_counts):
                raise ModelError("unsupervised models use num_variables labels per variable")
        else:
            if len(set(self.label_counts)) != 1 or self.label_counts[0] < 2:
                raise ModelError("supervised models need one shared label count L >= 2")
        for f in self.factors:
            vs = f.vars
            if not vs:
                raise ModelError("factor without variables")
            if list(vs) != sorted(set(vs)):
                raise ModelError(f"factor variables must be distinct and ascending: {vs}")
            if vs[-1] >= n or vs[0] < 0:
                raise ModelError(f"factor variable out of range: {vs}")
            k = f.kind
            if isinstance(k, Table):
                size = int(np.prod([self.label_counts[v] for v in vs]))
                if len(k.values) != size:
                    raise ModelError(f"table over {vs} needs {size} values, got {len(k.values)}")
            elif isinstance(k, Potts):
                if len(vs) != 2:
                    raise ModelError("Potts factors have exactly two variables")
            elif isinstance(k, LPI):
                if len(vs) > MAX_PARTITION_ORDER:
                    raise ModelError(f"LPI order {len(vs)} exceeds {MAX_PARTITION_ORDER}")
                if len(k.weights) != bell_number(len(vs)):
                    raise ModelError(
                        f"LPI over {len(vs)} variables needs {bell_number(len(vs))} weights"
                    )
            elif isinstance(k, Junction):
                if len(vs) != 4:
                    raise ModelError("junction factors have exactly four variables")
                if k.lam < 0:
                    raise ModelError("junction penalty must be non-negative")
            elif not isinstance(k, HOPotts):
                raise ModelError(f"unknown factor kind {type(k).__name__}")
            if self.mode == UNSUPERVISED and len(vs) == 1:
                raise ModelError("unsupervised models have no first-order factors")

    @property
    def num_labels(self) -> int:
        return self.label_counts[0]

    def factors_of(self, v: int) -> tuple:
        """Indices of the factors that contain variable ``v``."""
        return self._by_var[v]

    def check_labeling(self, x: Sequence[int]) -> tuple:
        x = tuple(int(v) for v in x)
        if len(x) != self.num_variables:
            raise ModelError(f"labeling has {len(x)} entries, model has {self.num_variables}")
        for v, lab in enumerate(x):
            if not 0 <= lab < self.label_counts[v]:
                raise ModelError(f"label {lab} of variable {v} out of range")
        return x


def factor_value(factor: Factor, labels: Sequence[int], label_counts: Sequence[int]) -> float:
    k = factor.kind
    if isinstance(k, Potts):
        return k.equal if labels[0] == labels[1] else k.unequal
    if isinstance(k, HOPotts):
        return k.equal if len(set(labels)) == 1 else k.unequal
    if isinstance(k, LPI):
        return k.weights[partition_index(labels)]
    if isinstance(k, Junction):
        return k.lam if len(set(labels)) > 2 else 0.0
    flat = 0
    for lab, c in zip(labels, label_counts):
        flat = flat * c + lab
    return k.values[flat]


def eval_energy(fg: FactorGraph, x: Sequence[int]) -> float:
    """Sum of all factor values at labeling ``x``."""
    x = fg.check_labeling(x)
    total = 0.0
    for f in fg.factors:
        labels = [x[v] for v in f.vars]
        total += factor_value(f, labels, [fg.label_counts[v] for v in f.vars])
    return total


def _batch_partition_index(sub: np.ndarray) -> np.ndarray:
    """Canonical partition index for each row of an integer label matrix."""
    k, n = sub.shape
    if n == 1:
        return np.zeros(k, dtype=np.int64)
    code = np.zeros(k, dtype=np.int64)
    for bit, (i, j) in enumerate(pair_index(n)):
        code |= (sub[:, i] != sub[:, j]).astype(np.int64) << bit
    table = {}
    for idx, p in enumerate(_partitions(n)):
        c = 0
        for bit, b in enumerate(p.chi):
            c |= b << bit
        table[c] = idx
    keys = np.array(sorted(table), dtype=np.int64)
    vals = np.array([table[c] for c in keys], dtype=np.int64)
    return vals[np.searchsorted(keys, code)]


def energies(fg: FactorGraph, labelings: np.ndarray) -> np.ndarray:
    """Vectorised :func:`eval_energy` over the rows of ``labelings``.

    No range checks are done here; callers pass valid labelings.
    """
    X = np.asarray(labelings, dtype=np.int64)
    if X.ndim == 1:
        X = X[None, :]
    out = np.zeros(X.shape[0])
    for f in fg.factors:
        sub = X[:, list(f.vars)]
        k = f.kind
        if isinstance(k, Potts):
            out += np.where(sub[:, 0] == sub[:, 1], k.equal, k.unequal)
        elif isinstance(k, HOPotts):
            same = np.all(sub == sub[:, :1], axis=1)
            out += np.where(same, k.equal, k.unequal)
        elif isinstance(k, LPI):
            out += np.asarray(k.weights)[_batch_partition_index(sub)]
        elif isinstance(k, Junction):
            s = np.sort(sub, axis=1)
            distinct = 1 + np.count_nonzero(np.diff(s, axis=1), axis=1)
            out += np.where(distinct > 2, k.lam, 0.0)
        else:
            dims = [fg.label_counts[v] for v in f.vars]
            flat = np.ravel_multi_index(tuple(sub.T), dims)
            out += np.asarray(k.values)[flat]
    return out
