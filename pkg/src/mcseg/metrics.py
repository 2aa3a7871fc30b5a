"""Partition and labeling comparison measures."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def _check(p, q):
    p = np.asarray(p)
    q = np.asarray(q)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError("labelings must be one-dimensional and of equal length")
    return p, q


def _contingency(p, q):
    _, pi = np.unique(p, return_inverse=True)
    _, qi = np.unique(q, return_inverse=True)
    table = np.zeros((pi.max() + 1, qi.max() + 1))
    np.add.at(table, (pi, qi), 1.0)
    return table


def _entropy(counts: np.ndarray, n: int) -> float:
    c = counts[counts > 0] / n
    return float(-(c * np.log(c)).sum())


def variation_of_information(p: Sequence[int], q: Sequence[int]) -> float:
    """``H(P) + H(Q) - 2 I(P; Q)`` in nats."""
    p, q = _check(p, q)
    n = len(p)
    if n == 0:
        return 0.0
    t = _contingency(p, q)
    hp = _entropy(t.sum(axis=1), n)
    hq = _entropy(t.sum(axis=0), n)
    hpq = _entropy(t.ravel(), n)
    return max(0.0, 2.0 * hpq - hp - hq)


def rand_index(p: Sequence[int], q: Sequence[int]) -> float:
    """Fraction of element pairs on which both partitions agree."""
    p, q = _check(p, q)
    n = len(p)
    if n < 2:
        raise ValueError("rand index needs at least two elements")
    t = _contingency(p, q)

    def pairs(x):
        return float((x * (x - 1) / 2).sum())

    total = n * (n - 1) / 2
    same_both = pairs(t)
    same_p = pairs(t.sum(axis=1))
    same_q = pairs(t.sum(axis=0))
    diff_both = total - same_p - same_q + same_both
    return (same_both + diff_both) / total


def pixel_accuracy(p: Sequence[int], q: Sequence[int]) -> float:
    """Fraction of positions with identical labels (no renaming)."""
    p, q = _check(p, q)
    if len(p) == 0:
        raise ValueError("pixel accuracy of empty labelings")
    return float(np.mean(p == q))
