import pytest

from conftest import grid_model, triangle_model
from mcseg.model import LPI, Factor, FactorGraph, ModelError, Potts, Table
from mcseg.reference import brute_force_min, local_polytope_lp


def test_single_unary():
    fg = FactorGraph(1, 3, [Factor((0,), Table([3.0, 1.0, 2.0]))])
    assert brute_force_min(fg) == ((1,), 1.0)
    assert local_polytope_lp(fg) == pytest.approx(1.0)


def test_triangle_partition():
    x, v = brute_force_min(triangle_model())
    assert v == -2.0
    assert x == (0, 1, 0)


def test_potts_tie_goes_to_smallest_labeling():
    fg = FactorGraph(2, 2, [Factor((0,), Table([0, 1])), Factor((1,), Table([1, 0])), Factor((0, 1), Potts(0, 1))])
    assert brute_force_min(fg) == ((0, 0), 1.0)


def test_lp_small_example():
    fg = FactorGraph(2, 2, [Factor((0,), Table([0, 1])), Factor((1,), Table([1, 0])), Factor((0, 1), Potts(0, 10))])
    assert local_polytope_lp(fg) == pytest.approx(1.0, abs=1e-9)


def test_unary_only_lp_is_sum_of_minima(rng):
    U = rng.normal(size=(4, 3))
    fg = FactorGraph(4, 3, [Factor((v,), Table(U[v])) for v in range(4)])
    assert local_polytope_lp(fg) == pytest.approx(U.min(axis=1).sum(), abs=1e-9)


def test_lp_is_a_lower_bound(rng):
    for _ in range(10):
        fg = grid_model(3, 2, 3, rng)
        assert local_polytope_lp(fg) <= brute_force_min(fg)[1] + 1e-9


def test_refusals():
    with pytest.raises(ModelError):
        brute_force_min(FactorGraph(12, 12, [], mode="unsupervised"))
    with pytest.raises(ModelError):
        brute_force_min(FactorGraph(24, 2, []))
    fg = FactorGraph(3, 2, [Factor((0, 1, 2), LPI([0, 1, 1, 1, 2]))])
    with pytest.raises(ModelError):
        local_polytope_lp(fg)
