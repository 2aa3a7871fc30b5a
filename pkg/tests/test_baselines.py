import numpy as np
import pytest

from conftest import grid_model, random_graph_model, triangle_model
from mcseg.baselines import default_init, icm, kernighan_lin, lazy_flipper
from mcseg.engine import VERIFIED, solve
from mcseg.model import Factor, FactorGraph, LPI, ModelError, Potts, Table, eval_energy


@pytest.mark.parametrize("method", [icm, lazy_flipper])
def test_single_variable_optimum(method):
    fg = FactorGraph(1, 3, [Factor((0,), Table([3.0, 1.0, 2.0]))])
    assert method(fg, [0]) == (1,)


@pytest.mark.parametrize("method", [icm, lazy_flipper])
def test_local_optimum_is_fixed_point(method, rng):
    fg = grid_model(3, 3, 3, rng)
    x = method(fg)
    assert method(fg, x) == x


@pytest.mark.parametrize("method", [icm, lazy_flipper])
def test_never_worse_than_init(method):
    rng = np.random.default_rng(8)
    for _ in range(100):
        fg = grid_model(3, 2, 3, rng)
        init = [int(v) for v in rng.integers(0, 3, 6)]
        assert eval_energy(fg, method(fg, init)) <= eval_energy(fg, init) + 1e-12


def test_default_init():
    fg = FactorGraph(2, 3, [Factor((0,), Table([3, 1, 2])), Factor((1,), Table([0, 1, 2]))])
    assert default_init(fg) == [1, 0]
    assert default_init(triangle_model()) == [0, 0, 0]


def test_flipper_depth():
    with pytest.raises(ModelError):
        lazy_flipper(triangle_model(), depth=2)


def test_kl_triangle():
    x = kernighan_lin(triangle_model())
    assert eval_energy(triangle_model(), x) == -2.0


def test_kl_positive_weights_single_shore():
    fs = [Factor((0, 1), Potts(0, 1)), Factor((1, 2), Potts(0, 2)), Factor((0, 2), Potts(0, 0.5))]
    fg = FactorGraph(3, 3, fs, mode="unsupervised")
    assert kernighan_lin(fg) == (0, 0, 0)
    assert eval_energy(fg, (0, 0, 0)) == 0.0


def test_kl_not_below_verified_optimum(rng):
    for _ in range(10):
        fg = random_graph_model(7, rng)
        r = solve(fg, "MC-CFB-I-CIF")
        assert r.status == VERIFIED
        assert eval_energy(fg, kernighan_lin(fg)) >= r.value - 1e-9


def test_kl_rejects_other_models(rng):
    with pytest.raises(ModelError):
        kernighan_lin(grid_model(2, 2, 2, rng))
    with pytest.raises(ModelError):
        kernighan_lin(FactorGraph(3, 3, [Factor((0, 1, 2), LPI([0, 1, 1, 1, 2]))], mode="unsupervised"))
