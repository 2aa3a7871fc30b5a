import numpy as np
import pytest

from conftest import grid_model, random_graph_model, triangle_model
from mcseg.engine import BOUND_ONLY, FEASIBLE, VERIFIED, SolveOptions, lower_and_upper, solve
from mcseg.model import Factor, FactorGraph, Potts, eval_energy
from mcseg.reference import brute_force_min, local_polytope_lp
from mcseg.separation import SeparationUsageError


def test_triangle_mc_c():
    r = solve(triangle_model(), "MC-C")
    assert r.value == pytest.approx(-2.0) and r.bound == pytest.approx(-2.0)
    assert r.status == VERIFIED
    np.testing.assert_allclose(r.y, [1.0, 0.0, 1.0])
    assert lower_and_upper(r) == (r.bound, r.value)


def _five_wheel_model():
    # rim edges want to be cut, spokes want to be joined
    fs = [Factor((0, i), Potts(0.0, 1.0)) for i in range(1, 6)]
    fs += [Factor(tuple(sorted((i, i % 5 + 1))), Potts(0.0, -1.0)) for i in range(1, 6)]
    return FactorGraph(6, 6, fs, mode="unsupervised")


def test_odd_wheels_close_cycle_gap():
    fg = _five_wheel_model()
    opt = brute_force_min(fg)[1]
    plain = solve(fg, "MC-C")
    wheel = solve(fg, "MC-C-OW")
    assert plain.bound < opt - 0.1
    assert wheel.bound == pytest.approx(opt, abs=1e-9)
    assert wheel.stage_stats[1].rows_added.get("odd-wheel", 0) >= 1


def test_grid_mc_t_mt_matches_local_polytope(rng):
    for _ in range(3):
        fg = grid_model(3, 3, 3, rng, coupling=(0.0, 1.0))
        assert solve(fg, "MC-T-MT").bound == pytest.approx(local_polytope_lp(fg), abs=1e-6)


def test_value_never_below_optimum_and_bound_monotone(rng):
    for _ in range(5):
        fg = grid_model(3, 3, 3, rng)
        opt = brute_force_min(fg)[1]
        r = solve(fg, "MC-T-CF-I-TI")
        assert r.value >= opt - 1e-9
        assert r.bound <= r.value + 1e-6
        traj = [s.bound for s in r.stage_stats]
        assert all(b2 >= b1 - 1e-12 for b1, b2 in zip(traj, traj[1:]))
        assert r.value == pytest.approx(eval_energy(fg, r.labeling))
        if r.status == VERIFIED:
            assert r.value == pytest.approx(opt, abs=1e-6)


def test_status_classification():
    r = solve(triangle_model(), "MC-C")
    assert r.gap < 1e-6 and r.status == VERIFIED
    fg = _five_wheel_model()
    r = solve(fg, "MC-C")
    assert r.status in (FEASIBLE, VERIFIED)
    assert r.status == FEASIBLE or r.gap < 1e-6
    assert BOUND_ONLY == "bound-only"


def test_final_point_is_separated(rng):
    from mcseg.reduction import build_multicut
    from mcseg.separation import parse_schedule, separate

    fg = random_graph_model(7, rng)
    sched = parse_schedule("MC-CB-CF")
    r = solve(fg, sched)
    inst = build_multicut(fg)
    assert len(separate(inst, r.y, sched.procedures_at(1))) == 0


def test_usage_errors():
    with pytest.raises(SeparationUsageError):
        solve(triangle_model(), "MC-T")
    with pytest.raises(SeparationUsageError):
        solve(triangle_model(), "MC-C", SolveOptions(rounding="pseudo"))
    fg = grid_model(2, 2, 2, np.random.default_rng(0))
    with pytest.raises(SeparationUsageError):
        solve(fg, "MC-T", SolveOptions(rounding="components"))


def test_backends_agree(rng):
    for _ in range(3):
        fg = random_graph_model(7, rng, higher="lpi")
        a = solve(fg, "MC-CFB-I-CIF", SolveOptions(backend="native"))
        b = solve(fg, "MC-CFB-I-CIF", SolveOptions(backend="highs"))
        assert a.status == b.status == VERIFIED
        assert a.value == pytest.approx(b.value, abs=1e-6)


def test_rounding_options(rng):
    fg = grid_model(3, 3, 4, rng)
    for mode in ("nearest", "derand", "pseudo"):
        r = solve(fg, "MC-T", SolveOptions(rounding=mode))
        assert r.value >= r.bound - 1e-9
    r = solve(fg, "MC-T", SolveOptions(rounding="pseudo", thresholds=(0.0, 0.5, 1.0)))
    assert r.value >= r.bound - 1e-9
    fg = random_graph_model(6, rng)
    r = solve(fg, "MC-C", SolveOptions(kappa=0.25))
    assert r.value >= r.bound - 1e-9


def test_export_lp(tmp_path):
    path = tmp_path / "final.lp"
    solve(triangle_model(), "MC-C", SolveOptions(export_lp=str(path)))
    text = path.read_text()
    assert text.startswith("\\") or "Minimize" in text
    assert "Subject To" in text


def test_determinism(rng):
    fg = grid_model(3, 3, 3, rng)
    a = solve(fg, "MC-T-MT-CFB-I-TI")
    b = solve(fg, "MC-T-MT-CFB-I-TI")
    assert a.value == b.value and a.bound == b.bound and a.labeling == b.labeling
