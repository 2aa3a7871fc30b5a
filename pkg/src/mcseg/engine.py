"""Cutting-plane driver.

Each schedule stage runs its cumulative separator set to quiescence: solve
the current (integer) linear program, clamp the point to [0, 1], separate,
add the violated rows, repeat.  The largest objective seen is the lower
bound; the rounded labeling's energy is the upper bound.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .model import SUPERVISED, FactorGraph, eval_energy
from .reduction import MulticutInstance, build_multicut
from .rounding import (
    KAPPA_SWEEP,
    PSEUDO_THRESHOLDS,
    round_components,
    round_components_sweep,
    round_derandomized,
    round_nearest,
)
from .separation import EPS, Schedule, SeparationUsageError, parse_schedule, separate
from .simplex import DualSimplex, HighsSolver, branch_and_bound, export_lp, make_solver

VERIFY_GAP = 1e-6
MAX_SOLVES = 100_000
NATIVE_VAR_LIMIT = 300

VERIFIED = "verified-optimal"
FEASIBLE = "feasible"
BOUND_ONLY = "bound-only"


class EngineError(RuntimeError):
    """The constraint system became infeasible or the solve cap was hit."""


@dataclass
class SolveOptions:
    rounding: Optional[str] = None  # nearest | derand | pseudo | components
    kappa: Optional[float] = None
    thresholds: Optional[tuple] = None
    backend: str = "auto"
    time_limit: Optional[float] = None
    eps: float = EPS
    seed: int = 0
    export_lp: Optional[str] = None


@dataclass
class StageStats:
    token: str
    rows_added: dict = field(default_factory=dict)
    lp_solves: int = 0
    seconds: float = 0.0
    bound: float = -math.inf


@dataclass
class SolveResult:
    value: float
    bound: float
    labeling: tuple
    y: np.ndarray
    status: str
    stage_stats: list
    runtime_ms: float
    constant_offset: float
    instance: Optional[MulticutInstance] = None
    cuts: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        return self.value - self.bound


def lower_and_upper(result: SolveResult) -> tuple:
    return result.bound, result.value


def _candidates(inst: MulticutInstance, y: np.ndarray, opts: SolveOptions) -> list:
    mode = opts.rounding
    if inst.supervised:
        mode = mode or "pseudo"
        if mode == "nearest":
            return [round_nearest(inst, y)]
        if mode == "derand":
            return [round_derandomized(inst, y, opts.thresholds)]
        if mode == "pseudo":
            return [round_derandomized(inst, y, opts.thresholds or PSEUDO_THRESHOLDS)]
        raise SeparationUsageError(f"rounding {mode!r} needs an unsupervised model")
    mode = mode or "components"
    if mode != "components":
        raise SeparationUsageError(f"rounding {mode!r} needs a supervised model")
    if opts.kappa is not None:
        return [round_components(inst, y, opts.kappa)[1]]
    return [round_components_sweep(inst, y, KAPPA_SWEEP)]


def _exact_labeling(inst: MulticutInstance, y: np.ndarray) -> tuple:
    # integral consistent point: the partition is read off directly
    if inst.supervised:
        return round_nearest(inst, y)
    return round_components(inst, y, 0.0)[1]


def solve(fg: FactorGraph, schedule: Union[str, Schedule], options: Optional[SolveOptions] = None) -> SolveResult:
    opts = options or SolveOptions()
    t0 = time.perf_counter()
    if isinstance(schedule, str):
        schedule = parse_schedule(schedule)
    if schedule.needs_terminals and fg.mode != SUPERVISED:
        raise SeparationUsageError("terminal separation needs a supervised model")
    if opts.rounding == "components" and fg.mode == SUPERVISED:
        raise SeparationUsageError("component rounding needs an unsupervised model")
    if opts.rounding in ("nearest", "derand", "pseudo") and fg.mode != SUPERVISED:
        raise SeparationUsageError(f"rounding {opts.rounding!r} needs a supervised model")

    inst = build_multicut(fg)
    lp = inst.to_linear_program()
    backend = opts.backend
    if backend == "auto":
        backend = "native" if inst.num_vars <= NATIVE_VAR_LIMIT else "highs"
    solver = make_solver(lp, backend, seed=opts.seed)
    int_vars = list(range(inst.num_edges)) + inst.integral_aux()

    bound = -math.inf
    stats = []
    solves = 0
    integer = False
    y = np.zeros(inst.num_vars)
    best_x, best_v = None, math.inf
    out_of_time = False
    final_clean = False
    last = None  # (solution, integer mode) of the latest solve while no rows were added since

    for k, stage in enumerate(schedule.stages):
        st = StageStats(stage.token)
        ts = time.perf_counter()
        if stage.is_switch:
            integer = True
            if isinstance(solver, HighsSolver):
                solver.set_integer(int_vars)
        procs = schedule.procedures_at(k)
        while True:
            if opts.time_limit is not None and time.perf_counter() - t0 > opts.time_limit:
                out_of_time = True
                break
            if last is not None and last[1] == integer:
                sol = last[0]
            else:
                solves += 1
                if solves > MAX_SOLVES:
                    raise EngineError("solve cap reached; separation does not terminate")
                if integer and isinstance(solver, DualSimplex):
                    sol = branch_and_bound(solver, int_vars)
                else:
                    sol = solver.solve()
                st.lp_solves += 1
                last = (sol, integer)
            if not sol.optimal:
                raise EngineError(f"relaxation infeasible in stage {stage.token!r}")
            bound = max(bound, sol.bound)
            y = np.clip(sol.values, 0.0, 1.0)
            rep = separate(inst, y, procs, opts.eps)
            if not rep.rows:
                final_clean = integer
                break
            final_clean = False
            last = None
            solver.add_rows(rep.rows)
            lp.add_rows(rep.rows)
            for tag, c in rep.counts.items():
                st.rows_added[tag] = st.rows_added.get(tag, 0) + c
        st.seconds = time.perf_counter() - ts
        st.bound = bound
        stats.append(st)
        if out_of_time:
            break

    cands = _candidates(inst, y, opts)
    if final_clean:
        cands.append(_exact_labeling(inst, y))
    for x in cands:
        v = eval_energy(fg, x)
        if v < best_v:
            best_x, best_v = x, v
    if best_x is None:
        status = BOUND_ONLY
    elif best_v - bound < VERIFY_GAP:
        status = VERIFIED
    else:
        status = FEASIBLE
    if opts.export_lp:
        with open(opts.export_lp, "w", encoding="utf-8") as fh:
            fh.write(export_lp(lp, int_vars if integer else ()))
    return SolveResult(
        value=float(best_v),
        bound=float(bound),
        labeling=tuple(best_x) if best_x is not None else (),
        y=y[: inst.num_edges].copy(),
        status=status,
        stage_stats=stats,
        runtime_ms=(time.perf_counter() - t0) * 1000.0,
        constant_offset=inst.constant_offset,
        instance=inst,
        cuts=lp.rows[len(inst.fixed_rows):],
    )
