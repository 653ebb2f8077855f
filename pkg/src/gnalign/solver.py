"""Multiplier search: subgradient optimisation, dual descent, and the driver alternating them.

Every evaluation of ``Z_LD`` yields an upper bound and, through the global
matching, a feasible alignment whose score is a lower bound.  The driver
keeps the best of both and a per-evaluation trace.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .instance import Alignment, AlignmentInstance
from .lagrange import (
    LdEvaluation,
    MultiplierStore,
    SolverInvariantError,
    compute_slacks,
    evaluate_ld,
    local_structure,
    subgradient,
)

__all__ = [
    "SolverParams",
    "TraceRecord",
    "SolveReport",
    "subgradient_opt",
    "dual_descent",
    "descent_update",
    "natalie",
    "write_trace",
    "STEP_FLOOR",
]

STEP_FLOOR = 2.0 ** -52
MONOTONE_RTOL = 1e-7


@dataclass(frozen=True)
class SolverParams:
    K: int = 3
    L: int = 100
    M: int = 10
    N: int = 20
    phi: float = 0.5
    tau: float = 1.0
    time_limit: float | None = None
    max_iters: int | None = None
    tol: float = 1e-9
    threads: int = 1
    # "current": step length uses this iterate's lower bound; "best": the best one seen so far
    step_target: str = "current"

    def __post_init__(self):
        for name in ("K", "L", "M", "N", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not (0.0 <= self.phi <= 1.0 and 0.0 <= self.tau <= 1.0):
            raise ValueError("phi and tau must lie in [0, 1]")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.step_target not in ("current", "best"):
            raise ValueError("step_target must be 'current' or 'best'")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    phase: str
    upper: float
    lower: float
    step_size: float
    elapsed: float


@dataclass
class SolveReport:
    best_lb: float
    best_ub: float
    best_alignment: Alignment
    trace: list[TraceRecord]
    termination: str
    multipliers: MultiplierStore | None = field(default=None, repr=False)

    @property
    def gap(self) -> float:
        return self.best_ub - self.best_lb

    def closed(self, tol: float = 1e-6) -> bool:
        return self.gap <= tol * (1.0 + abs(self.best_ub))


class _Limit(Exception):
    def __init__(self, reason):
        self.reason = reason


class _Run:
    """Shared bookkeeping across phases: best bounds, trace and limits."""

    def __init__(self, inst: AlignmentInstance, params: SolverParams):
        self.inst = inst
        self.params = params
        self.start = time.perf_counter()
        self.deadline = None if params.time_limit is None else self.start + params.time_limit
        self.trace: list[TraceRecord] = []
        self.best_lb = -math.inf
        self.best_ub = math.inf
        self.best_alignment = Alignment.empty(inst.n1)

    def closed(self) -> bool:
        return self.best_ub - self.best_lb <= self.params.tol * (1.0 + abs(self.best_ub))

    def evaluate(self, lam: MultiplierStore, phase: str, step: float) -> LdEvaluation:
        if self.params.max_iters is not None and len(self.trace) >= self.params.max_iters:
            raise _Limit("iter_limit")
        if self.deadline is not None and time.perf_counter() >= self.deadline:
            raise _Limit("time_limit")
        ev = evaluate_ld(self.inst, lam, threads=self.params.threads)
        if ev.upper_bound < ev.lower_bound - self.params.tol * (1.0 + abs(ev.upper_bound)):
            raise SolverInvariantError(f"upper bound {ev.upper_bound} below lower bound {ev.lower_bound}")
        self.trace.append(TraceRecord(len(self.trace), phase, ev.upper_bound, ev.lower_bound, step,
                                      time.perf_counter() - self.start))
        return ev

    def improve(self, ev: LdEvaluation) -> bool:
        """Record ``ev``'s bounds; True iff either best bound tightened by more than tol."""
        tol = self.params.tol
        better = False
        if ev.lower_bound > self.best_lb + tol:
            better = True
        if ev.upper_bound < self.best_ub - tol:
            better = True
        if ev.lower_bound > self.best_lb:
            self.best_lb = ev.lower_bound
            self.best_alignment = ev.alignment
        self.best_ub = min(self.best_ub, ev.upper_bound)
        return better


def _subgradient_phase(run: _Run, lam: MultiplierStore, ev: LdEvaluation | None):
    """Held-Karp iterations with adaptive step.  Returns ``(last evaluation, reason)``."""
    p = run.params
    step = 1.0
    n_left, m_left = p.N, p.M
    if ev is None:
        ev = run.evaluate(lam, "subgradient", step)
    run.improve(ev)
    # bounds of this phase only
    lb_star, ub_star = ev.lower_bound, ev.upper_bound
    while True:
        g = subgradient(ev)
        norm2 = float(np.dot(g, g))
        if norm2 == 0.0:
            return ev, "zero_subgradient"
        if run.closed():
            return ev, "gap_closed"
        target = ev.lower_bound if p.step_target == "current" else run.best_lb
        gap = ev.upper_bound - target
        lam.values -= (step * gap / norm2) * g
        ev = run.evaluate(lam, "subgradient", step)
        run.improve(ev)
        tol = p.tol
        if ev.lower_bound > lb_star + tol or ev.upper_bound < ub_star - tol:
            lb_star = max(lb_star, ev.lower_bound)
            ub_star = min(ub_star, ev.upper_bound)
            m_left -= 1
            n_left = p.N
        else:
            n_left -= 1
            m_left = p.M
        if n_left == 0:
            step /= 2.0
            n_left = p.N
        if m_left == 0:
            step *= 2.0
            m_left = p.M
        if step < STEP_FLOOR:
            return ev, "step_underflow"


def descent_update(inst: AlignmentInstance, lam: MultiplierStore, ev: LdEvaluation,
                   phi: float = 0.5, tau: float = 1.0) -> None:
    """One slack-based multiplier update from the evaluation ``ev`` at ``lam`` (in place).

    Each key moves by ``phi`` times the forward slack push minus the backward
    one, where a push is the entry's local slack plus ``tau`` times its
    share of the pair's global slack.
    """
    ls = local_structure(inst)
    if ls.n_keys == 0:
        return
    share = 1.0 / (2.0 * (inst.n1 - 1)) + 1.0 / (2.0 * (inst.n2 - 1))
    sl = compute_slacks(inst, lam, ev)
    push = sl.gamma + (tau * share) * sl.pi[ls.e_pair]
    lam.values += phi * (push[ls.fwd_entry] - push[ls.bwd_entry])


def _descent_phase(run: _Run, lam: MultiplierStore, ev: LdEvaluation | None):
    """``L`` sweeps of the slack-based multiplier update.  Returns ``(last evaluation, reason)``."""
    p = run.params
    inst = run.inst
    ls = local_structure(inst)
    if ev is None:
        ev = run.evaluate(lam, "dual_descent", math.nan)
    run.improve(ev)
    if ls.n_keys == 0:
        # no quadratic term: the global matching alone is exact
        return ev, "zero_subgradient"
    for _ in range(p.L):
        if run.closed():
            return ev, "gap_closed"
        descent_update(inst, lam, ev, p.phi, p.tau)
        prev = ev.upper_bound
        ev = run.evaluate(lam, "dual_descent", math.nan)
        if ev.upper_bound > prev + MONOTONE_RTOL * (1.0 + abs(prev)):
            raise SolverInvariantError(
                f"dual descent raised the upper bound from {prev!r} to {ev.upper_bound!r}")
        run.improve(ev)
    return ev, "rounds_done"


def _finish(run: _Run, lam: MultiplierStore, reason: str) -> SolveReport:
    lb = max(run.best_lb, 0.0) if run.trace else 0.0
    ub = run.best_ub if run.trace else math.inf
    return SolveReport(lb, ub, run.best_alignment, run.trace, reason, lam)


def subgradient_opt(inst: AlignmentInstance, lam: MultiplierStore, params: SolverParams | None = None):
    """Run subgradient optimisation from ``lam`` (updated in place).

    Returns ``(lb, ub, best_alignment)``.
    """
    run = _Run(inst, params or SolverParams())
    try:
        _subgradient_phase(run, lam, None)
    except _Limit:
        pass
    return run.best_lb, run.best_ub, run.best_alignment


def dual_descent(inst: AlignmentInstance, lam: MultiplierStore, params: SolverParams | None = None):
    """Run ``params.L`` dual-descent sweeps from ``lam`` (updated in place).

    Returns ``(lb, ub, best_alignment)``.  Raises
    :class:`~gnalign.lagrange.SolverInvariantError` if a sweep increases the
    upper bound beyond a 1e-7 relative tolerance.
    """
    run = _Run(inst, params or SolverParams())
    try:
        _descent_phase(run, lam, None)
    except _Limit:
        pass
    return run.best_lb, run.best_ub, run.best_alignment


def natalie(inst: AlignmentInstance, params: SolverParams | None = None) -> SolveReport:
    """Alternate subgradient optimisation and dual descent ``K`` times from zero multipliers."""
    params = params or SolverParams()
    run = _Run(inst, params)
    lam = MultiplierStore.zeros(inst)
    ev = None
    reason = "rounds_done"
    try:
        for _ in range(params.K):
            ev, why = _subgradient_phase(run, lam, ev)
            if why in ("zero_subgradient", "gap_closed"):
                reason = why
                break
            ev, why = _descent_phase(run, lam, ev)
            if why in ("zero_subgradient", "gap_closed"):
                reason = why
                break
    except _Limit as hit:
        reason = hit.reason
    return _finish(run, lam, reason)


def write_trace(trace: list[TraceRecord], fh: TextIO) -> None:
    fh.write("iter\tphase\tZ_LD\tZ_lb\tstep_size\telapsed_s\n")
    for r in trace:
        fh.write(f"{r.iteration}\t{r.phase}\t{r.upper!r}\t{r.lower!r}\t{r.step_size!r}\t{r.elapsed:.6f}\n")
