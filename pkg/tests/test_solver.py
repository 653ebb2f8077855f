import dataclasses
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gnalign.solver as solver_mod
from gnalign.exact_oracle import solve_exact
from gnalign.graph_io import Network
from gnalign.instance import AlignmentInstance, complete_instance, score_alignment
from gnalign.lagrange import MultiplierStore, SolverInvariantError, evaluate_ld
from gnalign.solver import (
    STEP_FLOOR,
    SolverParams,
    dual_descent,
    natalie,
    subgradient_opt,
    write_trace,
)
from helpers import clique, instances, random_instance


def _edge2():
    g = Network(("a", "b"), ((0, 1),))
    return complete_instance(g, g)


def test_params_defaults_and_validation():
    p = SolverParams()
    assert (p.K, p.L, p.M, p.N, p.phi, p.tau, p.tol) == (3, 100, 10, 20, 0.5, 1.0, 1e-9)
    assert p.time_limit is None and p.max_iters is None
    for bad in (dict(K=0), dict(L=0), dict(M=0), dict(N=0), dict(phi=1.5), dict(tau=-0.1),
                dict(max_iters=0), dict(time_limit=0), dict(step_target="worst")):
        with pytest.raises(ValueError):
            SolverParams(**bad)


def test_zero_subgradient_at_start_stops_after_one_evaluation():
    inst = _edge2()
    rep = natalie(inst)
    assert len(rep.trace) == 1
    assert rep.termination == "zero_subgradient"
    assert rep.best_lb == rep.best_ub == 1.0


def test_subgradient_opt_toy_reaches_oracle():
    inst = complete_instance(Network(("a", "b"), ((0, 1),)), Network(("x", "y"), ((0, 1),)), node_scores=[1, 0, 0, 2])
    lam = MultiplierStore.zeros(inst)
    lb, ub, a = subgradient_opt(inst, lam)
    opt, _ = solve_exact(inst)
    assert lb == pytest.approx(opt) and ub == pytest.approx(opt)
    assert score_alignment(inst, a) == lb


def _replay_first_subgradient_block(trace, params):
    """Re-derive the step sizes of the first subgradient phase from its bounds."""
    block = []
    for r in trace:
        if r.phase != "subgradient":
            break
        block.append(r)
    assert block[0].step_size == 1.0
    step, n_left, m_left = 1.0, params.N, params.M
    lb_star, ub_star = block[0].lower, block[0].upper
    halvings = 0
    for prev, cur in zip(block, block[1:]):
        assert cur.step_size == step
        if cur.lower > lb_star + params.tol or cur.upper < ub_star - params.tol:
            lb_star, ub_star = max(lb_star, cur.lower), min(ub_star, cur.upper)
            m_left, n_left = m_left - 1, params.N
        else:
            n_left, m_left = n_left - 1, params.M
        if n_left == 0:
            step, n_left = step / 2, params.N
            halvings += 1
        if m_left == 0:
            step, m_left = step * 2, params.M
    return block, halvings


def test_step_halves_after_n_stagnant_iterations():
    params = SolverParams(K=1, L=1, N=5, M=3)
    total_halvings = 0
    for seed in range(40):
        inst = random_instance(seed, 6, 6, 0.5)
        rep = natalie(inst, params)
        block, halvings = _replay_first_subgradient_block(rep.trace, params)
        total_halvings += halvings
    assert total_halvings > 0


def test_stagnation_exact_halving_point():
    # find a run that stagnates from the start: the (N+1)-th step is half the first
    params = SolverParams(K=1, L=1, N=4, M=50)
    for seed in range(200):
        rep = natalie(random_instance(seed, 6, 6, 0.5), params)
        sub = [r for r in rep.trace if r.phase == "subgradient"]
        if len(sub) < params.N + 2:
            continue
        first = sub[0]
        stalled = all(r.lower <= first.lower + params.tol and r.upper >= first.upper - params.tol
                      for r in sub[1:params.N + 1])
        if stalled:
            assert [r.step_size for r in sub[1:params.N + 1]] == [1.0] * params.N
            assert sub[params.N + 1].step_size == 0.5
            return
    pytest.skip("no stagnating run found")


def test_step_underflow_termination():
    inst = random_instance(0, 6, 6, 0.5)
    run = solver_mod._Run(inst, SolverParams(N=1, M=10**6))
    _, why = solver_mod._subgradient_phase(run, MultiplierStore.zeros(inst), None)
    assert why == "step_underflow"
    steps = [r.step_size for r in run.trace]
    assert min(steps) == STEP_FLOOR
    # with N = 1 every stagnant iteration halves the step, so it walks down 2^0 .. 2^-52
    assert all(math.frexp(x)[0] == 0.5 for x in steps)
    assert len(set(steps)) == 53


def test_dual_descent_zero_slack_fixed_point():
    inst = _edge2()
    lam = MultiplierStore.zeros(inst)
    ub0 = evaluate_ld(inst, lam).upper_bound
    lb, ub, _ = dual_descent(inst, lam, SolverParams(L=5))
    assert not lam.values.any()
    assert ub == ub0 == lb


@given(instances(max_n=5), st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_dual_descent_monotone(inst, seed):
    lam = MultiplierStore.zeros(inst)
    lam.values[:] = np.random.default_rng(seed).uniform(-1, 1, size=len(lam))
    before = evaluate_ld(inst, lam)
    run = solver_mod._Run(inst, SolverParams(L=10))
    solver_mod._descent_phase(run, lam, None)
    ups = [r.upper for r in run.trace]
    for a, b in zip(ups, ups[1:]):
        assert b <= a + 1e-7 * (1 + abs(a))
    assert run.best_ub - run.best_lb <= before.upper_bound - before.lower_bound + 1e-9


def test_dual_descent_trivial_sizes():
    inst = complete_instance(Network(("a",), ()), clique(3))
    lb, ub, a = dual_descent(inst, MultiplierStore.zeros(inst))
    assert lb == ub == 0.0


def test_natalie_empty_instance():
    g = clique(3)
    rep = natalie(AlignmentInstance(g, g, [], [], []))
    assert rep.best_lb == rep.best_ub == 0.0


def _planted(k, seed, host_n=10, p=0.2):
    from gnalign.evaluate import generate_benchmark
    from gnalign.instance import build_instance
    b = generate_benchmark("planted_clique", seed=seed, k=k, host_n=host_n, host_p=p)
    return build_instance(b.g1, b.g2, b.similarity)


def test_natalie_planted_k4():
    rep = natalie(_planted(4, 7))
    assert rep.best_lb == 6 and rep.best_ub == pytest.approx(6, abs=1e-6)
    assert rep.closed()


@given(instances(max_n=6))
@settings(max_examples=50, deadline=None)
def test_natalie_sandwich_and_report_invariants(inst):
    rep = natalie(inst, SolverParams(K=2, L=20))
    opt, _ = solve_exact(inst)
    assert rep.best_lb <= opt + 1e-9 <= rep.best_ub + 2e-9
    assert rep.best_lb == score_alignment(inst, rep.best_alignment)
    assert rep.best_ub == min(r.upper for r in rep.trace)
    assert rep.best_lb == max(r.lower for r in rep.trace)
    if rep.termination == "zero_subgradient":
        assert rep.closed(1e-9)


def test_running_extrema_monotone():
    rep = natalie(random_instance(4, 6, 6, 0.5), SolverParams(K=2, L=10))
    best_lb, best_ub = -math.inf, math.inf
    for r in rep.trace:
        best_lb, best_ub = max(best_lb, r.lower), min(best_ub, r.upper)
    assert (best_lb, best_ub) == (rep.best_lb, rep.best_ub)


def _bounds(trace):
    return [(r.phase, r.upper, r.lower, None if math.isnan(r.step_size) else r.step_size) for r in trace]


def test_determinism_across_runs_and_threads():
    inst = random_instance(31, 12, 12, 0.35)
    params = SolverParams(K=2, L=15)
    a = natalie(inst, params)
    b = natalie(inst, params)
    c = natalie(inst, dataclasses.replace(params, threads=4))
    for other in (b, c):
        assert (other.best_lb, other.best_ub) == (a.best_lb, a.best_ub)
        assert other.best_alignment == a.best_alignment
        assert _bounds(other.trace) == _bounds(a.trace)
        assert np.array_equal(other.multipliers.values, a.multipliers.values)


def test_iteration_limit():
    rep = natalie(random_instance(2, 6, 6, 0.5), SolverParams(max_iters=7))
    assert len(rep.trace) <= 7
    if rep.termination == "iter_limit":
        assert len(rep.trace) == 7
    assert rep.best_lb <= rep.best_ub


def test_time_limit():
    inst = random_instance(2, 12, 12, 0.4)
    rep = natalie(inst, SolverParams(time_limit=1e-4, K=50))
    assert rep.termination in ("time_limit", "gap_closed", "zero_subgradient")
    assert rep.best_lb <= rep.best_ub


def test_best_step_target_also_sound():
    for seed in range(10):
        inst = random_instance(seed, 5, 5, 0.5)
        rep = natalie(inst, SolverParams(step_target="best"))
        opt, _ = solve_exact(inst)
        assert rep.best_lb <= opt <= rep.best_ub + 1e-9


def test_descent_raising_bound_is_reported(monkeypatch):
    inst = random_instance(3, 5, 5, 0.6)
    real = solver_mod.evaluate_ld
    calls = {"n": 0}

    def inflating(*args, **kw):
        ev = real(*args, **kw)
        calls["n"] += 1
        return dataclasses.replace(ev, upper_bound=ev.upper_bound + calls["n"])

    monkeypatch.setattr(solver_mod, "evaluate_ld", inflating)
    with pytest.raises(SolverInvariantError):
        dual_descent(inst, MultiplierStore.zeros(inst))


def test_write_trace_format():
    rep = natalie(random_instance(1, 4, 4, 0.5), SolverParams(K=1, L=2))
    buf = io.StringIO()
    write_trace(rep.trace, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].split("\t") == ["iter", "phase", "Z_LD", "Z_lb", "step_size", "elapsed_s"]
    assert len(lines) == len(rep.trace) + 1
    assert all(len(l.split("\t")) == 6 for l in lines)
