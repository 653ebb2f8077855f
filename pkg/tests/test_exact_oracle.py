import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from gnalign.evaluate import generate_benchmark
from gnalign.exact_oracle import OracleBudgetError, enumerate_all_scores, enumeration_size, solve_exact
from gnalign.graph_io import Network
from gnalign.instance import Alignment, AlignmentInstance, build_instance, complete_instance
from helpers import clique, gnp, instances, random_instance
from oracles import has_clique, score_by_hand


def test_empty_candidates():
    g = clique(3)
    opt, a = solve_exact(AlignmentInstance(g, g, [], [], []))
    assert opt == 0 and len(a) == 0


def test_k3_self_alignment():
    k3 = clique(3)
    opt, a = solve_exact(complete_instance(k3, k3))
    assert opt == 3
    assert a == Alignment([0, 1, 2])  # lexicographically smallest optimum


def test_k4_planted_host():
    b = generate_benchmark("planted_clique", seed=7, k=4, host_n=10, host_p=0.2)
    assert solve_exact(build_instance(b.g1, b.g2, b.similarity))[0] == 6


def test_one_by_one_enumeration():
    g = Network(("a",), ())
    inst = AlignmentInstance(g, g, [0], [0], [2.0])
    got = sorted((a.pairs(), s) for a, s in enumerate_all_scores(inst))
    assert got == [([], 0.0), ([(0, 0)], 2.0)]


def test_two_by_two_count():
    g = Network(("a", "b"), ())
    assert len(enumerate_all_scores(complete_instance(g, g))) == 7


def test_enumeration_count_formula():
    # partial injections of a 3-set into a 4-set: sum_r C(3,r) * 4!/(4-r)!
    inst = complete_instance(Network(tuple("abc"), ()), Network(tuple("wxyz"), ()))
    assert len(enumerate_all_scores(inst)) == 1 + 12 + 36 + 24


def test_random_4x4_cross_check():
    for seed in range(10):
        inst = random_instance(seed, 4, 4, 0.5, node_scores=True)
        opt, a = solve_exact(inst)
        scores = enumerate_all_scores(inst)
        assert opt == max(s for _, s in scores)
        assert opt == score_by_hand(inst, a.partner.tolist())


@given(instances(max_n=5))
@settings(max_examples=60, deadline=None)
def test_solve_exact_matches_enumeration(inst):
    opt, a = solve_exact(inst)
    scores = enumerate_all_scores(inst)
    assert opt == pytest.approx(max(s for _, s in scores), abs=1e-12)
    for b, s in scores:
        assert s == pytest.approx(score_by_hand(inst, b.partner.tolist()), abs=1e-12)
    # tie-break: lexicographically smallest optimal mapping, unmapped first
    optimal = [tuple(b.partner.tolist()) for b, s in scores if abs(s - opt) <= 1e-12]
    assert tuple(a.partner.tolist()) == min(optimal)


def test_clique_soundness():
    rng = np.random.default_rng(0)
    tried_free = 0
    for _ in range(40):
        host = gnp(rng, 8, 0.35, "h")
        for k in (3, 4):
            opt, _ = solve_exact(complete_instance(clique(k), host))
            if has_clique(host, k):
                assert opt == k * (k - 1) // 2
            else:
                tried_free += 1
                assert opt < k * (k - 1) // 2
    assert tried_free > 0


def test_budget_errors():
    inst = random_instance(0, 8, 8, 0.3)
    with pytest.raises(OracleBudgetError):
        solve_exact(inst)
    assert solve_exact(inst, limit=8)[0] >= 0
    assert enumeration_size(inst) == 9 ** 8
    with pytest.raises(OracleBudgetError):
        enumerate_all_scores(inst, limit=8)
