import math
from collections import Counter
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnalign.evaluate import (
    coherence,
    edge_correctness,
    evaluate_alignment,
    generate_benchmark,
    pair_similarity,
)
from gnalign.graph_io import Network, annotate, parse_annotation_tsv, read_network, write_gml, write_similarity_tsv
from gnalign.instance import Alignment, build_instance, complete_instance, conserved_edges
from gnalign.solver import natalie
from helpers import clique, gnp, random_instance
from oracles import conserved_by_hand

FIXTURES = Path(__file__).parent / "fixtures"


def test_identity_edge_correctness():
    g = gnp(np.random.default_rng(1), 8, 0.4)
    inst = complete_instance(g, g)
    assert edge_correctness(inst, Alignment(list(range(8)))) == 1.0
    assert edge_correctness(inst, Alignment.empty(8)) == 0.0


def test_edge_correctness_recomputed():
    inst = random_instance(6, 7, 9, 0.4)
    rng = np.random.default_rng(2)
    partner = rng.permutation(9)[:7].tolist()
    a = Alignment(partner)
    expect = conserved_by_hand(inst.g1, inst.g2, partner) / min(inst.g1.m, inst.g2.m)
    assert edge_correctness(inst, a) == pytest.approx(expect, abs=0)
    rep = evaluate_alignment(inst, a)
    assert rep.edge_correctness == edge_correctness(inst, a)
    assert rep.conserved == conserved_edges(inst, a)
    assert rep.mapped_nodes == 7


def test_edge_correctness_undefined_for_edgeless():
    inst = complete_instance(Network(("a", "b"), ()), clique(2))
    with pytest.raises(ValueError):
        edge_correctness(inst, Alignment.empty(2))


def test_pair_similarity_trivial_cases():
    idf = {"a": 1.0, "b": 2.0, "c": 0.5}
    assert pair_similarity(Counter("ab"), Counter("ab"), idf) == 1.0
    assert pair_similarity(Counter("ab"), Counter("c"), idf) == 0.0


def _fixture_instance():
    ann = parse_annotation_tsv((FIXTURES / "coherence_annotations.tsv").read_text())
    g1 = annotate(read_network(FIXTURES / "coherence_g1.gml"), ann)
    g2 = annotate(read_network(FIXTURES / "coherence_g2.gml"), ann)
    inst = complete_instance(g1, g2)
    return inst, Alignment([0, 1, 2, -1])  # u1-v1, u2-v2, u3-v3


def test_coherence_fixture_by_hand():
    inst, a = _fixture_instance()
    # 8 annotated nodes.  document frequencies: root 8, a 3, b 4, c 2, d 1
    idf_a, idf_b, idf_c = math.log(8 / 3), math.log(8 / 4), math.log(8 / 2)
    sim1 = 1.0                                   # identical {root, a, b}
    sim2 = idf_b / (idf_a + idf_b)               # {root, a, b} vs {root, b}
    sim3 = idf_c / (2 * idf_c)                   # {root, c} vs {root, c, c}
    assert coherence(inst, a, per_pair_mean=True) == pytest.approx((sim1 + sim2 + sim3) / 3, abs=1e-12)
    assert coherence(inst, a) == pytest.approx((sim1 + sim2 + sim3) / 4, abs=1e-12)


def test_coherence_absent_without_annotated_pairs():
    inst, _ = _fixture_instance()
    assert coherence(inst, Alignment.empty(4)) is None
    # u4 and v4 are both annotated, so this pair counts even though it shares nothing informative
    assert coherence(inst, Alignment([-1, -1, -1, 3])) == 0.0
    plain = complete_instance(clique(2), clique(2))
    assert coherence(plain, Alignment([0, 1])) is None


@given(st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_coherence_symmetric_and_relabel_invariant(seed):
    rng = np.random.default_rng(seed)
    terms = [f"t{t}" for t in range(6)]
    n1, n2 = 5, 6
    ann1 = [Counter(rng.choice(terms, size=int(rng.integers(0, 4))).tolist()) for _ in range(n1)]
    ann2 = [Counter(rng.choice(terms, size=int(rng.integers(0, 4))).tolist()) for _ in range(n2)]
    g1 = Network(tuple(f"a{t}" for t in range(n1)), ())
    g2 = Network(tuple(f"b{t}" for t in range(n2)), ())
    partner = rng.permutation(n2)[:n1].tolist()
    fwd = coherence(complete_instance(g1, g2), Alignment(partner), ann1, ann2)
    back_partner = [-1] * n2
    for i, k in enumerate(partner):
        back_partner[k] = i
    rev = coherence(complete_instance(g2, g1), Alignment(back_partner), ann2, ann1)
    assert (fwd is None) == (rev is None)
    if fwd is not None:
        assert fwd == pytest.approx(rev, abs=1e-12)
    rename = {t: f"renamed-{t}" for t in terms}
    r1 = [Counter({rename[t]: c for t, c in a.items()}) for a in ann1]
    r2 = [Counter({rename[t]: c for t, c in a.items()}) for a in ann2]
    again = coherence(complete_instance(g1, g2), Alignment(partner), r1, r2)
    assert again == fwd or again == pytest.approx(fwd, abs=1e-12)
    if fwd is not None:
        assert 0.0 <= fwd <= 1.0


@given(st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_edge_correctness_in_unit_interval(seed):
    inst = random_instance(seed, 6, 6, 0.5)
    rng = np.random.default_rng(seed)
    a = Alignment(rng.permutation(6).tolist())
    if min(inst.g1.m, inst.g2.m) == 0:
        return
    ec = edge_correctness(inst, a)
    assert 0.0 <= ec <= 1.0
    small = inst.g1 if inst.g1.m <= inst.g2.m else inst.g2
    all_conserved = conserved_edges(inst, a) == small.m
    assert (ec == 1.0) == all_conserved


# ------------------------------------------------------------- benchmarks

def test_planted_clique_degenerate_host():
    b = generate_benchmark("planted_clique", seed=0, k=3, host_n=3, host_p=0.0)
    assert b.g1.edges == clique(3).edges and b.g2.edges == clique(3).edges


def test_planted_clique_rejects_oversized():
    with pytest.raises(ValueError):
        generate_benchmark("planted_clique", seed=0, k=5, host_n=4, host_p=0.5)


def test_planted_clique_truth_is_a_clique():
    b = generate_benchmark("planted_clique", seed=3, k=5, host_n=12, host_p=0.2)
    hosts = [b.g2.index(b.truth[p]) for p in b.g1.ids]
    assert all(b.g2.has_edge(u, v) for u in hosts for v in hosts if u < v)


def test_noisy_copy_without_flips_is_isomorphic():
    for n in (6, 9):
        b = generate_benchmark("noisy_copy", seed=n, n=n, p=0.4, edge_flip_rate=0.0)
        inst = build_instance(b.g1, b.g2, b.similarity)
        truth = Alignment.from_pairs(n, [(b.g1.index(x), b.g2.index(y)) for x, y in b.truth.items()])
        assert conserved_edges(inst, truth) == b.g1.m == b.g2.m
        # identity partner has the smallest e-value
        best = {}
        for x, y, v in b.similarity.entries:
            if x not in best or v < best[x][1]:
                best[x] = (y, v)
        assert all(best[x][0] == y for x, y in b.truth.items())
        complete = generate_benchmark("noisy_copy", seed=n, n=n, p=0.4, edge_flip_rate=0.0, decoys=None)
        rep = natalie(build_instance(complete.g1, complete.g2, complete.similarity))
        assert rep.best_lb == complete.g1.m


def test_noisy_copy_flips_preserve_edge_count():
    b = generate_benchmark("noisy_copy", seed=1, n=30, p=0.2, edge_flip_rate=0.3)
    assert b.g1.m == b.g2.m
    assert not b.g1.same_structure(b.g2)


@pytest.mark.parametrize("kind,params", [
    ("planted_clique", dict(k=4, host_n=10, host_p=0.2)),
    ("noisy_copy", dict(n=15, p=0.3, edge_flip_rate=0.1)),
    ("random_pair", dict(n1=5, p1=0.5, n2=6, p2=0.4)),
])
def test_benchmarks_deterministic(kind, params):
    a = generate_benchmark(kind, seed=42, **params)
    b = generate_benchmark(kind, seed=42, **params)
    assert write_gml(a.g1) == write_gml(b.g1)
    assert write_gml(a.g2) == write_gml(b.g2)
    assert write_similarity_tsv(a.similarity) == write_similarity_tsv(b.similarity)
    assert a.truth == b.truth
    c = generate_benchmark(kind, seed=43, **params)
    assert write_gml(c.g2) != write_gml(a.g2) or write_similarity_tsv(c.similarity) != write_similarity_tsv(a.similarity)


def test_unknown_kind():
    with pytest.raises(ValueError):
        generate_benchmark("lattice", seed=0)
