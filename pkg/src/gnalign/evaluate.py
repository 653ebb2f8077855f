"""Alignment quality measures and synthetic benchmark instances."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .graph_io import Network, SimilarityTable
from .instance import Alignment, AlignmentInstance, conserved_edges

__all__ = [
    "EvalReport",
    "Benchmark",
    "edge_correctness",
    "pair_similarity",
    "coherence",
    "evaluate_alignment",
    "generate_benchmark",
]


@dataclass(frozen=True)
class EvalReport:
    edge_correctness: float
    conserved: int
    coherence: float | None
    mapped_nodes: int
    score: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def edge_correctness(inst: AlignmentInstance, a: Alignment) -> float:
    """Conserved edges divided by ``min(|E1|, |E2|)``; undefined for edgeless networks."""
    denom = min(inst.g1.m, inst.g2.m)
    if denom == 0:
        raise ValueError("edge correctness is undefined when a network has no edges")
    return conserved_edges(inst, a) / denom


# The cited GO-based measure cannot be rebuilt from its description alone, so
# coherence uses this documented stand-in (version 1):
#   idf(t)    = -log(fraction of annotated nodes, both networks, carrying t)
#   sim(u, v) = sum of idf over the multiset intersection
#               / max(sum of idf over A(u), sum of idf over A(v))
# Network-wide coherence is the sum of sim over aligned pairs whose nodes are
# both annotated, divided by min(#annotated in g1, #annotated in g2).
COHERENCE_VERSION = 1


def _idf(annotations: Sequence[Counter]) -> dict[str, float]:
    df: Counter = Counter()
    for terms in annotations:
        df.update(set(terms))
    total = len(annotations)
    return {t: -math.log(cnt / total) for t, cnt in df.items()}


def _weight(terms: Counter, idf: Mapping[str, float]) -> float:
    return sum(idf[t] * c for t, c in terms.items())


def pair_similarity(a: Counter, b: Counter, idf: Mapping[str, float]) -> float:
    shared = _weight(a & b, idf)
    denom = max(_weight(a, idf), _weight(b, idf))
    if denom == 0.0:
        return 1.0 if a == b else 0.0
    return shared / denom


def coherence(inst: AlignmentInstance, a: Alignment, annotations1: Sequence[Counter | None] | None = None,
              annotations2: Sequence[Counter | None] | None = None, per_pair_mean: bool = False) -> float | None:
    """Annotation coherence of an alignment (see ``COHERENCE_VERSION`` above).

    Annotations default to those carried by the networks.  They must already
    include ancestor terms.  Returns ``None`` when no aligned pair has both
    nodes annotated.  With ``per_pair_mean`` the plain mean over those pairs
    is returned instead of the network-wide normalisation.
    """
    ann1 = annotations1 if annotations1 is not None else inst.g1.annotations
    ann2 = annotations2 if annotations2 is not None else inst.g2.annotations
    if ann1 is None or ann2 is None:
        return None
    annotated1 = [t for t in ann1 if t]
    annotated2 = [t for t in ann2 if t]
    idf = _idf(annotated1 + annotated2)
    sims = [pair_similarity(ann1[i], ann2[k], idf) for i, k in a.pairs() if ann1[i] and ann2[k]]
    if not sims:
        return None
    if per_pair_mean:
        return sum(sims) / len(sims)
    return sum(sims) / min(len(annotated1), len(annotated2))


def evaluate_alignment(inst: AlignmentInstance, a: Alignment, score: float | None = None) -> EvalReport:
    ec = edge_correctness(inst, a) if min(inst.g1.m, inst.g2.m) > 0 else float("nan")
    return EvalReport(
        edge_correctness=ec,
        conserved=conserved_edges(inst, a),
        coherence=coherence(inst, a),
        mapped_nodes=len(a),
        score=score,
    )


# ------------------------------------------------------------- benchmarks

class Benchmark(NamedTuple):
    g1: Network
    g2: Network
    similarity: SimilarityTable
    truth: dict[str, str] | None = None


def _gnp(rng: np.random.Generator, n: int, p: float) -> list[tuple[int, int]]:
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return list(zip(iu[keep].tolist(), ju[keep].tolist()))


def _planted_clique(rng, k: int, host_n: int, host_p: float) -> Benchmark:
    if k > host_n:
        raise ValueError("clique size exceeds host size")
    pattern = Network(tuple(f"p{i}" for i in range(k)), tuple((i, j) for i in range(k) for j in range(i + 1, k)))
    edges = set(_gnp(rng, host_n, host_p))
    planted = np.sort(rng.choice(host_n, size=k, replace=False)).tolist()
    for a in range(k):
        for b in range(a + 1, k):
            edges.add((planted[a], planted[b]))
    host = Network(tuple(f"h{i}" for i in range(host_n)), tuple(sorted(edges)))
    sim = SimilarityTable(tuple((p, h, 1.0) for p in pattern.ids for h in host.ids), "evalue")
    return Benchmark(pattern, host, sim, {f"p{t}": f"h{planted[t]}" for t in range(k)})


def _noisy_copy(rng, n: int, p: float, edge_flip_rate: float, decoys: int | None) -> Benchmark:
    edges = _gnp(rng, n, p)
    copy = set(edges)
    if edge_flip_rate > 0:
        # a flipped edge is removed and replaced by a uniformly drawn non-edge
        for e in edges:
            if rng.random() < edge_flip_rate:
                copy.discard(e)
                while True:
                    u, v = sorted(rng.choice(n, size=2, replace=False).tolist())
                    if (u, v) not in copy and (u, v) not in edges:
                        copy.add((u, v))
                        break
    g1 = Network(tuple(f"a{i}" for i in range(n)), tuple(edges))
    order = rng.permutation(n).tolist()  # position in g2 -> original node
    where = {orig: pos for pos, orig in enumerate(order)}
    g2 = Network(tuple(f"b{o}" for o in order), tuple((where[u], where[v]) for u, v in sorted(copy)))
    rows = []
    for i in range(n):
        rows.append((f"a{i}", f"b{i}", float(10.0 ** -rng.uniform(5, 50))))
        if decoys is None:
            others = [x for x in range(n) if x != i]
        else:
            others = rng.choice(np.delete(np.arange(n), i), size=min(decoys, n - 1), replace=False).tolist()
        for x in sorted(others):
            rows.append((f"a{i}", f"b{x}", float(rng.uniform(1.0, 100.0))))
    return Benchmark(g1, g2, SimilarityTable(tuple(rows), "evalue"), {f"a{i}": f"b{i}" for i in range(n)})


def _random_pair(rng, n1: int, p1: float, n2: int, p2: float) -> Benchmark:
    g1 = Network(tuple(f"x{i}" for i in range(n1)), tuple(_gnp(rng, n1, p1)))
    g2 = Network(tuple(f"y{i}" for i in range(n2)), tuple(_gnp(rng, n2, p2)))
    sim = SimilarityTable(tuple((a, b, 1.0) for a in g1.ids for b in g2.ids), "evalue")
    return Benchmark(g1, g2, sim)


def generate_benchmark(kind: str, seed: int, **params) -> Benchmark:
    """Deterministic synthetic instance.

    ``planted_clique(k, host_n, host_p)``
        ``K_k`` against a ``G(host_n, host_p)`` host with a ``k``-clique
        planted on random nodes; complete similarity table.
    ``noisy_copy(n, p, edge_flip_rate, decoys=3)``
        ``G(n, p)`` and a node-shuffled copy with a fraction of edges
        rewired.  Every node's true partner gets a tiny e-value; ``decoys``
        random other nodes (all others if ``None``) get e-values in
        [1, 100).
    ``random_pair(n1, p1, n2, p2)``
        Two independent random graphs with a complete similarity table.
    """
    rng = np.random.default_rng(seed)
    if kind == "planted_clique":
        return _planted_clique(rng, int(params["k"]), int(params["host_n"]), float(params["host_p"]))
    if kind == "noisy_copy":
        return _noisy_copy(rng, int(params["n"]), float(params["p"]), float(params.get("edge_flip_rate", 0.0)),
                           params.get("decoys", 3))
    if kind == "random_pair":
        return _random_pair(rng, int(params["n1"]), float(params["p1"]), int(params["n2"]), float(params["p2"]))
    raise ValueError(f"unknown benchmark kind {kind!r}")
