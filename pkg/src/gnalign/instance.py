"""Alignment instances: candidate pairs, node scores and the sparse topology term.

The interaction score ``w(i, k, j, l)`` is never stored as a matrix.  It is
``edge_weight`` when ``(i, j)`` is an edge of the first network, ``(k, l)``
an edge of the second, and both ``(i, k)`` and ``(j, l)`` are candidate
pairs; zero otherwise.  :func:`enumerate_w_support` walks the nonzero
entries.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .graph_io import Network, SimilarityTable

__all__ = [
    "AlignmentInstance",
    "Alignment",
    "InvalidAlignmentError",
    "WSupportEntry",
    "build_instance",
    "complete_instance",
    "enumerate_w_support",
    "score_alignment",
    "conserved_edges",
    "DEFAULT_EVALUE_THRESHOLD",
]

DEFAULT_EVALUE_THRESHOLD = 100.0


class InvalidAlignmentError(ValueError):
    pass


class WSupportEntry(NamedTuple):
    i: int
    k: int
    j: int
    l: int
    weight: float


@dataclass(frozen=True, eq=False)
class AlignmentInstance:
    """Two networks plus the candidate (alignment) graph between them.

    ``pair_i``/``pair_k`` list the candidate pairs sorted by ``(i, k)``;
    ``node_scores[p]`` is ``c`` for pair ``p``.  ``edge_weight`` is the
    unsplit score of one conserved interaction.
    """

    g1: Network
    g2: Network
    pair_i: np.ndarray
    pair_k: np.ndarray
    node_scores: np.ndarray
    edge_weight: float = 1.0
    pair_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        pi = np.asarray(self.pair_i, dtype=np.int64)
        pk = np.asarray(self.pair_k, dtype=np.int64)
        c = np.asarray(self.node_scores, dtype=np.float64)
        if not (pi.shape == pk.shape == c.shape) or pi.ndim != 1:
            raise ValueError("pair arrays must be one-dimensional and of equal length")
        if pi.size:
            if pi.min() < 0 or pi.max() >= self.g1.n or pk.min() < 0 or pk.max() >= self.g2.n:
                raise ValueError("candidate pair index out of range")
        order = np.lexsort((pk, pi))
        pi, pk, c = pi[order], pk[order], c[order]
        if pi.size > 1:
            dup = (pi[1:] == pi[:-1]) & (pk[1:] == pk[:-1])
            if dup.any():
                raise ValueError("duplicate candidate pair")
        if not np.all(np.isfinite(c)) or (c < 0).any():
            raise ValueError("node scores must be finite and >= 0")
        if not np.isfinite(self.edge_weight) or self.edge_weight < 0:
            raise ValueError(
                "interaction weights must be >= 0: the relaxation assumes a "
                "nonnegative interaction score matrix"
            )
        for arr in (pi, pk, c):
            arr.setflags(write=False)
        object.__setattr__(self, "pair_i", pi)
        object.__setattr__(self, "pair_k", pk)
        object.__setattr__(self, "node_scores", c)
        object.__setattr__(self, "edge_weight", float(self.edge_weight))
        object.__setattr__(self, "pair_index", {(int(i), int(k)): p for p, (i, k) in enumerate(zip(pi, pk))})

    @property
    def n1(self) -> int:
        return self.g1.n

    @property
    def n2(self) -> int:
        return self.g2.n

    @property
    def n_pairs(self) -> int:
        return int(self.pair_i.size)

    @cached_property
    def candidates(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.n1)]
        for i, k in zip(self.pair_i.tolist(), self.pair_k.tolist()):
            out[i].append(k)
        return tuple(tuple(c) for c in out)

    def is_candidate(self, i: int, k: int) -> bool:
        return (i, k) in self.pair_index

    def node_score(self, i: int, k: int) -> float:
        return float(self.node_scores[self.pair_index[(i, k)]])

    def w(self, i: int, k: int, j: int, l: int) -> float:
        """Unsplit interaction score of aligning ``i->k`` together with ``j->l``."""
        if i == j or k == l:
            return 0.0
        if not (self.g1.has_edge(i, j) and self.g2.has_edge(k, l)):
            return 0.0
        if (i, k) not in self.pair_index or (j, l) not in self.pair_index:
            return 0.0
        return self.edge_weight

    @cached_property
    def support(self) -> dict[str, np.ndarray]:
        """Nonzero interaction entries as parallel arrays, sorted by ``(i, k, j, l)``, ``i < j``."""
        rows: list[tuple[int, int, int, int]] = []
        if self.edge_weight > 0:
            cand = self.candidates
            index = self.pair_index
            adj2 = self.g2.adjacency
            for i, j in self.g1.edges:
                for k in cand[i]:
                    for l in adj2[k]:
                        if (j, l) in index:
                            rows.append((i, k, j, l))
        arr = np.asarray(rows, dtype=np.int64).reshape(-1, 4)
        if len(arr):
            arr = arr[np.lexsort((arr[:, 3], arr[:, 2], arr[:, 1], arr[:, 0]))]
        out = {name: np.ascontiguousarray(arr[:, col]) for col, name in enumerate("ikjl")}
        out["w"] = np.full(len(arr), self.edge_weight)
        for v in out.values():
            v.setflags(write=False)
        return out

    @property
    def n_support(self) -> int:
        return int(self.support["i"].size)

    @cached_property
    def _e2_keys(self) -> np.ndarray:
        e = self.g2.edge_array()
        n2 = self.n2
        return np.unique(np.concatenate([e[:, 0] * n2 + e[:, 1], e[:, 1] * n2 + e[:, 0]]))


def complete_instance(g1: Network, g2: Network, edge_weight: float = 1.0,
                      node_scores: np.ndarray | None = None) -> AlignmentInstance:
    """All ``|V1| * |V2|`` pairs are candidates; node scores default to zero."""
    pi, pk = np.divmod(np.arange(g1.n * g2.n, dtype=np.int64), max(g2.n, 1))
    c = np.zeros(pi.size) if node_scores is None else np.asarray(node_scores, dtype=float).ravel()
    return AlignmentInstance(g1, g2, pi, pk, c, edge_weight)


def build_instance(
    g1: Network,
    g2: Network,
    sim: SimilarityTable,
    filter_threshold: float | None = None,
    score_mode: str = "topology",
    beta: float | None = None,
    max_candidates: int | None = None,
) -> AlignmentInstance:
    """Build the candidate graph from a similarity table.

    E-values are kept when ``<= filter_threshold`` (default 100), bitscores
    when ``>= filter_threshold`` (default 0).  In ``"topology"`` mode node
    scores are zero and each conserved interaction scores 1.  In
    ``"blended"`` mode (bitscore tables only) node scores are
    ``(1 - beta) * bitscore / max_bitscore`` and each conserved interaction
    scores ``beta``.  ``max_candidates`` keeps only the best-scoring
    partners of every node of ``g1``.
    """
    if score_mode not in ("topology", "blended"):
        raise ValueError(f"unknown score mode {score_mode!r}")
    if score_mode == "blended":
        if beta is None or not (0.0 <= beta <= 1.0):
            raise ValueError("blended scoring needs beta in [0, 1]")
        if sim.kind != "bitscore":
            raise ValueError("blended scoring needs a bitscore similarity table")
    if filter_threshold is None:
        filter_threshold = DEFAULT_EVALUE_THRESHOLD if sim.kind == "evalue" else 0.0
    if filter_threshold < 0:
        raise ValueError("filter threshold must be >= 0")

    kept: dict[int, list[tuple[float, int]]] = {}
    for a, b, val in sim.entries:
        if a not in g1:
            raise KeyError(f"similarity id {a!r} is not a node of the first network")
        if b not in g2:
            raise KeyError(f"similarity id {b!r} is not a node of the second network")
        if sim.kind == "evalue" and val > filter_threshold:
            continue
        if sim.kind == "bitscore" and val < filter_threshold:
            continue
        # sort key: best first
        rank = val if sim.kind == "evalue" else -val
        kept.setdefault(g1.index(a), []).append((rank, g2.index(b), val))

    pi, pk, vals = [], [], []
    for i, lst in kept.items():
        lst.sort()
        if max_candidates is not None:
            lst = lst[:max_candidates]
        for _, k, val in lst:
            pi.append(i)
            pk.append(k)
            vals.append(val)
    if not pi:
        warnings.warn("candidate graph is empty; every alignment scores 0", stacklevel=2)
    vals = np.asarray(vals, dtype=float)
    if score_mode == "topology":
        c = np.zeros(len(vals))
        weight = 1.0
    else:
        top = vals.max() if vals.size else 0.0
        c = (1.0 - beta) * vals / top if top > 0 else np.zeros(len(vals))
        weight = float(beta)
    return AlignmentInstance(g1, g2, np.asarray(pi, dtype=np.int64), np.asarray(pk, dtype=np.int64), c, weight)


def enumerate_w_support(inst: AlignmentInstance) -> Iterator[WSupportEntry]:
    sup = inst.support
    for row in zip(sup["i"].tolist(), sup["k"].tolist(), sup["j"].tolist(), sup["l"].tolist(), sup["w"].tolist()):
        yield WSupportEntry(*row)


class Alignment:
    """A partial injective map from the nodes of ``g1`` to those of ``g2``.

    Stored as an integer array of partner indices, ``-1`` for unmapped
    nodes.  Injectivity is checked on construction; candidacy is checked
    against an instance by :func:`score_alignment`.
    """

    __slots__ = ("partner",)

    def __init__(self, partner: Iterable[int]):
        arr = np.array(list(partner) if not isinstance(partner, np.ndarray) else partner, dtype=np.int64)
        if arr.ndim != 1:
            raise InvalidAlignmentError("alignment must be one-dimensional")
        mapped = arr[arr >= 0]
        if (arr < -1).any():
            raise InvalidAlignmentError("partner indices must be >= -1")
        if np.unique(mapped).size != mapped.size:
            raise InvalidAlignmentError("alignment is not injective")
        arr.setflags(write=False)
        self.partner = arr

    @classmethod
    def empty(cls, n1: int) -> "Alignment":
        return cls(np.full(n1, -1, dtype=np.int64))

    @classmethod
    def from_pairs(cls, n1: int, pairs: Iterable[tuple[int, int]]) -> "Alignment":
        arr = np.full(n1, -1, dtype=np.int64)
        for i, k in pairs:
            if arr[i] != -1:
                raise InvalidAlignmentError(f"node {i} mapped twice")
            arr[i] = k
        return cls(arr)

    def pairs(self) -> list[tuple[int, int]]:
        idx = np.flatnonzero(self.partner >= 0)
        return list(zip(idx.tolist(), self.partner[idx].tolist()))

    def __len__(self):
        return int((self.partner >= 0).sum())

    def __getitem__(self, i):
        k = int(self.partner[i])
        return None if k < 0 else k

    def __eq__(self, other):
        return isinstance(other, Alignment) and np.array_equal(self.partner, other.partner)

    def __hash__(self):
        return hash(self.partner.tobytes())

    def __repr__(self):
        return f"Alignment({self.pairs()})"


def _check(inst: AlignmentInstance, a: Alignment) -> None:
    if a.partner.size != inst.n1:
        raise InvalidAlignmentError(f"alignment covers {a.partner.size} nodes, instance has {inst.n1}")
    for i, k in a.pairs():
        if (i, k) not in inst.pair_index:
            raise InvalidAlignmentError(f"pair ({i}, {k}) is not a candidate")


def _conserved(inst: AlignmentInstance, a: Alignment) -> int:
    e1 = inst.g1.edge_array()
    if not len(e1) or not inst.g2.m:
        return 0
    pa, pb = a.partner[e1[:, 0]], a.partner[e1[:, 1]]
    ok = (pa >= 0) & (pb >= 0)
    keys = pa[ok] * inst.n2 + pb[ok]
    return int(np.isin(keys, inst._e2_keys, assume_unique=False).sum())


def conserved_edges(inst: AlignmentInstance, a: Alignment) -> int:
    """Number of edges of ``g1`` whose image under ``a`` is an edge of ``g2``."""
    _check(inst, a)
    return _conserved(inst, a)


def score_alignment(inst: AlignmentInstance, a: Alignment, *, validate: bool = True) -> float:
    """Node scores of mapped pairs plus the unsplit weight of every conserved edge."""
    if validate:
        _check(inst, a)
    node = 0.0
    if inst.node_scores.any():
        node = float(sum(inst.node_scores[inst.pair_index[ik]] for ik in a.pairs()))
    if inst.edge_weight == 0:
        return node
    return node + inst.edge_weight * _conserved(inst, a)
