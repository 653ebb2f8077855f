"""Lagrangian decomposition of the linearised alignment ILP.

After splitting every quadratic variable ``y_ikjl`` (``i < j``) into two
copies and dualising the copy-equality constraints with multipliers
``lam[s]``, the bound ``Z_LD(lam)`` separates into one local matching
problem per candidate pair ``(i, k)`` and one global matching over the
candidate graph with weights ``c_ik + v_ik(lam)``.

Each local problem only involves the nonzero interaction entries touching
``(i, k)``.  Those "directed entries" are materialised once per instance in
:class:`LocalStructure` and reused at every evaluation.
"""

from __future__ import annotations

import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .instance import Alignment, AlignmentInstance, score_alignment
from .matching import _mwm_csr, _solve_pairs

__all__ = [
    "SolverInvariantError",
    "LocalStructure",
    "local_structure",
    "MultiplierStore",
    "LdEvaluation",
    "SlackBundle",
    "local_problem",
    "evaluate_ld",
    "compute_slacks",
    "subgradient",
    "SLACK_TOL",
]

SLACK_TOL = 1e-9


class SolverInvariantError(RuntimeError):
    """A dual certificate or bound relation that must hold was violated."""


def _rank_within(groups: np.ndarray, values: np.ndarray):
    """Dense rank of ``values`` inside each group; also the per-group counts and the distinct values."""
    if groups.size == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64)
    order = np.lexsort((values, groups))
    g, v = groups[order], values[order]
    new = np.ones(order.size, dtype=bool)
    new[1:] = (g[1:] != g[:-1]) | (v[1:] != v[:-1])
    distinct_idx = np.cumsum(new) - 1
    first_of_group = np.ones(order.size, dtype=bool)
    first_of_group[1:] = g[1:] != g[:-1]
    base = np.maximum.accumulate(np.where(first_of_group, distinct_idx, 0))
    ranks = np.empty(order.size, dtype=np.int64)
    ranks[order] = distinct_idx - base
    return ranks, g[new], v[new]


@dataclass(frozen=True, eq=False)
class LocalStructure:
    """Flat layout of the per-pair local alignment graphs of one instance.

    Support keys ``s`` are the nonzero interaction entries ``(i, k, j, l)``
    with ``i < j``.  Each key yields two directed entries: a forward one in
    the local problem of ``(i, k)`` with multiplier sign ``+1`` and a
    backward one in the local problem of ``(j, l)`` with sign ``-1``.
    """

    n_pairs: int
    n1: int
    n2: int
    pair_i: np.ndarray
    pair_k: np.ndarray
    c: np.ndarray
    key_i: np.ndarray
    key_k: np.ndarray
    key_j: np.ndarray
    key_l: np.ndarray
    key_w: np.ndarray
    fwd_pair: np.ndarray
    bwd_pair: np.ndarray
    fwd_entry: np.ndarray
    bwd_entry: np.ndarray
    e_pair: np.ndarray
    e_key: np.ndarray
    e_sign: np.ndarray
    e_row: np.ndarray
    e_col: np.ndarray
    eptr: np.ndarray
    rptr: np.ndarray
    cptr: np.ndarray
    row_node: np.ndarray
    col_node: np.ndarray
    g_indptr: np.ndarray

    @property
    def n_keys(self) -> int:
        return int(self.key_i.size)

    @property
    def n_entries(self) -> int:
        return int(self.e_key.size)

    @cached_property
    def key_index(self) -> dict[tuple[int, int, int, int], int]:
        return {key: s for s, key in enumerate(zip(self.key_i.tolist(), self.key_k.tolist(),
                                                   self.key_j.tolist(), self.key_l.tolist()))}

    def entry_weights(self, lam: np.ndarray) -> np.ndarray:
        """Split weight plus signed multiplier for every directed entry."""
        return 0.5 * self.key_w[self.e_key] + self.e_sign * lam[self.e_key]


_STRUCTURES: "weakref.WeakKeyDictionary[AlignmentInstance, LocalStructure]" = weakref.WeakKeyDictionary()


def local_structure(inst: AlignmentInstance) -> LocalStructure:
    ls = _STRUCTURES.get(inst)
    if ls is None:
        ls = _build_structure(inst)
        _STRUCTURES[inst] = ls
    return ls


def _build_structure(inst: AlignmentInstance) -> LocalStructure:
    n1, n2, P = inst.n1, inst.n2, inst.n_pairs
    sup = inst.support
    ki, kk, kj, kl, kw = sup["i"], sup["k"], sup["j"], sup["l"], sup["w"]
    S = ki.size
    codes = inst.pair_i * n2 + inst.pair_k
    fwd_pair = np.searchsorted(codes, ki * n2 + kk).astype(np.int64)
    bwd_pair = np.searchsorted(codes, kj * n2 + kl).astype(np.int64)

    src = np.concatenate([fwd_pair, bwd_pair])
    row_n = np.concatenate([kj, ki])
    col_n = np.concatenate([kl, kk])
    key = np.concatenate([np.arange(S), np.arange(S)]).astype(np.int64)
    sign = np.concatenate([np.ones(S), -np.ones(S)])
    order = np.lexsort((col_n, row_n, src))
    src, row_n, col_n, key, sign = src[order], row_n[order], col_n[order], key[order], sign[order]
    position = np.empty(2 * S, dtype=np.int64)
    position[order] = np.arange(2 * S)

    e_row, row_groups, row_node = _rank_within(src, row_n)
    e_col, col_groups, col_node = _rank_within(src, col_n)
    eptr = np.zeros(P + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=P), out=eptr[1:])
    rptr = np.zeros(P + 1, dtype=np.int64)
    np.cumsum(np.bincount(row_groups, minlength=P), out=rptr[1:])
    cptr = np.zeros(P + 1, dtype=np.int64)
    np.cumsum(np.bincount(col_groups, minlength=P), out=cptr[1:])
    g_indptr = np.zeros(n1 + 1, dtype=np.int64)
    np.cumsum(np.bincount(inst.pair_i, minlength=n1), out=g_indptr[1:])

    arrays = dict(
        pair_i=inst.pair_i, pair_k=inst.pair_k, c=inst.node_scores,
        key_i=ki, key_k=kk, key_j=kj, key_l=kl, key_w=kw,
        fwd_pair=fwd_pair, bwd_pair=bwd_pair,
        fwd_entry=position[:S].copy(), bwd_entry=position[S:].copy(),
        e_pair=src, e_key=key, e_sign=sign, e_row=e_row, e_col=e_col,
        eptr=eptr, rptr=rptr, cptr=cptr, row_node=row_node, col_node=col_node,
        g_indptr=g_indptr,
    )
    for arr in arrays.values():
        arr.setflags(write=False)
    return LocalStructure(n_pairs=P, n1=n1, n2=n2, **arrays)


class MultiplierStore:
    """Lagrange multipliers on the interaction support, zero by default.

    ``values[s]`` belongs to support key ``s`` in the order of
    :func:`gnalign.instance.enumerate_w_support`.
    """

    def __init__(self, inst: AlignmentInstance, values: np.ndarray | None = None):
        self._ls = local_structure(inst)
        if values is None:
            values = np.zeros(self._ls.n_keys)
        values = np.array(values, dtype=np.float64)
        if values.shape != (self._ls.n_keys,):
            raise ValueError(f"expected {self._ls.n_keys} multipliers, got shape {values.shape}")
        self.values = values

    @classmethod
    def zeros(cls, inst: AlignmentInstance) -> "MultiplierStore":
        return cls(inst)

    def __len__(self):
        return self.values.size

    def __getitem__(self, key: tuple[int, int, int, int]) -> float:
        s = self._ls.key_index.get(tuple(key))
        return 0.0 if s is None else float(self.values[s])

    def __setitem__(self, key: tuple[int, int, int, int], value: float):
        s = self._ls.key_index.get(tuple(key))
        if s is None:
            raise KeyError(f"{key} is not in the interaction support")
        self.values[s] = value

    def keys(self) -> list[tuple[int, int, int, int]]:
        return list(self._ls.key_index)

    def as_dict(self) -> dict[tuple[int, int, int, int], float]:
        return {k: float(self.values[s]) for k, s in self._ls.key_index.items() if self.values[s] != 0.0}

    def copy(self) -> "MultiplierStore":
        new = object.__new__(MultiplierStore)
        new._ls = self._ls
        new.values = self.values.copy()
        return new


def _as_array(lam, ls: LocalStructure) -> np.ndarray:
    if isinstance(lam, MultiplierStore):
        lam = lam.values
    if lam is None:
        return np.zeros(ls.n_keys)
    lam = np.asarray(lam, dtype=np.float64)
    if lam.shape != (ls.n_keys,):
        raise ValueError("multipliers do not match the instance support")
    return lam


@dataclass(frozen=True, eq=False)
class LdEvaluation:
    """Everything one evaluation of ``Z_LD(lam)`` produces.

    Per-pair arrays are indexed like the instance's candidate pairs,
    per-entry arrays like :class:`LocalStructure`'s directed entries.
    ``y`` is the quadratic part of the relaxed solution: a local choice
    counts only when its pair is selected by the global matching.
    """

    upper_bound: float
    lower_bound: float
    alignment: Alignment
    local_values: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    local_matched: np.ndarray
    x: np.ndarray
    entry_weights: np.ndarray = field(repr=False)
    structure: LocalStructure = field(repr=False)

    @cached_property
    def y(self) -> np.ndarray:
        return self.local_matched & self.x[self.structure.e_pair]

    def _pair(self, i, k) -> int:
        ls = self.structure
        code = i * ls.n2 + k
        codes = ls.pair_i * ls.n2 + ls.pair_k
        p = int(np.searchsorted(codes, code))
        if p >= ls.n_pairs or codes[p] != code:
            raise KeyError(f"({i}, {k}) is not a candidate pair")
        return p

    def local_value(self, i: int, k: int) -> float:
        return float(self.local_values[self._pair(i, k)])

    def local_duals(self, i: int, k: int) -> tuple[dict[int, float], dict[int, float]]:
        ls, p = self.structure, self._pair(i, k)
        r0, r1, c0, c1 = ls.rptr[p], ls.rptr[p + 1], ls.cptr[p], ls.cptr[p + 1]
        return (dict(zip(ls.row_node[r0:r1].tolist(), self.mu[r0:r1].tolist())),
                dict(zip(ls.col_node[c0:c1].tolist(), self.nu[c0:c1].tolist())))

    def y_choices(self, i: int, k: int) -> set[tuple[int, int]]:
        """Entries ``(j, l)`` picked by the local problem of ``(i, k)``."""
        ls, p = self.structure, self._pair(i, k)
        sel = np.flatnonzero(self.local_matched[ls.eptr[p]:ls.eptr[p + 1]]) + ls.eptr[p]
        return {(int(ls.row_node[ls.rptr[p] + ls.e_row[e]]), int(ls.col_node[ls.cptr[p] + ls.e_col[e]])) for e in sel}


_POOLS: dict[int, ThreadPoolExecutor] = {}


def _pool(threads: int) -> ThreadPoolExecutor:
    pool = _POOLS.get(threads)
    if pool is None:
        pool = _POOLS[threads] = ThreadPoolExecutor(max_workers=threads, thread_name_prefix="gnalign")
    return pool


def _solve_locals(ls: LocalStructure, ew: np.ndarray, threads: int):
    values = np.zeros(ls.n_pairs)
    mu = np.zeros(int(ls.rptr[-1]))
    nu = np.zeros(int(ls.cptr[-1]))
    matched = np.zeros(ls.n_entries, dtype=np.bool_)
    args = (ls.eptr, ls.e_row, ls.e_col, ew, ls.rptr, ls.cptr, values, mu, nu, matched)
    P = ls.n_pairs
    if threads <= 1 or P < 2 * threads:
        _solve_pairs(0, P, *args)
    else:
        # every pair writes only its own slots, so chunking cannot change results
        bounds = np.linspace(0, P, threads + 1).astype(np.int64)
        futures = [_pool(threads).submit(_solve_pairs, int(a), int(b), *args)
                   for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        for f in futures:
            f.result()
    return values, mu, nu, matched


def evaluate_ld(inst: AlignmentInstance, lam=None, threads: int = 1) -> LdEvaluation:
    """Solve all local problems and the global matching for multipliers ``lam``."""
    ls = local_structure(inst)
    lam = _as_array(lam, ls)
    ew = ls.entry_weights(lam)
    values, mu, nu, matched = _solve_locals(ls, ew, threads)

    gw = ls.c + values
    mate_l = np.full(ls.n1, -1, dtype=np.int64)
    mate_r = np.full(ls.n2, -1, dtype=np.int64)
    alpha = np.zeros(ls.n1)
    beta = np.zeros(ls.n2)
    ub = _mwm_csr(ls.n1, ls.n2, ls.g_indptr, ls.pair_k, gw, mate_l, mate_r, alpha, beta)
    x = mate_l[ls.pair_i] == ls.pair_k
    alignment = Alignment(mate_l)
    lb = score_alignment(inst, alignment, validate=False)
    return LdEvaluation(
        upper_bound=float(ub), lower_bound=lb, alignment=alignment, local_values=values,
        alpha=alpha, beta=beta, mu=mu, nu=nu, local_matched=matched, x=x,
        entry_weights=ew, structure=ls,
    )


def local_problem(inst: AlignmentInstance, lam, i: int, k: int):
    """Solve the single local problem of pair ``(i, k)``.

    Returns ``(value, (mu, nu), matched)`` with the duals as dicts keyed by
    node index and ``matched`` a set of ``(j, l)``.
    """
    if (i, k) not in inst.pair_index:
        raise KeyError(f"({i}, {k}) is not a candidate pair")
    ls = local_structure(inst)
    lam = _as_array(lam, ls)
    p = inst.pair_index[(i, k)]
    e0, e1 = int(ls.eptr[p]), int(ls.eptr[p + 1])
    r0, r1, c0, c1 = int(ls.rptr[p]), int(ls.rptr[p + 1]), int(ls.cptr[p]), int(ls.cptr[p + 1])
    ew = ls.entry_weights(lam)[e0:e1]
    nr, nc = r1 - r0, c1 - c0
    indptr = np.zeros(nr + 1, dtype=np.int64)
    np.cumsum(np.bincount(ls.e_row[e0:e1], minlength=nr), out=indptr[1:])
    cols = np.ascontiguousarray(ls.e_col[e0:e1])
    mate_l = np.full(nr, -1, dtype=np.int64)
    mate_r = np.full(nc, -1, dtype=np.int64)
    mu = np.zeros(nr)
    nu = np.zeros(nc)
    value = _mwm_csr(nr, nc, indptr, cols, ew, mate_l, mate_r, mu, nu)
    rows, colsn = ls.row_node[r0:r1], ls.col_node[c0:c1]
    matched = {(int(rows[r]), int(colsn[c])) for r, c in enumerate(mate_l.tolist()) if c >= 0}
    return float(value), (dict(zip(rows.tolist(), mu.tolist())), dict(zip(colsn.tolist(), nu.tolist()))), matched


@dataclass(frozen=True, eq=False)
class SlackBundle:
    """Dual slacks: ``pi`` per candidate pair, ``gamma`` per directed entry."""

    pi: np.ndarray
    gamma: np.ndarray
    structure: LocalStructure = field(repr=False)

    def pi_map(self) -> dict[tuple[int, int], float]:
        ls = self.structure
        return dict(zip(zip(ls.pair_i.tolist(), ls.pair_k.tolist()), self.pi.tolist()))

    def gamma_map(self) -> dict[tuple[int, int, int, int], float]:
        ls = self.structure
        out = {}
        for e in range(ls.n_entries):
            p = ls.e_pair[e]
            key = (int(ls.pair_i[p]), int(ls.pair_k[p]),
                   int(ls.row_node[ls.rptr[p] + ls.e_row[e]]), int(ls.col_node[ls.cptr[p] + ls.e_col[e]]))
            out[key] = float(self.gamma[e])
        return out


def compute_slacks(inst: AlignmentInstance, lam, ev: LdEvaluation, tol: float = SLACK_TOL) -> SlackBundle:
    """Slacks of the global dual (``pi``) and the local duals (``gamma``).

    ``gamma`` for an entry of problem ``(i, k)`` is ``mu_j + nu_l`` minus
    that entry's weight (split weight, plus the multiplier for ``j > i``,
    minus it for ``j < i``).  Values within ``tol`` below zero are clamped;
    anything lower means the certificate is broken.
    """
    ls = local_structure(inst)
    lam = _as_array(lam, ls)
    ew = ls.entry_weights(lam)
    pi = ev.alpha[ls.pair_i] + ev.beta[ls.pair_k] - ls.c - ev.local_values
    gamma = ev.mu[ls.rptr[ls.e_pair] + ls.e_row] + ev.nu[ls.cptr[ls.e_pair] + ls.e_col] - ew
    for name, arr in (("pi", pi), ("gamma", gamma)):
        if arr.size:
            lowest = arr.min()
            if lowest < -tol * (1.0 + np.abs(arr).max()):
                raise SolverInvariantError(f"negative {name} slack {lowest:.3e}: dual certificate is infeasible")
    np.maximum(pi, 0.0, out=pi)
    np.maximum(gamma, 0.0, out=gamma)
    return SlackBundle(pi, gamma, ls)


def subgradient(ev: LdEvaluation) -> np.ndarray:
    """``y_ikjl - y_jlik`` for every support key, as an int8 array."""
    ls = ev.structure
    y = ev.y
    return y[ls.fwd_entry].astype(np.int8) - y[ls.bwd_entry].astype(np.int8)
