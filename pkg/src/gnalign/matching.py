"""Maximum-weight bipartite matching with a nonnegative dual certificate.

The solver is the successive-shortest-path form of the Hungarian method.
Left vertices are inserted one at a time; for each new vertex ``s`` a
Dijkstra search over reduced costs ``u[i] + v[j] - w[i, j]`` grows an
alternating tree from ``s``.  The search ends at whichever comes first:

* a free right vertex (augment; the matching grows by one edge), or
* a tree vertex whose dual would drop below zero (swap along the
  alternating path so that this vertex becomes free with dual 0).

Duals stay nonnegative throughout, matched edges are tight, and free
vertices end with dual 0, so on return ``sum(u) + sum(v)`` equals the
matching weight.  That is exactly the certificate the Lagrangian dual
descent needs.

The inner loops are compiled with numba; ``_solve_pairs`` solves a batch of
small problems laid out in flat arrays without returning to Python.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

__all__ = ["BipartiteProblem", "MatchingResult", "solve_mwm", "verify_certificate"]


@njit(cache=True, nogil=True)
def _heap_push(keys, ids, size, key, ident):
    pos = size
    while pos > 0:
        parent = (pos - 1) >> 1
        pk = keys[parent]
        if pk < key or (pk == key and ids[parent] < ident):
            break
        keys[pos] = pk
        ids[pos] = ids[parent]
        pos = parent
    keys[pos] = key
    ids[pos] = ident
    return size + 1


@njit(cache=True, nogil=True)
def _heap_pop(keys, ids, size):
    top_key = keys[0]
    top_id = ids[0]
    size -= 1
    if size > 0:
        key = keys[size]
        ident = ids[size]
        pos = 0
        while True:
            child = 2 * pos + 1
            if child >= size:
                break
            other = child + 1
            if other < size and (keys[other] < keys[child]
                                 or (keys[other] == keys[child] and ids[other] < ids[child])):
                child = other
            ck = keys[child]
            if key < ck or (key == ck and ident < ids[child]):
                break
            keys[pos] = ck
            ids[pos] = ids[child]
            pos = child
        keys[pos] = key
        ids[pos] = ident
    return top_key, top_id, size


@njit(cache=True, nogil=True)
def _augment(j, s, pred_r, mate_l, mate_r):
    # flip the alternating path that ends at right vertex j and starts at s
    while True:
        i = pred_r[j]
        nxt = mate_l[i]
        mate_l[i] = j
        mate_r[j] = i
        if i == s:
            break
        j = nxt


@njit(cache=True, nogil=True)
def _mwm_csr(n_left, n_right, indptr, cols, w, mate_l, mate_r, u, v):
    """Solve in place.  ``mate_*`` must be -1 and ``u``, ``v`` zero on entry.

    Edges with weight <= 0 are ignored.  Returns the matching weight.
    """
    nnz = indptr[n_left]
    inf = np.inf
    dist_r = np.full(n_right, inf)
    final_r = np.zeros(n_right, dtype=np.bool_)
    pred_r = np.full(n_right, -1, dtype=np.int64)
    dist_l = np.zeros(n_left)
    scanned = np.empty(n_left, dtype=np.int64)
    finalized = np.empty(n_right, dtype=np.int64)
    touched = np.empty(n_right, dtype=np.int64)
    cap = nnz + n_left + 1
    hkeys = np.empty(cap)
    hids = np.empty(cap, dtype=np.int64)

    for s in range(n_left):
        best = 0.0
        for e in range(indptr[s], indptr[s + 1]):
            if w[e] > 0.0:
                t = w[e] - v[cols[e]]
                if t > best:
                    best = t
        if best <= 0.0:
            u[s] = 0.0
            continue
        u[s] = best

        nscan = 0
        nfin = 0
        ntouch = 0
        hsize = 0
        # left events use ids [0, n_left) so they win ties against right vertices
        dist_l[s] = 0.0
        scanned[nscan] = s
        nscan += 1
        hsize = _heap_push(hkeys, hids, hsize, u[s], s)
        for e in range(indptr[s], indptr[s + 1]):
            if w[e] <= 0.0:
                continue
            j = cols[e]
            red = u[s] + v[j] - w[e]
            if red < 0.0:
                red = 0.0
            if red < dist_r[j]:
                if dist_r[j] == inf:
                    touched[ntouch] = j
                    ntouch += 1
                dist_r[j] = red
                pred_r[j] = s
                hsize = _heap_push(hkeys, hids, hsize, red, n_left + j)

        end_right = -1
        end_left = -1
        delta = 0.0
        while hsize > 0:
            key, ident, hsize = _heap_pop(hkeys, hids, hsize)
            if ident < n_left:
                end_left = ident
                delta = key
                break
            j = ident - n_left
            if final_r[j] or key > dist_r[j]:
                continue
            final_r[j] = True
            finalized[nfin] = j
            nfin += 1
            i = mate_r[j]
            if i < 0:
                end_right = j
                delta = key
                break
            dist_l[i] = key
            scanned[nscan] = i
            nscan += 1
            hsize = _heap_push(hkeys, hids, hsize, key + u[i], i)
            for e in range(indptr[i], indptr[i + 1]):
                if w[e] <= 0.0:
                    continue
                jj = cols[e]
                if final_r[jj]:
                    continue
                red = u[i] + v[jj] - w[e]
                if red < 0.0:
                    red = 0.0
                nd = key + red
                if nd < dist_r[jj]:
                    if dist_r[jj] == inf:
                        touched[ntouch] = jj
                        ntouch += 1
                    dist_r[jj] = nd
                    pred_r[jj] = i
                    hsize = _heap_push(hkeys, hids, hsize, nd, n_left + jj)

        for t in range(nscan):
            i = scanned[t]
            u[i] -= delta - dist_l[i]
            if u[i] < 0.0:
                u[i] = 0.0
        for t in range(nfin):
            j = finalized[t]
            if dist_r[j] < delta:
                v[j] += delta - dist_r[j]

        if end_right >= 0:
            _augment(end_right, s, pred_r, mate_l, mate_r)
        elif end_left == s:
            u[s] = 0.0
        else:
            j = mate_l[end_left]
            mate_l[end_left] = -1
            u[end_left] = 0.0
            _augment(j, s, pred_r, mate_l, mate_r)

        for t in range(ntouch):
            dist_r[touched[t]] = inf
            pred_r[touched[t]] = -1
        for t in range(nfin):
            final_r[finalized[t]] = False

    value = 0.0
    for i in range(n_left):
        j = mate_l[i]
        if j >= 0:
            for e in range(indptr[i], indptr[i + 1]):
                if cols[e] == j:
                    value += w[e]
                    break
    return value


@njit(cache=True, nogil=True)
def _solve_pairs(p0, p1, eptr, erow, ecol, ew, rptr, cptr, values, mu, nu, matched):
    """Solve the local problems ``p0 <= p < p1`` of a flat batch.

    Entries of problem ``p`` live in ``[eptr[p], eptr[p+1])`` sorted by
    (row, col); local rows/cols of ``p`` map to ``mu[rptr[p]:]`` and
    ``nu[cptr[p]:]``.
    """
    for p in range(p0, p1):
        e0 = eptr[p]
        e1 = eptr[p + 1]
        nr = rptr[p + 1] - rptr[p]
        nc = cptr[p + 1] - cptr[p]
        for e in range(e0, e1):
            matched[e] = False
        for r in range(nr):
            mu[rptr[p] + r] = 0.0
        for c in range(nc):
            nu[cptr[p] + c] = 0.0
        if e0 == e1:
            values[p] = 0.0
            continue
        if e1 - e0 == 1:
            wt = ew[e0]
            if wt > 0.0:
                mu[rptr[p] + erow[e0]] = wt
                matched[e0] = True
                values[p] = wt
            else:
                values[p] = 0.0
            continue
        indptr = np.zeros(nr + 1, dtype=np.int64)
        for e in range(e0, e1):
            indptr[erow[e] + 1] += 1
        for r in range(nr):
            indptr[r + 1] += indptr[r]
        mate_l = np.full(nr, -1, dtype=np.int64)
        mate_r = np.full(nc, -1, dtype=np.int64)
        u = np.zeros(nr)
        v = np.zeros(nc)
        values[p] = _mwm_csr(nr, nc, indptr, ecol[e0:e1], ew[e0:e1], mate_l, mate_r, u, v)
        for r in range(nr):
            mu[rptr[p] + r] = u[r]
            j = mate_l[r]
            if j >= 0:
                for e in range(e0 + indptr[r], e0 + indptr[r + 1]):
                    if ecol[e] == j:
                        matched[e] = True
                        break
        for c in range(nc):
            nu[cptr[p] + c] = v[c]


def solve_csr(n_left: int, n_right: int, indptr: np.ndarray, cols: np.ndarray, w: np.ndarray):
    """Low-level entry: CSR adjacency of the left side, columns sorted per row.

    Returns ``(value, mate_left, mate_right, duals_left, duals_right)``.
    """
    mate_l = np.full(n_left, -1, dtype=np.int64)
    mate_r = np.full(n_right, -1, dtype=np.int64)
    u = np.zeros(n_left)
    v = np.zeros(n_right)
    value = _mwm_csr(n_left, n_right, indptr, cols, w, mate_l, mate_r, u, v)
    return value, mate_l, mate_r, u, v


@dataclass(frozen=True)
class BipartiteProblem:
    left_size: int
    right_size: int
    edges: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        edges = tuple((int(a), int(b), float(c)) for a, b, c in self.edges)
        seen = set()
        for a, b, c in edges:
            if not (0 <= a < self.left_size and 0 <= b < self.right_size):
                raise ValueError(f"edge ({a}, {b}) out of range")
            if (a, b) in seen:
                raise ValueError(f"duplicate edge ({a}, {b})")
            if not math.isfinite(c):
                raise ValueError(f"non-finite weight on edge ({a}, {b})")
            seen.add((a, b))
        object.__setattr__(self, "edges", edges)

    def to_csr(self):
        order = sorted(range(len(self.edges)), key=lambda t: self.edges[t][:2])
        indptr = np.zeros(self.left_size + 1, dtype=np.int64)
        cols = np.empty(len(order), dtype=np.int64)
        w = np.empty(len(order))
        for pos, t in enumerate(order):
            a, b, c = self.edges[t]
            indptr[a + 1] += 1
            cols[pos] = b
            w[pos] = c
        np.cumsum(indptr, out=indptr)
        return indptr, cols, w


@dataclass(frozen=True)
class MatchingResult:
    matched: tuple[tuple[int, int], ...]
    value: float
    duals_left: np.ndarray = field(repr=False)
    duals_right: np.ndarray = field(repr=False)

    @property
    def dual_value(self) -> float:
        return float(self.duals_left.sum() + self.duals_right.sum())


def solve_mwm(p: BipartiteProblem) -> MatchingResult:
    """Maximum-weight (not necessarily perfect) matching with optimal duals.

    Nonpositive edges never enter the matching.  Ties are broken
    deterministically by vertex index.
    """
    indptr, cols, w = p.to_csr()
    value, mate_l, _, u, v = solve_csr(p.left_size, p.right_size, indptr, cols, w)
    matched = tuple((i, int(j)) for i, j in enumerate(mate_l.tolist()) if j >= 0)
    return MatchingResult(matched, float(value), u, v)


def verify_certificate(p: BipartiteProblem, r: MatchingResult, tol: float = 1e-9) -> bool:
    """Check matching validity, dual feasibility, strong duality and complementary slackness."""
    weight = {(a, b): c for a, b, c in p.edges}
    dl = np.asarray(r.duals_left, dtype=float)
    dr = np.asarray(r.duals_right, dtype=float)
    if dl.shape != (p.left_size,) or dr.shape != (p.right_size,):
        return False
    if (dl < -tol).any() or (dr < -tol).any():
        return False
    used_l, used_r = set(), set()
    total = 0.0
    for a, b in r.matched:
        if (a, b) not in weight or a in used_l or b in used_r:
            return False
        used_l.add(a)
        used_r.add(b)
        total += weight[(a, b)]
        # complementary slackness: matched edges are tight
        if abs(dl[a] + dr[b] - weight[(a, b)]) > tol * (1 + abs(weight[(a, b)])):
            return False
    scale = 1.0 + abs(total)
    if abs(total - r.value) > tol * scale:
        return False
    for (a, b), c in weight.items():
        if dl[a] + dr[b] < c - tol * (1 + abs(c)):
            return False
    if abs(dl.sum() + dr.sum() - total) > tol * scale:
        return False
    # complementary slackness: positive duals only on matched vertices
    if any(dl[a] > tol for a in range(p.left_size) if a not in used_l):
        return False
    if any(dr[b] > tol for b in range(p.right_size) if b not in used_r):
        return False
    return True
