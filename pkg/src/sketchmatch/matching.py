"""Exact and approximate matchings on explicitly stored graphs, plus validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from numba import njit

DP_LIMIT = 24
BLOSSOM_LIMIT = 4096


def _edge_array(edges) -> np.ndarray:
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    return arr.reshape(-1, 2)


def _csr(n: int, e: np.ndarray):
    both = np.concatenate([e, e[:, ::-1]])
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, both[:, 0] + 1, 1)
    return np.cumsum(indptr), np.ascontiguousarray(both[:, 1])


@njit(cache=True)
def _lca(a, b, base, match, parent, seen):
    seen[:] = False
    while True:
        a = base[a]
        seen[a] = True
        if match[a] == -1:
            break
        a = parent[match[a]]
    while True:
        b = base[b]
        if seen[b]:
            return b
        b = parent[match[b]]


@njit(cache=True)
def _mark(v, b, child, base, match, parent, blossom):
    while base[v] != b:
        blossom[base[v]] = True
        blossom[base[match[v]]] = True
        parent[v] = child
        child = match[v]
        v = parent[match[v]]


@njit(cache=True)
def _find_path(root, indptr, nbr, match, parent, base, used, blossom, seen, queue):
    n = match.shape[0]
    for i in range(n):
        used[i] = False
        parent[i] = -1
        base[i] = i
    used[root] = True
    head, tail = 0, 1
    queue[0] = root
    while head < tail:
        v = queue[head]
        head += 1
        for k in range(indptr[v], indptr[v + 1]):
            to = nbr[k]
            if base[v] == base[to] or match[v] == to:
                continue
            if to == root or (match[to] != -1 and parent[match[to]] != -1):
                cb = _lca(v, to, base, match, parent, seen)
                blossom[:] = False
                _mark(v, cb, to, base, match, parent, blossom)
                _mark(to, cb, v, base, match, parent, blossom)
                for i in range(n):
                    if blossom[base[i]]:
                        base[i] = cb
                        if not used[i]:
                            used[i] = True
                            queue[tail] = i
                            tail += 1
            elif parent[to] == -1:
                parent[to] = v
                if match[to] == -1:
                    return to
                used[match[to]] = True
                queue[tail] = match[to]
                tail += 1
    return -1


@njit(cache=True)
def _blossom(indptr, nbr, match):
    n = match.shape[0]
    parent = np.empty(n, dtype=np.int64)
    base = np.empty(n, dtype=np.int64)
    used = np.zeros(n, dtype=np.bool_)
    blossom = np.zeros(n, dtype=np.bool_)
    seen = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    for root in range(n):
        if match[root] != -1 or indptr[root] == indptr[root + 1]:
            continue
        v = _find_path(root, indptr, nbr, match, parent, base, used, blossom, seen, queue)
        while v != -1:
            pv = parent[v]
            nxt = match[pv]
            match[v] = pv
            match[pv] = v
            v = nxt
    return match


@njit(cache=True)
def _greedy(n, e):
    match = np.full(n, -1, dtype=np.int64)
    for i in range(e.shape[0]):
        u, v = e[i, 0], e[i, 1]
        if u != v and match[u] == -1 and match[v] == -1:
            match[u] = v
            match[v] = u
    return match


def _pairs(match: np.ndarray, ids: np.ndarray) -> list[tuple[int, int]]:
    us = np.flatnonzero(match > np.arange(match.size))
    return sorted((int(ids[u]), int(ids[match[u]])) for u in us)


def _compress(edges):
    e = _edge_array(edges)
    e = e[e[:, 0] != e[:, 1]]
    ids, inv = np.unique(e, return_inverse=True)
    return ids, inv.reshape(-1, 2).astype(np.int64)


def max_matching(edges) -> list[tuple[int, int]]:
    """Maximum-cardinality matching (Edmonds' blossom algorithm, greedy warm start)."""
    ids, e = _compress(edges)
    if not e.size:
        return []
    indptr, nbr = _csr(ids.size, e)
    match = _blossom(indptr, nbr, _greedy(ids.size, e))
    return _pairs(match, ids)


max_matching_small = max_matching


def greedy_matching(edges) -> list[tuple[int, int]]:
    """Maximal matching in the given edge order."""
    ids, e = _compress(edges)
    if not e.size:
        return []
    return _pairs(_greedy(ids.size, e), ids)


@njit(cache=True)
def _dp(n, adj):
    best = np.zeros(1 << n, dtype=np.int8)
    for mask in range(1, 1 << n):
        i = 0
        while not (mask >> i) & 1:
            i += 1
        rest = mask & ~(1 << i)
        b = best[rest]
        cand = adj[i] & rest
        j = 0
        while cand:
            if cand & 1:
                c = best[rest & ~(1 << j)] + 1
                if c > b:
                    b = c
            cand >>= 1
            j += 1
        best[mask] = b
    return best[(1 << n) - 1]


def dp_matching_size(edges) -> int:
    """Exact matching number by bitmask DP over vertex subsets (at most 24 vertices)."""
    ids, e = _compress(edges)
    if ids.size > DP_LIMIT:
        raise ValueError(f"bitmask DP limited to {DP_LIMIT} vertices, got {ids.size}")
    adj = np.zeros(max(ids.size, 1), dtype=np.int64)
    for u, v in e.tolist():
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    return int(_dp(ids.size, adj)) if ids.size else 0


@dataclass(frozen=True)
class OracleResult:
    lower: int
    upper: int
    method: str
    matching: tuple[tuple[int, int], ...] = ()

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    @property
    def value(self) -> int:
        return self.lower


def matching_oracle(edges) -> OracleResult:
    """Exact matching number where affordable, otherwise the bracket [|greedy|, 2|greedy|]."""
    ids, _ = _compress(edges)
    if ids.size <= DP_LIMIT:
        mu = dp_matching_size(edges)
        return OracleResult(mu, mu, "dp")
    if ids.size <= BLOSSOM_LIMIT:
        m = max_matching(edges)
        return OracleResult(len(m), len(m), "blossom", tuple(m))
    g = greedy_matching(edges)
    return OracleResult(len(g), 2 * len(g), "greedy", tuple(g))


@dataclass
class Verdict:
    disjoint: bool
    subset: bool
    repeated_vertices: list[int] = field(default_factory=list)
    fabricated: list[tuple[int, int]] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.disjoint and self.subset

    def as_dict(self) -> dict:
        return {"valid": self.valid, "disjoint": self.disjoint, "subset": self.subset,
                "repeated_vertices": self.repeated_vertices,
                "fabricated_edges": [list(e) for e in self.fabricated]}


def validate_matching(M: Iterable[tuple[int, int]], edges: Iterable[tuple[int, int]]) -> Verdict:
    """Vertex-disjointness and M ⊆ E, naming every offending vertex and edge."""
    E = {(min(u, v), max(u, v)) for u, v in edges}
    seen: set[int] = set()
    repeated: list[int] = []
    fabricated: list[tuple[int, int]] = []
    for u, v in M:
        u, v = int(u), int(v)
        for w in (u, v):
            if w in seen and w not in repeated:
                repeated.append(w)
            seen.add(w)
        if (min(u, v), max(u, v)) not in E:
            fabricated.append((u, v))
    return Verdict(not repeated, not fabricated, repeated, fabricated)
