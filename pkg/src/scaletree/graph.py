"""Weighted-graph primitives: Kruskal MST, connectivity, tree splitting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple

from .errors import InputError, ParameterError


class Edge(NamedTuple):
    i: int
    j: int
    w: float


@dataclass
class EdgeSet:
    """Undirected weighted edges over a declared set of member nodes."""

    members: tuple[int, ...]
    edges: tuple[Edge, ...] = field(default_factory=tuple)

    def __post_init__(self):
        self.members = tuple(sorted(set(int(m) for m in self.members)))
        mem = set(self.members)
        seen = set()
        canon = []
        for e in self.edges:
            i, j, w = int(e[0]), int(e[1]), float(e[2])
            if i == j:
                raise InputError(f"self edge at node {i}")
            if i > j:
                i, j = j, i
            if (i, j) in seen:
                raise InputError(f"duplicate edge ({i}, {j})")
            if i not in mem or j not in mem:
                raise InputError(f"edge ({i}, {j}) leaves the member set")
            seen.add((i, j))
            canon.append(Edge(i, j, w))
        self.edges = tuple(canon)

    @property
    def total_weight(self) -> float:
        return float(sum(e.w for e in self.edges))


class DisjointSet:
    """Union-find with path compression and union by size."""

    def __init__(self, items: Iterable[int]):
        self.parent = {x: x for x in items}
        self.size = {x: 1 for x in self.parent}
        self.n_components = len(self.parent)

    def find(self, x: int) -> int:
        p = self.parent
        root = x
        while p[root] != root:
            root = p[root]
        while p[x] != root:
            p[x], x = root, p[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.n_components -= 1
        return True


def minimum_spanning_tree(members: Iterable[int], weight: Callable[[int, int], float]) -> EdgeSet:
    """Kruskal MST of the complete graph on ``members``.

    ``weight(i, j)`` is called once per unordered pair.  Edges are processed
    in (weight, i, j) order, which makes tie-breaking deterministic.
    """
    nodes = sorted(set(int(m) for m in members))
    if not nodes:
        raise ParameterError("member set must be non-empty")
    if len(nodes) == 1:
        return EdgeSet(tuple(nodes), ())
    cand = []
    for a in range(len(nodes)):
        for b in range(a + 1, len(nodes)):
            i, j = nodes[a], nodes[b]
            w = float(weight(i, j))
            if not math.isfinite(w):
                raise InputError(f"non-finite weight on edge ({i}, {j})")
            cand.append((w, i, j))
    cand.sort()
    ds = DisjointSet(nodes)
    chosen = []
    need = len(nodes) - 1
    for w, i, j in cand:
        if ds.union(i, j):
            chosen.append(Edge(i, j, w))
            if len(chosen) == need:
                break
    return EdgeSet(tuple(nodes), tuple(chosen))


def is_connected(members: Iterable[int], edges: EdgeSet | Iterable[tuple]) -> bool:
    """True iff the undirected graph on ``members`` is connected.

    A singleton is connected; the empty member set is connected by convention.
    """
    nodes = sorted(set(int(m) for m in members))
    if len(nodes) <= 1:
        return True
    edge_iter = edges.edges if isinstance(edges, EdgeSet) else edges
    mem = set(nodes)
    ds = DisjointSet(nodes)
    for e in edge_iter:
        i, j = int(e[0]), int(e[1])
        if i not in mem or j not in mem:
            raise InputError(f"edge ({i}, {j}) leaves the member set")
        ds.union(i, j)
    return ds.n_components == 1


def split_heaviest(tree: EdgeSet, members: Iterable[int], m: int) -> dict[int, int]:
    """Cut the ``m - 1`` heaviest tree edges and label the components 1..m.

    Components are numbered in order of their smallest contained node.  Ties
    among edge weights are broken by the (weight, i, j) ordering.
    """
    nodes = sorted(set(int(x) for x in members))
    if not 1 <= m <= len(nodes):
        raise ParameterError(f"cluster count m={m} out of range 1..{len(nodes)}")
    if tuple(nodes) != tree.members or len(tree.edges) != len(nodes) - 1:
        raise InputError("input is not a spanning tree of the member set")
    if not is_connected(nodes, tree):
        raise InputError("input is not a spanning tree of the member set")
    ranked = sorted(tree.edges, key=lambda e: (e.w, e.i, e.j))
    kept = ranked[: len(ranked) - (m - 1)] if m > 1 else ranked
    ds = DisjointSet(nodes)
    for e in kept:
        ds.union(e.i, e.j)
    roots = {}
    for x in nodes:
        r = ds.find(x)
        roots.setdefault(r, x)
    order = sorted(roots.values())
    rank = {rep: k + 1 for k, rep in enumerate(order)}
    return {x: rank[roots[ds.find(x)]] for x in nodes}
