"""Sweep engines used by the fit loop.

Both engines hold the exact per-class MAP subgraphs for the current labeling
and evaluate candidate single-point moves without rebuilding everything.
Tree updates reuse two standard exact identities: the MST after inserting a
vertex lives inside (old tree + the new vertex's star), and the MST after
deleting one lives inside (surviving tree edges + one cheapest edge per
component pair).  Totals therefore match a from-scratch Kruskal run; only
tie-broken edge identities may differ.
"""

from __future__ import annotations

import numpy as np


class _Tree:
    __slots__ = ("ei", "ej", "ew", "total")

    def __init__(self, ei, ej, ew):
        self.ei = np.asarray(ei, dtype=np.int64)
        self.ej = np.asarray(ej, dtype=np.int64)
        self.ew = np.asarray(ew, dtype=float)
        self.total = float(self.ew.sum()) if self.ew.size else 0.0


_EMPTY_TREE = _Tree([], [], [])


def _kruskal_arrays(ci, cj, cw, nodes):
    """MST over candidate edges with global endpoints drawn from ``nodes``."""
    n = nodes.size
    if n <= 1 or ci.size == 0:
        return _EMPTY_TREE
    order = np.lexsort((cj, ci, cw))
    li = np.searchsorted(nodes, ci[order]).tolist()
    lj = np.searchsorted(nodes, cj[order]).tolist()
    ws = cw[order].tolist()
    gi = ci[order].tolist()
    gj = cj[order].tolist()
    parent = list(range(n))
    need = n - 1
    out_i, out_j, out_w = [], [], []
    for idx in range(len(ws)):
        a = li[idx]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = lj[idx]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a == b:
            continue
        parent[b] = a
        out_i.append(gi[idx])
        out_j.append(gj[idx])
        out_w.append(ws[idx])
        if len(out_i) == need:
            break
    return _Tree(out_i, out_j, out_w)


def _kruskal_full(members, w):
    n = members.size
    if n <= 1:
        return _EMPTY_TREE
    sub = w[np.ix_(members, members)]
    iu, ju = np.triu_indices(n, 1)
    return _kruskal_arrays(members[iu], members[ju], sub[iu, ju], members)


def _mst_insert(tree, members, x, w):
    """MST of the class after adding point ``x``; ``members`` excludes x."""
    if members.size == 0:
        return _EMPTY_TREE
    star_i = np.minimum(members, x)
    star_j = np.maximum(members, x)
    star_w = w[x, members]
    ci = np.concatenate([tree.ei, star_i])
    cj = np.concatenate([tree.ej, star_j])
    cw = np.concatenate([tree.ew, star_w])
    nodes = np.sort(np.append(members, x))
    return _kruskal_arrays(ci, cj, cw, nodes)


def _mst_delete(tree, members, x, w):
    """MST of the class after removing point ``x``; ``members`` includes x."""
    rem = members[members != x]
    if rem.size <= 1:
        return _EMPTY_TREE
    mask = (tree.ei == x) | (tree.ej == x)
    kept_i, kept_j, kept_w = tree.ei[~mask], tree.ej[~mask], tree.ew[~mask]
    degree = int(mask.sum())
    if degree <= 1:
        return _Tree(kept_i, kept_j, kept_w)
    # Components of the surviving forest, then cheapest reconnecting edges.
    pos = {int(g): p for p, g in enumerate(rem)}
    parent = list(range(rem.size))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for gi, gj in zip(kept_i.tolist(), kept_j.tolist()):
        ra, rb = find(pos[gi]), find(pos[gj])
        if ra != rb:
            parent[rb] = ra
    comp_of = {}
    for p in range(rem.size):
        comp_of.setdefault(find(p), []).append(p)
    comps = [rem[np.asarray(v)] for v in comp_of.values()]
    cand_i, cand_j, cand_w = [], [], []
    for a in range(len(comps)):
        for b in range(a + 1, len(comps)):
            ca, cb = comps[a], comps[b]
            block = w[np.ix_(ca, cb)]
            flat = int(np.argmin(block))
            gi = int(ca[flat // cb.size])
            gj = int(cb[flat % cb.size])
            cand_i.append(min(gi, gj))
            cand_j.append(max(gi, gj))
            cand_w.append(float(block.flat[flat]))
    ci = np.concatenate([kept_i, np.asarray(cand_i, dtype=np.int64)])
    cj = np.concatenate([kept_j, np.asarray(cand_j, dtype=np.int64)])
    cw = np.concatenate([kept_w, np.asarray(cand_w)])
    return _kruskal_arrays(ci, cj, cw, rem)


class ConnectedEngine:
    """Per-class MSTs under the connected prior."""

    def __init__(self, labels, n_classes, weights):
        self.labels = np.asarray(labels, dtype=int).copy()
        self.n_classes = n_classes
        self.weights = weights
        self.members = {c: np.sort(np.nonzero(self.labels == c)[0])
                        for c in range(1, n_classes + 1)}
        self.trees = {}
        self._rebuild_trees()

    def _rebuild_trees(self):
        for c in range(1, self.n_classes + 1):
            self.trees[c] = _kruskal_full(self.members[c], self.weights[c - 1])

    def rebuild(self, weights):
        self.weights = weights
        self._rebuild_trees()

    def score(self) -> float:
        return -sum(t.total for t in self.trees.values())

    def try_move(self, i):
        """Best strict improvement for point ``i``, or None to stay."""
        a = int(self.labels[i])
        base = self.score()
        del_tree = _mst_delete(self.trees[a], self.members[a], i, self.weights[a - 1])
        best = None
        best_score = base
        for cand in range(1, self.n_classes + 1):
            if cand == a:
                continue
            ins = _mst_insert(self.trees[cand], self.members[cand], i,
                              self.weights[cand - 1])
            s = (base + self.trees[a].total + self.trees[cand].total
                 - del_tree.total - ins.total)
            if s > best_score:
                best = (cand, s, (del_tree, ins))
                best_score = s
        if best is None:
            return None
        cand, s, (dt, it) = best
        return cand, s, (dt, it)

    def apply_move(self, i, target, payload):
        a = int(self.labels[i])
        del_tree, ins_tree = payload
        self.labels[i] = target
        ma = self.members[a]
        self.members[a] = ma[ma != i]
        mt = self.members[target]
        self.members[target] = np.insert(mt, np.searchsorted(mt, i), i)
        self.trees[a] = del_tree
        self.trees[target] = ins_tree

    def class_edge_values(self, distances):
        out = {}
        for c, t in self.trees.items():
            out[c] = distances[t.ei, t.ej] if t.ew.size else np.array([])
        return out


class KNeighborEngine:
    """Per-point K cheapest same-class out-neighbors under the K prior."""

    def __init__(self, labels, n_classes, weights, k):
        self.labels = np.asarray(labels, dtype=int).copy()
        self.n_classes = n_classes
        self.weights = weights
        self.k = k
        self.members = {c: np.sort(np.nonzero(self.labels == c)[0])
                        for c in range(1, n_classes + 1)}
        self.neigh = {}
        self.rowsum = {}
        self._rebuild_blocks()

    def _block(self, c, members):
        if members.size == 0:
            return np.empty((0, self.k), dtype=np.int64), np.array([])
        sub = self.weights[c - 1][np.ix_(members, members)].copy()
        np.fill_diagonal(sub, np.inf)
        order = np.argsort(sub, axis=1, kind="stable")[:, : self.k]
        vals = np.take_along_axis(sub, order, axis=1)
        return members[order], vals.sum(axis=1)

    def _rebuild_blocks(self):
        for c in range(1, self.n_classes + 1):
            self.neigh[c], self.rowsum[c] = self._block(c, self.members[c])

    def rebuild(self, weights):
        self.weights = weights
        self._rebuild_blocks()

    def score(self) -> float:
        return -sum(float(s.sum()) for s in self.rowsum.values())

    def try_move(self, i):
        a = int(self.labels[i])
        size_a = self.members[a].size
        base = self.score()
        ma_new = self.members[a][self.members[a] != i]
        if 0 < ma_new.size <= self.k:
            return None
        neigh_a, sums_a = self._block(a, ma_new)
        best = None
        best_score = base
        for cand in range(1, self.n_classes + 1):
            if cand == a:
                continue
            mc = self.members[cand]
            if mc.size < self.k:
                continue
            mc_new = np.insert(mc, np.searchsorted(mc, i), i)
            neigh_c, sums_c = self._block(cand, mc_new)
            s = (base + float(self.rowsum[a].sum()) + float(self.rowsum[cand].sum())
                 - float(sums_a.sum()) - float(sums_c.sum()))
            if s > best_score:
                best = (cand, s, (ma_new, neigh_a, sums_a, mc_new, neigh_c, sums_c))
                best_score = s
        return best

    def apply_move(self, i, target, payload):
        a = int(self.labels[i])
        ma_new, neigh_a, sums_a, mc_new, neigh_c, sums_c = payload
        self.labels[i] = target
        self.members[a] = ma_new
        self.neigh[a], self.rowsum[a] = neigh_a, sums_a
        self.members[target] = mc_new
        self.neigh[target], self.rowsum[target] = neigh_c, sums_c

    def class_edge_values(self, distances):
        out = {}
        for c in range(1, self.n_classes + 1):
            members = self.members[c]
            if members.size == 0:
                out[c] = np.array([])
                continue
            rows = np.repeat(members, self.k)
            out[c] = distances[rows, self.neigh[c].ravel()]
        return out
