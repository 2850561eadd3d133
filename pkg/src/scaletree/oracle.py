"""Brute-force references for the tree-inference results, desk scale only."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .affinity import check_distance_matrix
from .errors import InputError, SizeError, StateError
from .graph import Edge, EdgeSet, is_connected
from .latent_graph import (
    CONNECTED,
    K_NEIGHBOR,
    LikelihoodModel,
    NeighborGraph,
    PriorKind,
    log_joint,
    map_graph_given_labels,
    weight_matrix,
)

MAX_SUBGRAPH_NODES = 5
MAX_ENUM_POINTS = 8


@dataclass
class OracleResult:
    labels: np.ndarray
    graph: NeighborGraph
    score: float
    states_examined: int


def best_connected_subgraph(members, weight) -> EdgeSet:
    """Cheapest connected edge subset, by enumeration over all 2^(n(n-1)/2).

    Ties resolve toward fewer edges, then the lexicographically smallest
    edge-index tuple.  With nonnegative weights the winner is checked to be
    a spanning tree.
    """
    nodes = sorted(set(int(m) for m in members))
    n = len(nodes)
    if n > MAX_SUBGRAPH_NODES:
        raise SizeError(f"enumeration capped at {MAX_SUBGRAPH_NODES} nodes, got {n}")
    pairs = [(nodes[a], nodes[b]) for a in range(n) for b in range(a + 1, n)]
    ws = []
    for i, j in pairs:
        w = float(weight(i, j))
        if not math.isfinite(w):
            raise InputError(f"non-finite weight on edge ({i}, {j})")
        ws.append(w)
    best_key = None
    best_subset = None
    for mask in range(1 << len(pairs)):
        chosen = [p for p in range(len(pairs)) if mask >> p & 1]
        edges = [pairs[p] for p in chosen]
        if not is_connected(nodes, edges):
            continue
        total = sum(ws[p] for p in chosen)
        key = (total, len(chosen), tuple(chosen))
        if best_key is None or key < best_key:
            best_key = key
            best_subset = chosen
    result = EdgeSet(tuple(nodes),
                     tuple(Edge(pairs[p][0], pairs[p][1], ws[p]) for p in best_subset))
    if all(w >= 0 for w in ws):
        assert len(result.edges) == n - 1, "nonnegative-weight optimum must be a tree"
    return result


def enumerate_map(distances, m: int, model: LikelihoodModel,
                  prior: PriorKind) -> OracleResult:
    """Global MAP over labelings by exhaustive search (c_1 fixed to 1).

    Every labeling gets its optimal graph (per-class MST, or the K cheapest
    neighbors per point), is scored with ``log_joint``, and the best state
    wins; ties resolve toward fewer graph edges, then enumeration order.
    """
    distances = check_distance_matrix(distances)
    n = distances.shape[0]
    if n > MAX_ENUM_POINTS:
        raise SizeError(f"labeling enumeration capped at {MAX_ENUM_POINTS} points, got {n}")
    if not model.calibrated:
        raise StateError("enumerate_map needs a calibrated model")
    best = None
    examined = 0
    for tail in itertools.product(range(1, m + 1), repeat=max(0, n - 1)):
        labels = np.asarray((1,) + tail, dtype=int)
        if prior.kind == K_NEIGHBOR:
            sizes = np.bincount(labels, minlength=m + 1)[1:]
            if np.any((sizes > 0) & (sizes <= prior.k)):
                continue
        graph = map_graph_given_labels(distances, labels, model, prior)
        score = log_joint(distances, labels, graph, model)
        examined += 1
        n_edges = len(graph.edge_list())
        key = (-score, n_edges)
        if best is None or key < best[0]:
            best = (key, labels, graph, score)
    if best is None:
        raise SizeError("no admissible labeling under the prior")
    _, labels, graph, score = best
    return OracleResult(labels, graph, score, examined)


def best_connected_subgraph_for_class(distances, labels, c: int,
                                      model: LikelihoodModel) -> EdgeSet:
    """Class-restricted exhaustive optimum, for checking the per-class MST."""
    members = np.nonzero(np.asarray(labels, dtype=int) == c)[0]
    w = weight_matrix(check_distance_matrix(distances), c, model)
    return best_connected_subgraph(members.tolist(), lambda i, j: w[i, j])


def rank_error_reference(a: np.ndarray, t: int) -> float:
    """sqrt(sum of squared discarded eigenvalues) from a full eigensolve.

    The reference Frobenius error of the best rank-t reconstruction of a
    symmetric PSD matrix.
    """
    a = np.asarray(a, dtype=float)
    if np.abs(a - a.T).max(initial=0.0) > 1e-9:
        raise InputError("reference needs a symmetric matrix")
    vals = np.sort(np.linalg.eigvalsh(0.5 * (a + a.T)))[::-1]
    tail = vals[t:]
    return float(np.sqrt(np.sum(tail * tail)))
