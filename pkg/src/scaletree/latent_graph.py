"""Generative clustering on a distance matrix via latent neighbor graphs.

The model explains each matrix entry either with one of M per-class scale
distributions (Gaussian mean/variance or exponential rate) or with a wider
background distribution.  For a fixed labeling, the MAP neighbor graph under
the connected prior is the union of per-class minimum spanning trees of the
edge weights

    w_ij = log p(L_ij | background) - log p(L_ij | class)

which calibration makes nonnegative on every observed pair (clamping at zero
where that is impossible).  Fitting alternates exact per-point reassignment
with hard-EM parameter updates, over several random restarts.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import _engine
from .affinity import check_distance_matrix
from .errors import (
    ConsistencyError,
    InfeasiblePriorError,
    ModelError,
    ParameterError,
    StateError,
)
from .graph import minimum_spanning_tree

GAUSSIAN = "gaussian"
EXPONENTIAL = "exponential"

CONNECTED = "connected"
K_NEIGHBOR = "k_neighbor"

_LOG_2PI = math.log(2.0 * math.pi)

# Floor for the smallest squared deviation seen by calibration; exact
# coincidence of an entry with a class mean is a measure-zero event.
_GAMMA_FLOOR = 1e-12


@dataclass(frozen=True)
class PriorKind:
    """Admissible-graph family: per-class connectivity, or K out-neighbors."""

    kind: str
    k: int = 0

    def __post_init__(self):
        if self.kind not in (CONNECTED, K_NEIGHBOR):
            raise ParameterError(f"unknown prior kind {self.kind!r}")
        if self.kind == K_NEIGHBOR and self.k < 1:
            raise ParameterError("K-neighbor prior needs K >= 1")

    @classmethod
    def connected(cls) -> "PriorKind":
        return cls(CONNECTED)

    @classmethod
    def k_neighbor(cls, k: int) -> "PriorKind":
        return cls(K_NEIGHBOR, int(k))

    @classmethod
    def parse(cls, text: str) -> "PriorKind":
        if text == CONNECTED:
            return cls.connected()
        if text.startswith("kneighbor:"):
            return cls.k_neighbor(int(text.split(":", 1)[1]))
        raise ParameterError(f"cannot parse prior {text!r} (connected | kneighbor:K)")

    def __str__(self) -> str:
        return CONNECTED if self.kind == CONNECTED else f"kneighbor:{self.k}"


@dataclass(frozen=True)
class LikelihoodModel:
    """Per-class scale parameters plus the background distribution.

    ``beta`` holds the Gaussian mean of in-class edge lengths, or the
    exponential rate, one entry per class.  The Gaussian background shares
    the mean of whichever class it is compared against and owns only the
    variance ``sigma2_0``; the exponential background owns the rate
    ``beta_0``.  ``calibrated`` is set by :func:`calibrate_background`;
    ``clamped`` marks models whose edge weights need clamping at zero.
    """

    kind: str
    beta: np.ndarray
    sigma2: np.ndarray | None = None
    sigma2_0: float | None = None
    beta_0: float | None = None
    calibrated: bool = False
    clamped: bool = False
    clamped_pairs: int = 0

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, EXPONENTIAL):
            raise ModelError(f"unknown likelihood kind {self.kind!r}")
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float)).copy()
        if beta.size < 1 or not np.all(np.isfinite(beta)):
            raise ModelError("per-class beta must be a non-empty finite vector")
        object.__setattr__(self, "beta", beta)
        if self.kind == GAUSSIAN:
            if self.sigma2 is None:
                raise ModelError("gaussian model needs per-class variances")
            s2 = np.atleast_1d(np.asarray(self.sigma2, dtype=float)).copy()
            if s2.shape != beta.shape or not np.all(np.isfinite(s2)) or s2.min() <= 0:
                raise ModelError("per-class variances must be positive and finite")
            object.__setattr__(self, "sigma2", s2)
            if self.sigma2_0 is not None and self.sigma2_0 <= 0:
                raise ModelError("background variance must be positive")
        else:
            if beta.min() <= 0:
                raise ModelError("exponential rates must be positive")
            if self.beta_0 is not None and self.beta_0 <= 0:
                raise ModelError("background rate must be positive")

    @property
    def n_classes(self) -> int:
        return int(self.beta.size)


@dataclass
class NeighborGraph:
    """Latent pairwise assignments: 0 = background, c = in-class edge.

    The connected prior yields a symmetric (undirected) graph; the K-neighbor
    prior yields a directed one, each point owning K outgoing edges.
    """

    nu: np.ndarray
    directed: bool = False

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=int)
        if nu.ndim != 2 or nu.shape[0] != nu.shape[1]:
            raise ConsistencyError("nu must be a square matrix")
        if nu.size and nu.min() < 0:
            raise ConsistencyError("nu values must be in {0, 1..M}")
        if np.any(np.diag(nu) != 0):
            raise ConsistencyError("nu diagonal must be zero")
        if not self.directed and np.any(nu != nu.T):
            raise ConsistencyError("undirected nu must be symmetric")
        self.nu = nu

    @property
    def n(self) -> int:
        return self.nu.shape[0]

    def edge_list(self) -> list[tuple[int, int, int]]:
        """(i, j, class) triples; i < j when undirected, ordered otherwise."""
        if self.directed:
            ii, jj = np.nonzero(self.nu)
        else:
            ii, jj = np.nonzero(np.triu(self.nu))
        return [(int(a), int(b), int(self.nu[a, b])) for a, b in zip(ii, jj)]

    def check_labels(self, labels: np.ndarray):
        ii, jj = np.nonzero(self.nu)
        vals = self.nu[ii, jj]
        if np.any(labels[ii] != vals) or np.any(labels[jj] != vals):
            raise ConsistencyError("nu assigns an edge outside its class")


@dataclass(frozen=True)
class FitConfig:
    """Knobs for :func:`fit`; ``clamp`` pins chosen points to known classes."""

    n_classes: int
    likelihood: str = GAUSSIAN
    prior: PriorKind = PriorKind(CONNECTED)
    max_sweeps: int = 200
    restarts: int = 10
    seed: int = 0
    tolerance: float = 1e-8
    floor: float | None = None
    clamp: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.n_classes < 1:
            raise ParameterError("need at least one class")
        if self.likelihood not in (GAUSSIAN, EXPONENTIAL):
            raise ParameterError(f"unknown likelihood {self.likelihood!r}")
        if self.max_sweeps < 1 or self.restarts < 1:
            raise ParameterError("max_sweeps and restarts must be >= 1")
        if self.tolerance <= 0:
            raise ParameterError("tolerance must be positive")
        if self.floor is not None and self.floor <= 0:
            raise ParameterError("variance floor must be positive")


@dataclass
class FitResult:
    """Best state over all restarts plus the accepted-step score trace."""

    labels: np.ndarray
    graph: NeighborGraph
    model: LikelihoodModel
    score: float
    score_trace: list[float]
    trace_segments: list[int]
    trace_kinds: list[str]
    restart_scores: list[float]
    sweeps: int
    moves: int
    converged: bool
    seed: int
    config: FitConfig
    diagnostics: dict = field(default_factory=dict)

    def to_json_dict(self, distances: np.ndarray | None = None) -> dict:
        """Plain-JSON form; edge weights come from the final model."""
        edges = []
        if distances is not None:
            for i, j, c in self.graph.edge_list():
                edges.append([i, j, c, edge_weight(float(distances[i, j]), c, self.model)])
        else:
            edges = [[i, j, c, None] for i, j, c in self.graph.edge_list()]
        classes = []
        for k in range(self.model.n_classes):
            entry = {"beta": float(self.model.beta[k])}
            if self.model.kind == GAUSSIAN:
                entry["sigma2"] = float(self.model.sigma2[k])
            classes.append(entry)
        background: dict = {"clamped": self.model.clamped,
                            "clamped_pairs": self.model.clamped_pairs}
        if self.model.kind == GAUSSIAN:
            background["sigma2_0"] = float(self.model.sigma2_0)
        else:
            background["beta_0"] = float(self.model.beta_0)
        return {
            "labels": [int(x) for x in self.labels],
            "edges": edges,
            "likelihood": self.model.kind,
            "prior": str(self.config.prior),
            "classes": classes,
            "background": background,
            "score": float(self.score),
            "score_trace": [float(s) for s in self.score_trace],
            "trace_segments": [int(s) for s in self.trace_segments],
            "restart_scores": [float(s) for s in self.restart_scores],
            "sweeps": int(self.sweeps),
            "moves": int(self.moves),
            "converged": bool(self.converged),
            "seed": int(self.seed),
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------------------
# likelihood terms and edge weights
# ---------------------------------------------------------------------------

def log_lik_entry(value: float, target: int, model: LikelihoodModel,
                  ref_class: int | None = None) -> float:
    """Log density of one matrix entry under class ``target`` (0 = background).

    The Gaussian background shares the mean of ``ref_class``, which must be
    given when ``target`` is 0.
    """
    if model.kind == GAUSSIAN:
        if target == 0:
            if not model.calibrated or model.sigma2_0 is None:
                raise StateError("background requested from an uncalibrated model")
            if ref_class is None:
                raise ParameterError("gaussian background needs the companion class")
            beta = float(model.beta[ref_class - 1])
            s2 = float(model.sigma2_0)
        else:
            beta = float(model.beta[target - 1])
            s2 = float(model.sigma2[target - 1])
        return -0.5 * ((value - beta) ** 2 / s2 + math.log(s2) + _LOG_2PI)
    if target == 0:
        if not model.calibrated or model.beta_0 is None:
            raise StateError("background requested from an uncalibrated model")
        rate = float(model.beta_0)
    else:
        rate = float(model.beta[target - 1])
    return math.log(rate) - rate * value


def edge_weight(value: float, k: int, model: LikelihoodModel) -> float:
    """Background-vs-class log-density gap for one entry.

    Nonnegative on observed pairs after calibration; clamped at zero only
    when calibration had to fall back (``model.clamped``).
    """
    if not model.calibrated:
        raise StateError("edge weights need a calibrated model")
    w = log_lik_entry(value, 0, model, ref_class=k) - log_lik_entry(value, k, model)
    if model.clamped:
        return max(0.0, w)
    return w


def weight_matrix(distances: np.ndarray, k: int, model: LikelihoodModel) -> np.ndarray:
    """Vectorized ``edge_weight`` for class ``k`` over a whole matrix."""
    if not model.calibrated:
        raise StateError("edge weights need a calibrated model")
    if model.kind == GAUSSIAN:
        s2 = float(model.sigma2[k - 1])
        s20 = float(model.sigma2_0)
        alpha = (distances - model.beta[k - 1]) ** 2
        w = 0.5 * (alpha * (1.0 / s2 - 1.0 / s20) + math.log(s2 / s20))
    else:
        rate = float(model.beta[k - 1])
        rate0 = float(model.beta_0)
        w = math.log(rate0 / rate) + (rate - rate0) * distances
    if model.clamped:
        np.maximum(w, 0.0, out=w)
    np.fill_diagonal(w, 0.0)
    return w


# ---------------------------------------------------------------------------
# background calibration
# ---------------------------------------------------------------------------

def _g(a: float, b: float) -> float:
    """(ln a - ln b) * a * b / (a - b); the continuous extension at a=b is b."""
    if a == b:
        return b
    return (math.log(a) - math.log(b)) * a * b / (a - b)


def calibrate_background(distances: np.ndarray, model: LikelihoodModel) -> LikelihoodModel:
    """Choose background parameters so in-class densities never dominate.

    Gaussian: find the largest background variance keeping
    ``g(sigma2_0, sigma2_k) <= min alpha`` over every pair and class, by
    bisection; if the minimum squared deviation is too small, fall back to a
    variance just above the largest class variance and flag clamped mode.
    Exponential: 1-D grid search on the background rate minimizing the count
    of pairs whose in-class density exceeds the background density.
    """
    distances = check_distance_matrix(distances)
    n = distances.shape[0]
    iu = np.triu_indices(n, 1)
    off = distances[iu]

    if model.kind == GAUSSIAN:
        s2 = model.sigma2
        s_max = float(s2.max())
        if off.size == 0:
            # No pairs to constrain; any wider background works.
            return replace(model, sigma2_0=2.0 * s_max, calibrated=True,
                           clamped=False, clamped_pairs=0)
        gamma = min(float(((off - b) ** 2).min()) for b in model.beta)
        gamma = max(gamma, _GAMMA_FLOOR)

        def worst(x: float) -> float:
            return max(_g(x, float(b)) for b in s2)

        if gamma <= s_max:
            s20 = (1.0 + 1e-6) * s_max
            pairs = _count_clamped_gaussian(off, model.beta, s2, s20)
            return replace(model, sigma2_0=s20, calibrated=True,
                           clamped=True, clamped_pairs=pairs)
        lo = s_max * (1.0 + 1e-12)
        hi = lo
        while worst(hi) <= gamma and hi < 1e300:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if worst(mid) <= gamma:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-13 * lo:
                break
        return replace(model, sigma2_0=float(lo), calibrated=True,
                       clamped=False, clamped_pairs=0)

    # Exponential: count Eq-17 violations on a log-spaced rate grid.
    rates = model.beta
    if off.size == 0:
        return replace(model, beta_0=float(rates.min()) / 2.0, calibrated=True,
                       clamped=False, clamped_pairs=0)
    lo_r, hi_r = float(rates.min()), float(rates.max())
    grid = np.geomspace(lo_r * 1e-4, hi_r * 1e4, 241)
    grid = np.unique(np.concatenate([grid, rates]))
    best_rate, best_bad = None, None
    for r0 in grid:
        bad = _count_clamped_exponential(off, rates, float(r0))
        if best_bad is None or bad < best_bad:
            best_rate, best_bad = float(r0), bad
    return replace(model, beta_0=best_rate, calibrated=True,
                   clamped=best_bad > 0, clamped_pairs=int(best_bad))


def _count_clamped_gaussian(off, beta, sigma2, sigma2_0) -> int:
    bad = 0
    for k in range(beta.size):
        thresh = _g(float(sigma2_0), float(sigma2[k]))
        bad += int(np.count_nonzero((off - beta[k]) ** 2 < thresh - 1e-15))
    return bad


def _count_clamped_exponential(off, rates, rate0) -> int:
    bad = 0
    for rk in rates:
        f = math.log(rate0 / float(rk)) + (float(rk) - rate0) * off
        bad += int(np.count_nonzero(f < -1e-12))
    return bad


# ---------------------------------------------------------------------------
# MAP graph, scoring, coordinate moves, hard-EM updates
# ---------------------------------------------------------------------------

def _check_labels(labels, n, m) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (n,):
        raise ParameterError("labels must be one per point")
    if labels.size and (labels.min() < 1 or labels.max() > m):
        raise ParameterError("labels must lie in 1..M")
    return labels


def map_graph_given_labels(distances: np.ndarray, labels, model: LikelihoodModel,
                           prior: PriorKind) -> NeighborGraph:
    """Most likely neighbor graph for a fixed labeling.

    Connected prior: per-class minimum spanning tree of the edge weights.
    K-neighbor prior: each point keeps its K cheapest same-class neighbors
    (directed); classes of size <= K are infeasible.
    """
    distances = check_distance_matrix(distances)
    if not model.calibrated:
        raise StateError("map_graph_given_labels needs a calibrated model")
    n = distances.shape[0]
    labels = _check_labels(labels, n, model.n_classes)
    nu = np.zeros((n, n), dtype=int)
    if prior.kind == CONNECTED:
        for c in range(1, model.n_classes + 1):
            members = np.nonzero(labels == c)[0]
            if members.size <= 1:
                continue
            w = weight_matrix(distances, c, model)
            tree = minimum_spanning_tree(members.tolist(), lambda i, j: w[i, j])
            for e in tree.edges:
                nu[e.i, e.j] = c
                nu[e.j, e.i] = c
        return NeighborGraph(nu, directed=False)
    k = prior.k
    for c in range(1, model.n_classes + 1):
        members = np.nonzero(labels == c)[0]
        if members.size == 0:
            continue
        if members.size <= k:
            raise InfeasiblePriorError(
                f"class {c} has {members.size} members but the prior needs {k} neighbors each")
        w = weight_matrix(distances, c, model)
        for i in members:
            others = members[members != i]
            ws = w[i, others]
            order = np.lexsort((others, ws))
            nu[i, others[order[:k]]] = c
    return NeighborGraph(nu, directed=True)


def log_joint(distances: np.ndarray, labels, nu: NeighborGraph,
              model: LikelihoodModel) -> float:
    """Joint log probability relative to the all-background state.

    Equals minus the summed edge weights of the graph; the dropped additive
    constant is shared by every admissible state of the same model.
    """
    distances = check_distance_matrix(distances)
    n = distances.shape[0]
    labels = _check_labels(labels, n, model.n_classes)
    nu.check_labels(labels)
    total = 0.0
    for i, j, c in nu.edge_list():
        total += edge_weight(float(distances[i, j]), c, model)
    return -total


def best_move(distances: np.ndarray, labels, nu: NeighborGraph,
              model: LikelihoodModel, i: int, prior: PriorKind):
    """Exact best reassignment of point ``i`` with its induced graph change.

    Evaluates every candidate class, rebuilding only the affected classes'
    subgraphs, and keeps the current assignment on exact score ties.
    Returns ``(labels, graph, score)`` of the winning state.
    """
    distances = check_distance_matrix(distances)
    n = distances.shape[0]
    labels = _check_labels(labels, n, model.n_classes)
    current = int(labels[i])

    def rebuilt(cand: int):
        lab2 = labels.copy()
        lab2[i] = cand
        affected = {current, cand}
        nu2 = nu.nu.copy()
        for c in affected:
            nu2[nu2 == c] = 0
        partial = map_graph_given_labels(distances, lab2, model, prior)
        for c in affected:
            nu2[partial.nu == c] = c
        g2 = NeighborGraph(nu2, directed=nu.directed)
        return lab2, g2, log_joint(distances, lab2, g2, model)

    best_lab, best_graph, best_score = rebuilt(current)
    for cand in range(1, model.n_classes + 1):
        if cand == current:
            continue
        if prior.kind == K_NEIGHBOR:
            size_from = int(np.count_nonzero(labels == current))
            size_to = int(np.count_nonzero(labels == cand))
            if (size_from - 1 != 0 and size_from - 1 <= prior.k) or size_to < prior.k:
                continue
        lab2, g2, s2 = rebuilt(cand)
        if s2 > best_score:
            best_lab, best_graph, best_score = lab2, g2, s2
    return best_lab, best_graph, best_score


def update_params(distances: np.ndarray, labels, nu: NeighborGraph,
                  model: LikelihoodModel, floor: float) -> LikelihoodModel:
    """Hard-EM update of per-class parameters from the current graph.

    Gaussian classes take the mean and (floored) population variance of
    their edge lengths; exponential classes take the maximum-likelihood
    rate.  Classes without edges keep their parameters.  The background is
    recalibrated afterwards.
    """
    distances = check_distance_matrix(distances)
    n = distances.shape[0]
    labels = _check_labels(labels, n, model.n_classes)
    if floor <= 0:
        raise ParameterError("variance floor must be positive")
    nu.check_labels(labels)
    values = {c: [] for c in range(1, model.n_classes + 1)}
    for i, j, c in nu.edge_list():
        values[c].append(float(distances[i, j]))
    beta = model.beta.copy()
    sigma2 = model.sigma2.copy() if model.sigma2 is not None else None
    for c, vals in values.items():
        if not vals:
            continue
        v = np.asarray(vals)
        if model.kind == GAUSSIAN:
            beta[c - 1] = float(v.mean())
            sigma2[c - 1] = max(floor, float(v.var()))
        else:
            beta[c - 1] = v.size / max(float(v.sum()), v.size * 1e-12)
    updated = LikelihoodModel(model.kind, beta, sigma2)
    return calibrate_background(distances, updated)


def clamp_labels(config: FitConfig, known: dict[int, int]) -> FitConfig:
    """Return a config whose listed points are pinned to the given classes."""
    merged = dict(config.clamp)
    for idx, cls in known.items():
        idx, cls = int(idx), int(cls)
        if idx < 0:
            raise ParameterError(f"clamp index {idx} out of range")
        if not 1 <= cls <= config.n_classes:
            raise ParameterError(f"clamp class {cls} out of range 1..{config.n_classes}")
        merged[idx] = cls
    return replace(config, clamp=tuple(sorted(merged.items())))


# ---------------------------------------------------------------------------
# the fitting loop
# ---------------------------------------------------------------------------

def _nearest_neighbor_distances(distances: np.ndarray) -> np.ndarray:
    if distances.shape[0] < 2:
        return np.array([])
    d = distances.copy()
    np.fill_diagonal(d, np.inf)
    return d.min(axis=1)


def _resolve_floor(config: FitConfig, off: np.ndarray) -> float:
    if config.floor is not None:
        return config.floor
    if off.size == 0:
        return 1e-12
    var = float(np.var(off))
    if var > 0:
        return 1e-6 * var
    mean = float(np.mean(off))
    return 1e-12 * max(1.0, mean * mean)


def _init_model(config: FitConfig, rng, nn: np.ndarray, floor: float) -> LikelihoodModel:
    m = config.n_classes
    q = rng.uniform(0.1, 0.5, size=m)
    if nn.size == 0:
        scale = np.ones(m)
    else:
        scale = np.quantile(nn, q)
    if config.likelihood == GAUSSIAN:
        s2 = max(floor, float(np.var(nn)) if nn.size else floor)
        return LikelihoodModel(GAUSSIAN, scale, np.full(m, s2))
    rates = 1.0 / np.maximum(scale, 1e-12)
    return LikelihoodModel(EXPONENTIAL, rates)


def _init_labels(config: FitConfig, rng, n: int) -> np.ndarray:
    clamped = dict(config.clamp)
    for idx in clamped:
        if idx >= n:
            raise ParameterError(f"clamp index {idx} out of range for {n} points")
    free = np.array([i for i in range(n) if i not in clamped], dtype=int)
    for _ in range(1000):
        labels = np.empty(n, dtype=int)
        labels[free] = rng.integers(1, config.n_classes + 1, size=free.size)
        for idx, cls in clamped.items():
            labels[idx] = cls
        if config.prior.kind != K_NEIGHBOR:
            return labels
        sizes = np.bincount(labels, minlength=config.n_classes + 1)[1:]
        if np.all((sizes == 0) | (sizes > config.prior.k)):
            return labels
    raise InfeasiblePriorError(
        f"could not draw an initial labeling with every class larger than K={config.prior.k}")


def _relative_score_fixed_background(model_kind, class_values, beta, sigma2,
                                     sigma2_0, beta_0) -> float:
    """Unclamped relative score of the current graph under frozen background."""
    total = 0.0
    for c, vals in class_values.items():
        if not len(vals):
            continue
        v = np.asarray(vals)
        if model_kind == GAUSSIAN:
            alpha = (v - beta[c - 1]) ** 2
            s2 = sigma2[c - 1]
            total += float(np.sum(0.5 * (alpha * (1.0 / sigma2_0 - 1.0 / s2)
                                         + math.log(sigma2_0 / s2))))
        else:
            rk = beta[c - 1]
            total += float(np.sum((math.log(rk) - rk * v)
                                  - (math.log(beta_0) - beta_0 * v)))
    return total


def _param_delta(old: LikelihoodModel, new: LikelihoodModel) -> float:
    delta = float(np.max(np.abs(new.beta - old.beta) / (1.0 + np.abs(old.beta))))
    if old.kind == GAUSSIAN:
        delta = max(delta, float(np.max(np.abs(new.sigma2 - old.sigma2)
                                        / (1.0 + np.abs(old.sigma2)))))
        delta = max(delta, abs(new.sigma2_0 - old.sigma2_0) / (1.0 + abs(old.sigma2_0)))
    else:
        delta = max(delta, abs(new.beta_0 - old.beta_0) / (1.0 + abs(old.beta_0)))
    return delta


class _Restart:
    def __init__(self):
        self.trace: list[float] = []
        self.segments: list[int] = []
        self.kinds: list[str] = []
        self.mstep_deltas: list[float] = []
        self.move_deltas_min = math.inf
        self.sweep_seconds: list[float] = []
        self.sweeps = 0
        self.moves = 0
        self.converged = False

    def record(self, kind: str, segment: int, score: float):
        self.trace.append(float(score))
        self.segments.append(segment)
        self.kinds.append(kind)


def _run_restart(distances, config: FitConfig, rng, nn, floor):
    n = distances.shape[0]
    labels = _init_labels(config, rng, n)
    model = calibrate_background(distances, _init_model(config, rng, nn, floor))
    weights = [weight_matrix(distances, c, model) for c in range(1, config.n_classes + 1)]
    if config.prior.kind == CONNECTED:
        engine = _engine.ConnectedEngine(labels, config.n_classes, weights)
    else:
        engine = _engine.KNeighborEngine(labels, config.n_classes, weights, config.prior.k)

    rec = _Restart()
    segment = 0
    rec.record("init", segment, engine.score())
    clamped_idx = {idx for idx, _ in config.clamp}
    free = np.array([i for i in range(n) if i not in clamped_idx], dtype=int)

    for _ in range(config.max_sweeps):
        t0 = time.perf_counter()
        accepted = 0
        for i in rng.permutation(free):
            moved = engine.try_move(int(i))
            if moved is None:
                continue
            target, new_score, payload = moved
            old_score = engine.score()
            engine.apply_move(int(i), target, payload)
            accepted += 1
            rec.move_deltas_min = min(rec.move_deltas_min, new_score - old_score)
            rec.record("move", segment, engine.score())
        rec.moves += accepted

        # Hard-EM M-step under the frozen background, then recalibrate.
        class_values = engine.class_edge_values(distances)
        beta = model.beta.copy()
        sigma2 = model.sigma2.copy() if model.sigma2 is not None else None
        for c, vals in class_values.items():
            if not len(vals):
                continue
            v = np.asarray(vals)
            if model.kind == GAUSSIAN:
                beta[c - 1] = float(v.mean())
                sigma2[c - 1] = max(floor, float(v.var()))
            else:
                beta[c - 1] = v.size / max(float(v.sum()), v.size * 1e-12)
        f_old = _relative_score_fixed_background(
            model.kind, class_values, model.beta, model.sigma2,
            model.sigma2_0, model.beta_0)
        f_new = _relative_score_fixed_background(
            model.kind, class_values, beta, sigma2, model.sigma2_0, model.beta_0)
        rec.mstep_deltas.append(f_new - f_old)
        rec.record("mstep", segment, f_new)

        new_model = calibrate_background(
            distances, LikelihoodModel(model.kind, beta, sigma2))
        delta = _param_delta(model, new_model)
        model = new_model
        segment += 1
        weights = [weight_matrix(distances, c, model)
                   for c in range(1, config.n_classes + 1)]
        engine.rebuild(weights)
        rec.record("rebuild", segment, engine.score())

        rec.sweeps += 1
        rec.sweep_seconds.append(time.perf_counter() - t0)
        if accepted == 0 and delta < config.tolerance:
            rec.converged = True
            break

    labels = engine.labels.copy()
    graph = map_graph_given_labels(distances, labels, model, config.prior)
    score = log_joint(distances, labels, graph, model)
    return labels, graph, model, score, rec


def fit(distances: np.ndarray, config: FitConfig) -> FitResult:
    """Coordinate-descent MAP fit with random restarts.

    Each restart draws a random labeling, then alternates full sweeps of
    exact per-point reassignment with hard-EM parameter updates until no
    move is accepted and the parameters are stable.  The best-scoring
    restart wins; ties go to the lowest restart index.  Deterministic for a
    fixed (seed, config, distances).
    """
    distances = check_distance_matrix(distances)
    n = distances.shape[0]
    if n < 1:
        raise ParameterError("need at least one point")
    if config.prior.kind == K_NEIGHBOR and n < config.n_classes:
        raise ParameterError("more classes than points under the K-neighbor prior")
    for idx, _ in config.clamp:
        if idx >= n:
            raise ParameterError(f"clamp index {idx} out of range for {n} points")
    iu = np.triu_indices(n, 1)
    off = distances[iu]
    floor = _resolve_floor(config, off)
    nn = _nearest_neighbor_distances(distances)

    children = np.random.SeedSequence(config.seed).spawn(config.restarts)
    best = None
    best_rec = None
    restart_scores = []
    min_move_delta = math.inf
    min_mstep_delta = math.inf
    violations = 0
    for r in range(config.restarts):
        rng = np.random.default_rng(children[r])
        labels, graph, model, score, rec = _run_restart(distances, config, rng, nn, floor)
        restart_scores.append(score)
        if rec.moves:
            min_move_delta = min(min_move_delta, rec.move_deltas_min)
        if rec.mstep_deltas:
            min_mstep_delta = min(min_mstep_delta, min(rec.mstep_deltas))
        violations += sum(1 for d in rec.mstep_deltas if d < -1e-9)
        if rec.moves and rec.move_deltas_min < -1e-9:
            violations += 1
        if best is None or score > best[3]:
            best = (labels, graph, model, score)
            best_rec = rec
    labels, graph, model, score = best
    diagnostics = {
        "clamped": model.clamped,
        "clamped_pairs": model.clamped_pairs,
        "min_move_delta": None if min_move_delta is math.inf else float(min_move_delta),
        "min_mstep_delta": None if min_mstep_delta is math.inf else float(min_mstep_delta),
        "monotonicity_violations": int(violations),
        "sweep_seconds": [float(t) for t in best_rec.sweep_seconds],
        "restarts": config.restarts,
    }
    return FitResult(
        labels=labels,
        graph=graph,
        model=model,
        score=score,
        score_trace=best_rec.trace,
        trace_segments=best_rec.segments,
        trace_kinds=best_rec.kinds,
        restart_scores=restart_scores,
        sweeps=best_rec.sweeps,
        moves=best_rec.moves,
        converged=best_rec.converged,
        seed=config.seed,
        config=config,
        diagnostics=diagnostics,
    )
