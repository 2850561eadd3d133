"""Distance matrices and kernel affinity matrices built from point sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParameterError

NORM_NONE = "none"
NORM_ROW = "row_stochastic"
NORM_SYM = "symmetric"


@dataclass
class PointSet:
    """N points in d dimensions, optionally with 1-based truth labels."""

    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise InputError("point set must be a non-empty N x d array")
        if not np.all(np.isfinite(pts)):
            raise InputError("point coordinates must be finite")
        self.points = pts
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=int)
            if lab.shape != (pts.shape[0],):
                raise InputError("need exactly one label per point")
            if lab.size and lab.min() < 1:
                raise InputError("truth labels are 1-based")
            self.labels = lab

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass
class AffinityMatrix:
    """Nonnegative pairwise similarities plus the normalization applied."""

    entries: np.ndarray
    mode: str = NORM_NONE

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InputError("affinity matrix must be square")
        if not np.all(np.isfinite(a)):
            raise InputError("affinity entries must be finite")
        if a.size and a.min() < 0:
            raise InputError("affinity entries must be nonnegative")
        if self.mode not in (NORM_NONE, NORM_ROW, NORM_SYM):
            raise ParameterError(f"unknown normalization mode {self.mode!r}")
        self.entries = a

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def check_distance_matrix(d: np.ndarray) -> np.ndarray:
    """Validate an N x N distance matrix and return it as a float array."""
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise InputError("distance matrix must be square")
    if not np.all(np.isfinite(d)):
        raise InputError("distance matrix entries must be finite")
    if d.size and d.min() < 0:
        raise InputError("distances must be nonnegative")
    if np.abs(np.diag(d)).max(initial=0.0) > 0:
        raise InputError("distance matrix diagonal must be zero")
    if np.abs(d - d.T).max(initial=0.0) > 1e-9:
        raise InputError("distance matrix must be symmetric")
    return d


def distance_matrix(points) -> np.ndarray:
    """Pairwise Euclidean distances between the rows of a point set."""
    if not isinstance(points, PointSet):
        points = PointSet(points)
    x = points.points
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2)
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d


def kernel_affinity(d: np.ndarray, gamma: float) -> AffinityMatrix:
    """Gaussian kernel affinity exp(-d_ij^2 / gamma^2) with zero diagonal."""
    if not np.isfinite(gamma) or gamma <= 0:
        raise ParameterError("gamma must be a positive real")
    d = check_distance_matrix(d)
    a = np.exp(-(d * d) / (gamma * gamma))
    np.fill_diagonal(a, 0.0)
    return AffinityMatrix(a, NORM_NONE)


def normalize(a: AffinityMatrix, mode: str) -> AffinityMatrix:
    """Row-stochastic or symmetric degree normalization of an affinity."""
    if mode not in (NORM_ROW, NORM_SYM):
        raise ParameterError(f"normalization mode must be {NORM_ROW!r} or {NORM_SYM!r}")
    s = a.entries.sum(axis=1)
    bad = np.nonzero(s <= 0)[0]
    if bad.size:
        raise InputError(f"row {int(bad[0])} has zero affinity to all other points")
    if mode == NORM_ROW:
        out = a.entries / s[:, None]
    else:
        inv = 1.0 / np.sqrt(s)
        out = a.entries * inv[:, None] * inv[None, :]
    return AffinityMatrix(out, mode)
