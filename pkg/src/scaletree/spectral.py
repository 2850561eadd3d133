"""Spectral clustering baseline and the rank-t latent feature map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .affinity import NORM_SYM, AffinityMatrix, PointSet, distance_matrix, kernel_affinity, normalize
from .errors import InputError, ParameterError

NJW_MODE = "njw_row_normalized"
LATENT_FEATURE_MODE = "latent_feature"


@dataclass
class EigenSystem:
    """Top eigenpairs, eigenvalues descending, eigenvectors unit columns."""

    values: np.ndarray
    vectors: np.ndarray


@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    distortion: float
    n_iter: int
    distortion_trace: tuple[float, ...]


def top_eigen(a: AffinityMatrix, t: int) -> EigenSystem:
    """Top-t eigenpairs of a symmetric affinity matrix.

    Sign convention: the largest-magnitude component of each eigenvector is
    made positive.
    """
    m = a.entries if isinstance(a, AffinityMatrix) else np.asarray(a, dtype=float)
    n = m.shape[0]
    if not 1 <= t <= n:
        raise ParameterError(f"t={t} out of range 1..{n}")
    if np.abs(m - m.T).max(initial=0.0) > 1e-9:
        raise InputError("matrix is not symmetric; use the symmetric normalization")
    m = 0.5 * (m + m.T)
    vals, vecs = np.linalg.eigh(m)
    order = np.argsort(vals)[::-1][:t]
    vals = vals[order]
    vecs = vecs[:, order]
    for c in range(vecs.shape[1]):
        peak = np.argmax(np.abs(vecs[:, c]))
        if vecs[peak, c] < 0:
            vecs[:, c] = -vecs[:, c]
    return EigenSystem(vals, vecs)


def latent_feature_map(a: AffinityMatrix, t: int) -> np.ndarray:
    """Rows of the Frobenius-optimal rank-t factor: sqrt(lambda_r) * v_r[i].

    Retained eigenvalues must be nonnegative; magnitudes below 1e-8 are
    clipped to zero.
    """
    es = top_eigen(a, t)
    if es.values.min(initial=0.0) < -1e-8:
        raise InputError("retained eigenvalue is materially negative; input is not PSD")
    vals = np.clip(es.values, 0.0, None)
    return es.vectors * np.sqrt(vals)[None, :]


def row_normalize(rows: np.ndarray) -> tuple[np.ndarray, int]:
    """Scale each row to unit norm; zero rows stay zero and are counted."""
    rows = np.asarray(rows, dtype=float)
    norms = np.linalg.norm(rows, axis=1)
    zero = int(np.count_nonzero(norms == 0))
    safe = np.where(norms == 0, 1.0, norms)
    return rows / safe[:, None], zero


def kmeans(rows: np.ndarray, m: int, seed: int) -> KMeansResult:
    """Lloyd iterations from k-means++ seeding; deterministic given seed.

    Stops when the distortion change drops below 1e-10 or after 300
    iterations; an emptied cluster steals the point farthest from its
    center.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[:, None]
    n = rows.shape[0]
    if m > n:
        raise ParameterError(f"cannot place {m} centers on {n} rows")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(rows, m, rng)
    trace = []
    labels = np.zeros(n, dtype=int)
    prev = np.inf
    it = 0
    for it in range(1, 301):
        d2 = _sq_dists(rows, centers)
        labels = np.argmin(d2, axis=1)
        # Refill empty clusters with the farthest-from-center point.
        for c in range(m):
            if np.any(labels == c):
                continue
            far = int(np.argmax(d2[np.arange(n), labels]))
            centers[c] = rows[far]
            d2 = _sq_dists(rows, centers)
            labels = np.argmin(d2, axis=1)
        distortion = float(d2[np.arange(n), labels].sum())
        assert distortion <= prev + 1e-9 * (1.0 + abs(prev)), "distortion increased"
        trace.append(distortion)
        for c in range(m):
            sel = labels == c
            if np.any(sel):
                centers[c] = rows[sel].mean(axis=0)
        if prev - distortion < 1e-10:
            break
        prev = distortion
    d2 = _sq_dists(rows, centers)
    labels = np.argmin(d2, axis=1)
    distortion = float(d2[np.arange(n), labels].sum())
    return KMeansResult(labels + 1, centers, distortion, it, tuple(trace))


def _sq_dists(rows, centers):
    r2 = np.sum(rows * rows, axis=1)[:, None]
    c2 = np.sum(centers * centers, axis=1)[None, :]
    return np.maximum(r2 + c2 - 2.0 * rows @ centers.T, 0.0)


def _kmeans_pp(rows, m, rng):
    n = rows.shape[0]
    centers = np.empty((m, rows.shape[1]))
    first = int(rng.integers(n))
    centers[0] = rows[first]
    d2 = np.sum((rows - centers[0]) ** 2, axis=1)
    for c in range(1, m):
        total = float(d2.sum())
        if total <= 0:
            # All remaining mass is on chosen centers (duplicates); take the
            # first rows in index order.
            centers[c] = rows[min(c, n - 1)]
        else:
            pick = int(rng.choice(n, p=d2 / total))
            centers[c] = rows[pick]
        d2 = np.minimum(d2, np.sum((rows - centers[c]) ** 2, axis=1))
    return centers


def spectral_cluster(points: PointSet, m: int, gamma="auto",
                     mode: str = NJW_MODE, seed: int = 0):
    """Kernel affinity -> symmetric normalization -> top-M eigenvectors ->
    k-means, in either the row-normalized or the latent-feature variant.

    ``gamma="auto"`` searches gamma^2 over {2^p * median squared distance,
    p = -6..4} and keeps the value minimizing the k-means distortion of the
    row-normalized embedding (ties to the smallest gamma).

    Returns ``(labels, diagnostics)``.
    """
    if mode not in (NJW_MODE, LATENT_FEATURE_MODE):
        raise ParameterError(f"unknown mode {mode!r}")
    if not isinstance(points, PointSet):
        points = PointSet(points)
    d = distance_matrix(points)
    n = d.shape[0]
    if m > n:
        raise ParameterError(f"cannot form {m} clusters from {n} points")
    diagnostics: dict = {"mode": mode}
    if gamma == "auto":
        iu = np.triu_indices(n, 1)
        med = float(np.median(d[iu] ** 2)) if iu[0].size else 1.0
        med = med if med > 0 else 1.0
        grid = [float(np.sqrt(med * 2.0 ** p)) for p in range(-6, 5)]
        distortions = []
        for g in grid:
            try:
                rows, _, _ = _embedding(d, m, g, NJW_MODE)
                distortions.append(kmeans(rows, m, seed).distortion)
            except InputError:
                distortions.append(float("inf"))
        best = int(np.argmin(distortions))
        if not np.isfinite(distortions[best]):
            raise InputError("no feasible gamma in the search grid")
        gamma = grid[best]
        diagnostics["gamma_grid"] = grid
        diagnostics["grid_distortions"] = [float(x) for x in distortions]
    gamma = float(gamma)
    rows, evals, zero_rows = _embedding(d, m, gamma, mode)
    km = kmeans(rows, m, seed)
    diagnostics.update({
        "gamma": gamma,
        "eigenvalues": [float(v) for v in evals],
        "distortion": km.distortion,
        "zero_rows": zero_rows,
    })
    return km.labels, diagnostics


def _embedding(d, m, gamma, mode):
    a = normalize(kernel_affinity(d, gamma), NORM_SYM)
    if mode == LATENT_FEATURE_MODE:
        es = top_eigen(a, m)
        rows = latent_feature_map(a, m)
        return rows, es.values, 0
    es = top_eigen(a, m)
    rows, zero_rows = row_normalize(es.vectors)
    return rows, es.values, zero_rows
