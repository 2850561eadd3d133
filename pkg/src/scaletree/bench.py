"""Synthetic datasets, clustering metrics, and CSV I/O."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.optimize import linear_sum_assignment

from .affinity import PointSet
from .errors import InputError, ParameterError, ParseError

BLOBS = "blobs"
TWO_SCALE_OVERLAP = "two_scale_overlap"
RINGS = "rings"


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for one synthetic dataset; identical specs generate identical data.

    ``n`` is the per-cluster count (an int, or one int per cluster).  Blobs
    take ``centers``/``scales``; rings take ``radii`` and a radial ``noise``;
    two_scale_overlap scatters a sparse uniform cluster with mean spacing
    ``spacing`` and drops a ``ratio``-times-denser cluster inside its hull.
    """

    kind: str
    n: int | tuple[int, ...] = 100
    seed: int = 0
    centers: tuple[tuple[float, ...], ...] | None = None
    scales: tuple[float, ...] | float | None = None
    radii: tuple[float, ...] | None = None
    noise: float = 0.0
    ratio: float | None = None
    spacing: float = 1.0

    def __post_init__(self):
        if self.kind not in (BLOBS, TWO_SCALE_OVERLAP, RINGS):
            raise ParameterError(f"unknown generator kind {self.kind!r}")
        if self.kind == TWO_SCALE_OVERLAP:
            if self.ratio is None or self.ratio <= 1:
                raise ParameterError("two_scale_overlap needs ratio > 1")
            if self.spacing <= 0:
                raise ParameterError("spacing must be positive")
        if self.noise < 0:
            raise ParameterError("noise must be nonnegative")

    def counts(self, n_clusters: int) -> list[int]:
        if isinstance(self.n, (tuple, list)):
            if len(self.n) != n_clusters:
                raise ParameterError(f"need {n_clusters} per-cluster counts")
            counts = [int(x) for x in self.n]
        else:
            counts = [int(self.n)] * n_clusters
        if min(counts) < 1:
            raise ParameterError("per-cluster counts must be >= 1")
        return counts


def generate(spec: GeneratorSpec) -> PointSet:
    """Materialize a spec into labeled points; pure function of the spec."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind == BLOBS:
        centers = spec.centers if spec.centers is not None else ((-4.0, 0.0), (4.0, 0.0))
        centers = [np.asarray(c, dtype=float) for c in centers]
        counts = spec.counts(len(centers))
        scales = spec.scales if spec.scales is not None else 1.0
        if not isinstance(scales, (tuple, list)):
            scales = [float(scales)] * len(centers)
        parts, labels = [], []
        for k, (c, cnt, s) in enumerate(zip(centers, counts, scales), start=1):
            parts.append(c[None, :] + rng.normal(0.0, float(s), size=(cnt, c.size)))
            labels += [k] * cnt
        return PointSet(np.vstack(parts), np.asarray(labels))
    if spec.kind == RINGS:
        radii = spec.radii if spec.radii is not None else (1.0, 3.0)
        counts = spec.counts(len(radii))
        parts, labels = [], []
        for k, (r, cnt) in enumerate(zip(radii, counts), start=1):
            theta = np.linspace(0.0, 2.0 * np.pi, cnt, endpoint=False)
            rr = float(r) + rng.normal(0.0, spec.noise, size=cnt)
            parts.append(np.column_stack([rr * np.cos(theta), rr * np.sin(theta)]))
            labels += [k] * cnt
        return PointSet(np.vstack(parts), np.asarray(labels))
    # two_scale_overlap: uniform squares sized for the requested mean
    # nearest-neighbor spacing (side = 2 * spacing * sqrt(n)).
    counts = spec.counts(2)
    n_sparse, n_dense = counts
    side_sparse = 2.0 * spec.spacing * np.sqrt(n_sparse)
    side_dense = 2.0 * (spec.spacing / spec.ratio) * np.sqrt(n_dense)
    sparse = rng.uniform(-side_sparse / 2, side_sparse / 2, size=(n_sparse, 2))
    dense = rng.uniform(-side_dense / 2, side_dense / 2, size=(n_dense, 2))
    pts = np.vstack([sparse, dense])
    labels = np.asarray([1] * n_sparse + [2] * n_dense)
    return PointSet(pts, labels)


@dataclass
class MetricReport:
    accuracy: float
    ari: float
    confusion: list[list[int]]
    truth_values: list[int] = field(default_factory=list)
    pred_values: list[int] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "accuracy": float(self.accuracy),
            "ari": float(self.ari),
            "confusion": self.confusion,
            "truth_values": self.truth_values,
            "pred_values": self.pred_values,
        }


def _contingency(pred, truth):
    pred = np.asarray(pred, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if pred.shape != truth.shape:
        raise InputError("label vectors must have equal length")
    tv = np.unique(truth)
    pv = np.unique(pred)
    table = np.zeros((tv.size, pv.size), dtype=int)
    for a, t in enumerate(tv):
        sel = truth == t
        for b, p in enumerate(pv):
            table[a, b] = int(np.count_nonzero(pred[sel] == p))
    return table, tv, pv


def best_perm_accuracy(pred, truth) -> float:
    """Fraction of agreeing labels under the best renaming of predictions.

    Exhaustive over permutations up to 4 label values, Hungarian assignment
    beyond that.
    """
    table, tv, pv = _contingency(pred, truth)
    n = int(table.sum())
    side = max(tv.size, pv.size)
    square = np.zeros((side, side), dtype=int)
    square[: tv.size, : pv.size] = table
    if side <= 4:
        best = max(sum(int(square[perm[b], b]) for b in range(side))
                   for perm in itertools.permutations(range(side)))
    else:
        r, c = linear_sum_assignment(-square)
        best = int(square[r, c].sum())
    return best / n


def adjusted_rand(pred, truth) -> float:
    """Adjusted Rand index from the pair-counting contingency table."""
    table, _, _ = _contingency(pred, truth)
    n = int(table.sum())

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_cells = float(sum(comb2(int(v)) for v in table.ravel()))
    sum_rows = float(sum(comb2(int(v)) for v in table.sum(axis=1)))
    sum_cols = float(sum(comb2(int(v)) for v in table.sum(axis=0)))
    total = comb2(n)
    expected = sum_rows * sum_cols / total if total else 0.0
    maximum = 0.5 * (sum_rows + sum_cols)
    if maximum == expected:
        return 1.0
    return (sum_cells - expected) / (maximum - expected)


def metric_report(pred, truth) -> MetricReport:
    table, tv, pv = _contingency(pred, truth)
    return MetricReport(
        accuracy=best_perm_accuracy(pred, truth),
        ari=adjusted_rand(pred, truth),
        confusion=[[int(v) for v in row] for row in table],
        truth_values=[int(v) for v in tv],
        pred_values=[int(v) for v in pv],
    )


# ---------------------------------------------------------------------------
# CSV I/O: header x0,...,x{d-1}[,label], 17 significant digits
# ---------------------------------------------------------------------------

def csv_text(points: PointSet) -> str:
    cols = [f"x{k}" for k in range(points.dim)]
    if points.labels is not None:
        cols.append("label")
    lines = [",".join(cols)]
    for r in range(points.n):
        vals = [format(float(v), ".17g") for v in points.points[r]]
        if points.labels is not None:
            vals.append(str(int(points.labels[r])))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def write_csv(points: PointSet, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text(points))


def read_csv(path) -> PointSet:
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise ParseError(f"{path}: empty file")
    header = raw[0].split(",")
    has_label = header and header[-1] == "label"
    coord_cols = header[:-1] if has_label else header
    if coord_cols != [f"x{k}" for k in range(len(coord_cols))] or not coord_cols:
        raise ParseError(f"{path}: line 1: bad header {raw[0]!r}")
    rows, labels = [], []
    for ln, line in enumerate(raw[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != len(header):
            raise ParseError(f"{path}: line {ln}: expected {len(header)} fields, got {len(fields)}")
        try:
            rows.append([float(v) for v in fields[: len(coord_cols)]])
            if has_label:
                labels.append(int(fields[-1]))
        except ValueError as exc:
            raise ParseError(f"{path}: line {ln}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: no data rows")
    return PointSet(np.asarray(rows), np.asarray(labels) if has_label else None)


# ---------------------------------------------------------------------------
# canonical dataset manifest
# ---------------------------------------------------------------------------

def load_manifest() -> dict:
    """Frozen canonical dataset specs shipped with the package.

    Each entry maps a name to a ``GeneratorSpec`` plus ``eval_seeds``, the
    number of algorithm seeds the acceptance runs average over.
    """
    text = resources.files("scaletree").joinpath("data/manifest.json").read_text("utf-8")
    raw = json.loads(text)
    out = {}
    for name, entry in raw.items():
        eval_seeds = int(entry.pop("eval_seeds", 20))
        for key in ("n", "radii", "scales"):
            if key in entry and isinstance(entry[key], list):
                entry[key] = tuple(entry[key])
        if "centers" in entry and entry["centers"] is not None:
            entry["centers"] = tuple(tuple(c) for c in entry["centers"])
        out[name] = {"spec": GeneratorSpec(**entry), "eval_seeds": eval_seeds}
    return out


def manifest_spec(name: str) -> GeneratorSpec:
    manifest = load_manifest()
    if name not in manifest:
        raise ParameterError(f"unknown manifest entry {name!r}; have {sorted(manifest)}")
    return manifest[name]["spec"]
