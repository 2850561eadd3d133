"""Batch command-line front end: generate, fit, spectral, eval, sweep, plot.

Every run is fully determined by its flags (plus an optional SEED
environment variable that --seed overrides).  Output files are written to a
temporary name and renamed on success, so failures never leave partial
artifacts.  Exit codes: 0 success, 2 usage error, 3 data error,
4 numerical/model error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time

import numpy as np

from . import bench, latent_graph, oracle, spectral
from ._jsonutil import dumps_stable
from .affinity import PointSet, distance_matrix
from .errors import (
    InfeasiblePriorError,
    InputError,
    ModelError,
    ParameterError,
    ScaletreeError,
    StateError,
)

USAGE_EXIT = 2
DATA_EXIT = 3
MODEL_EXIT = 4


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".scaletree-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _default_seed(value):
    if value is not None:
        return int(value)
    env = os.environ.get("SEED")
    return int(env) if env else 0


def _parse_counts(text: str):
    parts = [int(v) for v in text.split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def _parse_float_list(text: str):
    return tuple(float(v) for v in text.split(","))


def _parse_centers(text: str):
    return tuple(tuple(float(v) for v in c.split(",")) for c in text.split(";"))


def _load_labels(path: str) -> np.ndarray:
    if path.endswith(".json"):
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if "labels" not in data:
            raise InputError(f"{path}: no 'labels' field")
        return np.asarray(data["labels"], dtype=int)
    points = bench.read_csv(path)
    if points.labels is None:
        raise InputError(f"{path}: no label column")
    return points.labels


def _load_edges(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return data.get("edges", [])


def cmd_generate(args) -> int:
    if args.manifest:
        spec = bench.manifest_spec(args.manifest)
        if args.seed is not None:
            spec = bench.GeneratorSpec(**{**spec.__dict__, "seed": int(args.seed)})
    else:
        if not args.kind:
            raise ParameterError("need --kind or --manifest")
        spec = bench.GeneratorSpec(
            kind=args.kind,
            n=_parse_counts(args.n),
            seed=_default_seed(args.seed),
            centers=_parse_centers(args.centers) if args.centers else None,
            scales=_parse_float_list(args.scales) if args.scales else None,
            radii=_parse_float_list(args.radii) if args.radii else None,
            noise=args.noise,
            ratio=args.ratio,
            spacing=args.spacing,
        )
    points = bench.generate(spec)
    _atomic_write(args.out, bench.csv_text(points))
    return 0


def _fit_config(args, n: int) -> latent_graph.FitConfig:
    config = latent_graph.FitConfig(
        n_classes=args.clusters,
        likelihood=args.likelihood,
        prior=latent_graph.PriorKind.parse(args.prior),
        max_sweeps=args.sweeps,
        restarts=args.restarts,
        seed=_default_seed(args.seed),
        tolerance=args.tol,
    )
    if args.clamp:
        with open(args.clamp, "r", encoding="utf-8") as fh:
            known = {int(k): int(v) for k, v in json.load(fh).items()}
        for idx in known:
            if not 0 <= idx < n:
                raise ParameterError(f"clamp index {idx} out of range for {n} points")
        config = latent_graph.clamp_labels(config, known)
    return config


def cmd_fit(args) -> int:
    points = bench.read_csv(args.input)
    d = distance_matrix(points)
    config = _fit_config(args, points.n)
    result = latent_graph.fit(d, config)
    _atomic_write(args.out, dumps_stable(result.to_json_dict(d)))
    return 0


def cmd_spectral(args) -> int:
    points = bench.read_csv(args.input)
    gamma = "auto" if args.gamma == "auto" else float(args.gamma)
    mode = {"njw": spectral.NJW_MODE, "latent-feature": spectral.LATENT_FEATURE_MODE}[args.mode]
    labels, diagnostics = spectral.spectral_cluster(
        points, args.clusters, gamma=gamma, mode=mode, seed=_default_seed(args.seed))
    payload = {"labels": [int(x) for x in labels], "diagnostics": diagnostics,
               "seed": _default_seed(args.seed)}
    _atomic_write(args.out, dumps_stable(payload))
    return 0


def cmd_eval(args) -> int:
    pred = _load_labels(args.pred)
    truth = _load_labels(args.truth)
    report = bench.metric_report(pred, truth)
    text = dumps_stable(report.to_json_dict())
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_sweep(args) -> int:
    points = bench.read_csv(args.input)
    d = distance_matrix(points)
    lo, hi = (int(v) for v in args.seeds.split(":"))
    if hi <= lo:
        raise ParameterError("seed range must be lo:hi with hi > lo")
    rows = ["seed,score,accuracy,ari,seconds,converged"]
    for seed in range(lo, hi):
        t0 = time.perf_counter()
        if args.method == "fit":
            config = latent_graph.FitConfig(
                n_classes=args.clusters,
                likelihood=args.likelihood,
                prior=latent_graph.PriorKind.parse(args.prior),
                max_sweeps=args.sweeps,
                restarts=args.restarts,
                seed=seed,
                tolerance=args.tol,
            )
            result = latent_graph.fit(d, config)
            labels, score, converged = result.labels, result.score, result.converged
        else:
            gamma = "auto" if args.gamma == "auto" else float(args.gamma)
            labels, diag = spectral.spectral_cluster(
                points, args.clusters, gamma=gamma, mode=spectral.NJW_MODE, seed=seed)
            score, converged = -diag["distortion"], True
        dt = time.perf_counter() - t0
        if points.labels is not None:
            acc = bench.best_perm_accuracy(labels, points.labels)
            ari = bench.adjusted_rand(labels, points.labels)
            acc_s, ari_s = format(acc, ".17g"), format(ari, ".17g")
        else:
            acc_s = ari_s = ""
        rows.append(f"{seed},{format(float(score), '.17g')},{acc_s},{ari_s},"
                    f"{format(dt, '.6g')},{int(converged)}")
    _atomic_write(args.out, "\n".join(rows) + "\n")
    return 0


_GLYPHS = ("circle", "square", "triangle", "diamond", "cross")
_COLORS = ("#1b6ca8", "#d1495b", "#66a182", "#edae49", "#775bb5",
           "#2e4057", "#8c5e58", "#4f9d9d")


def _svg_glyph(kind: str, x: float, y: float, size: float, color: str) -> str:
    s = size
    if kind == "circle":
        return f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{s:.2f}" fill="{color}"/>'
    if kind == "square":
        return (f'<rect x="{x - s:.2f}" y="{y - s:.2f}" width="{2 * s:.2f}" '
                f'height="{2 * s:.2f}" fill="{color}"/>')
    if kind == "triangle":
        pts = f"{x:.2f},{y - s:.2f} {x - s:.2f},{y + s:.2f} {x + s:.2f},{y + s:.2f}"
        return f'<polygon points="{pts}" fill="{color}"/>'
    if kind == "diamond":
        pts = f"{x:.2f},{y - s:.2f} {x + s:.2f},{y:.2f} {x:.2f},{y + s:.2f} {x - s:.2f},{y:.2f}"
        return f'<polygon points="{pts}" fill="{color}"/>'
    return (f'<path d="M {x - s:.2f} {y - s:.2f} L {x + s:.2f} {y + s:.2f} '
            f'M {x - s:.2f} {y + s:.2f} L {x + s:.2f} {y - s:.2f}" '
            f'stroke="{color}" stroke-width="1.5"/>')


def cmd_plot(args) -> int:
    points = bench.read_csv(args.input)
    if points.dim != 2:
        raise InputError(f"plotting needs 2-D points, got dimension {points.dim}")
    if args.labels:
        labels = _load_labels(args.labels)
        if labels.shape[0] != points.n:
            raise InputError("label count does not match point count")
    elif points.labels is not None:
        labels = points.labels
    else:
        labels = np.ones(points.n, dtype=int)
    edges = _load_edges(args.labels) if (args.edges and args.labels
                                         and args.labels.endswith(".json")) else []
    width = height = 640.0
    margin = 40.0
    xy = points.points
    lo = xy.min(axis=0)
    hi = xy.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    scale = min((width - 2 * margin) / span[0], (height - 2 * margin) / span[1])

    def to_px(p):
        x = margin + (p[0] - lo[0]) * scale
        y = height - margin - (p[1] - lo[1]) * scale
        return x, y

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
             f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
             f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>']
    for i, j, _c, _w in edges:
        xa, ya = to_px(xy[int(i)])
        xb, yb = to_px(xy[int(j)])
        parts.append(f'<line x1="{xa:.2f}" y1="{ya:.2f}" x2="{xb:.2f}" y2="{yb:.2f}" '
                     'stroke="#888888" stroke-width="0.8" stroke-dasharray="3,3"/>')
    values = sorted(set(int(v) for v in labels))
    for r in range(points.n):
        k = values.index(int(labels[r]))
        x, y = to_px(xy[r])
        parts.append(_svg_glyph(_GLYPHS[k % len(_GLYPHS)], x, y, 3.5,
                                _COLORS[k % len(_COLORS)]))
    parts.append("</svg>")
    _atomic_write(args.out, "\n".join(parts) + "\n")
    return 0


def cmd_oracle(args) -> int:
    # Hidden debugging helper: exhaustive MAP on a tiny CSV.
    points = bench.read_csv(args.input)
    d = distance_matrix(points)
    nn = d + np.where(np.eye(points.n, dtype=bool), np.inf, 0.0)
    nn_min = nn.min(axis=1)
    m = args.clusters
    if args.likelihood == latent_graph.GAUSSIAN:
        model = latent_graph.LikelihoodModel(
            latent_graph.GAUSSIAN,
            np.full(m, float(np.median(nn_min))),
            np.full(m, max(float(np.var(nn_min)), 1e-8)),
        )
    else:
        model = latent_graph.LikelihoodModel(
            latent_graph.EXPONENTIAL, np.full(m, 1.0 / max(float(np.median(nn_min)), 1e-12)))
    model = latent_graph.calibrate_background(d, model)
    result = oracle.enumerate_map(d, m, model, latent_graph.PriorKind.parse(args.prior))
    payload = {"labels": [int(x) for x in result.labels],
               "score": float(result.score),
               "states_examined": int(result.states_examined)}
    sys.stdout.write(dumps_stable(payload))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scaletree",
                                     description="Tree-structured generative clustering toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset CSV")
    p.add_argument("--kind", choices=[bench.BLOBS, bench.TWO_SCALE_OVERLAP, bench.RINGS])
    p.add_argument("--manifest", help="use a named canonical dataset spec")
    p.add_argument("--n", default="100", help="points per cluster (int or comma list)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--centers", help="blob centers as 'x,y;x,y'")
    p.add_argument("--scales", help="blob scales as comma list")
    p.add_argument("--radii", help="ring radii as comma list")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--ratio", type=float, default=None, help="density ratio (two_scale_overlap)")
    p.add_argument("--spacing", type=float, default=1.0, help="sparse-cluster mean spacing")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit the latent-graph model to a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--likelihood", choices=[latent_graph.GAUSSIAN, latent_graph.EXPONENTIAL],
                   default=latent_graph.GAUSSIAN)
    p.add_argument("--prior", default="connected", help="connected | kneighbor:K")
    p.add_argument("--sweeps", type=int, default=200)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--clamp", help="JSON file {point index: class}")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("spectral", help="spectral-clustering baseline")
    p.add_argument("--input", required=True)
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--gamma", default="auto", help="'auto' or a positive value")
    p.add_argument("--mode", choices=["njw", "latent-feature"], default="njw")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("eval", help="compare two label sources")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="repeat fit/spectral over a seed range")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=["fit", "spectral"], required=True)
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--seeds", default="0:10", help="half-open range lo:hi")
    p.add_argument("--likelihood", choices=[latent_graph.GAUSSIAN, latent_graph.EXPONENTIAL],
                   default=latent_graph.GAUSSIAN)
    p.add_argument("--prior", default="connected")
    p.add_argument("--sweeps", type=int, default=200)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--gamma", default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="2-D SVG scatter with optional tree edges")
    p.add_argument("--input", required=True)
    p.add_argument("--labels", help="labels JSON/CSV; defaults to the CSV truth column")
    p.add_argument("--edges", action="store_true", help="overlay graph edges from a fit JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("oracle")  # hidden debugging surface
    p.add_argument("--input", required=True)
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--likelihood", default=latent_graph.GAUSSIAN)
    p.add_argument("--prior", default="connected")
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (InputError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except (ModelError, StateError, InfeasiblePriorError, np.linalg.LinAlgError,
            FloatingPointError, ScaletreeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return MODEL_EXIT


if __name__ == "__main__":
    sys.exit(main())
