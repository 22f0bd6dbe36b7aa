"""Artifact writers: CSV series, verdict JSON, SVG frames, polyline files."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .geometry import CSV_HEADER, IntersectionSample, Polyline
from .verdict import Verdict

FATTENING_HEADER = ["t", "fat_volume", "discrepancy", "verdict"]


def _write_rows(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    # newline="" and a fixed line terminator keep the bytes identical across runs and platforms
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(r)
    return path


def write_samples_csv(path: Path, samples: list[IntersectionSample]) -> Path:
    return _write_rows(Path(path), CSV_HEADER, (s.to_row() for s in samples))


def write_fattening_csv(path: Path, reports) -> Path:
    return _write_rows(Path(path), FATTENING_HEADER, (r.to_row() for r in reports))


def write_table_csv(path: Path, header: list[str], rows: list[list]) -> Path:
    def cell(x):
        if isinstance(x, bool) or x is None:
            return "" if x is None else str(x).lower()
        if isinstance(x, (float, np.floating)):
            return repr(float(x))
        return str(x)

    return _write_rows(Path(path), header, ([cell(x) for x in r] for r in rows))


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
    return path


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def write_verdict(path: Path, verdict: Verdict) -> Path:
    return write_json(path, verdict.to_json())


def read_verdict(path: Path) -> Verdict:
    return Verdict.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def write_polylines_csv(path: Path, curves: dict[str, list[np.ndarray]]) -> Path:
    """One row per vertex: curve label, piece index, x, y."""
    rows = []
    for label in sorted(curves):
        for k, c in enumerate(curves[label]):
            for x, y in np.asarray(c, dtype=float).reshape(-1, 2):
                rows.append([label, str(k), repr(float(x)), repr(float(y))])
    return _write_rows(Path(path), ["curve", "piece", "x", "y"], rows)


def svg_frame(curves: list[Polyline], markers: np.ndarray | None = None, t: float | None = None,
              size: int = 480, bounds: tuple[float, float, float, float] | None = None) -> str:
    """A self-contained SVG showing closed or open curves and intersection markers."""
    pts = [c.vertices for c in curves]
    if markers is not None and len(markers):
        pts.append(np.asarray(markers, dtype=float).reshape(-1, 2))
    if bounds is None:
        allp = np.vstack(pts) if pts else np.zeros((1, 2))
        lo, hi = allp.min(axis=0), allp.max(axis=0)
        pad = 0.05 * max(float((hi - lo).max()), 1e-9)
        bounds = (lo[0] - pad, lo[1] - pad, hi[0] + pad, hi[1] + pad)
    x0, y0, x1, y1 = bounds
    scale = size / max(x1 - x0, y1 - y0)

    def tx(p):
        return (p[:, 0] - x0) * scale, (y1 - p[:, 1]) * scale

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">', '<rect width="100%" height="100%" fill="white"/>']
    for k, c in enumerate(curves):
        X, Y = tx(c.vertices)
        d = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(X, Y))
        tag = "polygon" if c.closed else "polyline"
        out.append(f'<{tag} points="{d}" fill="none" stroke="{colors[k % len(colors)]}" stroke-width="1.2"/>')
    if markers is not None and len(markers):
        X, Y = tx(np.asarray(markers, dtype=float).reshape(-1, 2))
        for x, y in zip(X, Y):
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="black"/>')
    if t is not None:
        out.append(f'<text x="8" y="18" font-family="monospace" font-size="12">t = {t:.6g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_frames(directory: Path, frames: list[tuple[float, list[Polyline]]],
                 samples: list[IntersectionSample] | None = None) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    # one viewport for the whole sequence so frames can be flipped through
    allp = [c.vertices for _, cs in frames for c in cs]
    bounds = None
    if allp:
        p = np.vstack(allp)
        lo, hi = p.min(axis=0), p.max(axis=0)
        pad = 0.05 * max(float((hi - lo).max()), 1e-9)
        bounds = (lo[0] - pad, lo[1] - pad, hi[0] + pad, hi[1] + pad)
    paths = []
    for k, (t, curves) in enumerate(frames):
        marks = None
        if samples is not None and k < len(samples) and not samples[k].points.axisymmetric:
            marks = samples[k].points.points
        path = directory / f"frame_{k:04d}.svg"
        path.write_text(svg_frame(curves, marks, t, bounds=bounds), encoding="utf-8")
        paths.append(path)
    return paths
