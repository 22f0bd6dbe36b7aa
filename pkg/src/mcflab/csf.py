"""Curve shortening flow of polylines with intersection monitors."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import shapely

from . import _kernels
from .errors import LabError
from .geometry import (
    IntersectionSample,
    Polyline,
    PointCloud,
    curvature,
    make_sample,
    polyline_intersections,
    resample,
    self_intersections,
)
from .verdict import Verdict, first_vanishing, increase_violations

CFL = 0.25
MAX_EDGE_RATIO = 10.0
AREA_CHECK_EVERY = 32
# a vertex turning by more than this fraction of a radian per edge means the
# polygon no longer resolves the curve: treat as the first singularity
SINGULAR_TURN = 0.5


@dataclass(frozen=True)
class CsfState:
    curve: Polyline
    t: float = 0.0
    alive: bool = True
    h_target: float = 0.0
    steps: int = 0
    reason: str = ""

    def __post_init__(self):
        if self.h_target <= 0:
            object.__setattr__(self, "h_target", self.curve.h)


def enclosed_area(curve: Polyline) -> float:
    """Area of the region where the winding number is nonzero."""
    if not curve.closed:
        return float("inf")
    ring = shapely.LinearRing(curve.vertices)
    if ring.is_simple:
        return abs(curve.signed_area())
    faces = shapely.polygonize(shapely.get_parts(shapely.node(ring)))
    return float(shapely.area(faces))


def curvature_vector(curve: Polyline) -> np.ndarray:
    """kappa * N per vertex, N the left normal of the central tangent."""
    v = curve.vertices
    k = curvature(curve)
    if curve.closed:
        tan = np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)
    else:
        tan = np.zeros_like(v)
        tan[1:-1] = v[2:] - v[:-2]
        tan[[0, -1]] = v[[1, -1]] - v[[0, -2]]
    tan /= np.hypot(*tan.T)[:, None]
    normal = np.column_stack([-tan[:, 1], tan[:, 0]])
    return k[:, None] * normal


def max_dt(curve: Polyline, cfl: float = CFL) -> float:
    return cfl * float(curve.edge_lengths().min()) ** 2


def step_csf(state: CsfState, dt: float, cfl: float = CFL) -> CsfState:
    """One explicit Euler step of curve shortening flow.

    Open curves keep their endpoints pinned.
    """
    if not state.alive:
        raise LabError("not-alive", "cannot step an extinct curve")
    if dt <= 0 or dt > max_dt(state.curve, cfl) * (1 + 1e-12):
        raise LabError("cfl-violation", f"dt={dt:.3g} exceeds {cfl}*h_min^2={max_dt(state.curve, cfl):.3g}")
    curve = state.curve
    vel = curvature_vector(curve)
    if not curve.closed:
        vel[[0, -1]] = 0.0
    new = curve.vertices + dt * vel
    try:
        out = Polyline(new, curve.closed)
        if out.edge_ratio() > MAX_EDGE_RATIO:
            out = _resample_same_count(out)
    except LabError:
        out = _resample_same_count(Polyline(_drop_coincident(new), curve.closed))
    steps = state.steps + 1
    nxt = CsfState(out, state.t + dt, True, state.h_target, steps)
    return _check_alive(nxt, force=steps % AREA_CHECK_EVERY == 0)


def _drop_coincident(v: np.ndarray) -> np.ndarray:
    keep = np.hypot(*np.diff(v, axis=0, append=v[:1]).T) > 0
    return v[keep]


def _resample_same_count(curve: Polyline) -> Polyline:
    n = len(curve)
    out = resample(curve, curve.length / (n if curve.closed else n - 1))
    return out


def _check_alive(state: CsfState, force: bool = True) -> CsfState:
    h = state.h_target
    curve = state.curve
    reason = ""
    if curve.length <= 10 * h:
        reason = "length-collapse"
    elif np.abs(curvature(curve)).max() * curve.h > SINGULAR_TURN:
        reason = "singularity"
    elif force and curve.closed and enclosed_area(curve) < (10 * h) ** 2:
        reason = "extinction"
    if reason:
        return replace(state, alive=False, reason=reason)
    return state


def evolve(state: CsfState, t_end: float, cfl: float = CFL) -> CsfState:
    """Advance to ``t_end`` with the largest stable steps, landing exactly on it.

    Same scheme as repeated ``step_csf`` calls, run in compiled batches.
    """
    if not state.alive or state.t >= t_end - 1e-15:
        return state
    closed = state.curve.closed
    h = state.h_target
    v = np.array(state.curve.vertices, dtype=float)
    t, steps = state.t, state.steps
    while True:
        t, k, status = _kernels.csf_batch(v, closed, t, t_end, cfl, AREA_CHECK_EVERY,
                                          MAX_EDGE_RATIO, SINGULAR_TURN, 10 * h)
        steps += k
        if status == _kernels.NEEDS_RESAMPLE:
            v = np.array(_resample_same_count(Polyline(_drop_coincident(v), closed)).vertices)
            continue
        if status == _kernels.SINGULAR:
            return CsfState(Polyline(v, closed), t, False, h, steps, "singularity")
        if status == _kernels.COLLAPSED:
            return CsfState(Polyline(v, closed), t, False, h, steps, "length-collapse")
        curve = Polyline(v, closed)
        if closed and enclosed_area(curve) < (10 * h) ** 2:
            return CsfState(curve, t, False, h, steps, "extinction")
        if t >= t_end - 1e-15:
            return CsfState(curve, t, True, h, steps)


@dataclass
class MonitorSeries:
    samples: list[IntersectionSample] = field(default_factory=list)
    t0_detected: float | None = None
    frames: list[tuple[float, list[Polyline]]] = field(default_factory=list)

    def counts(self) -> list[int]:
        return [s.components for s in self.samples]

    def point_counts(self) -> list[int]:
        return [len(s.points) for s in self.samples]


def sample_times(T: float, sample_dt: float) -> np.ndarray:
    if not (T > 0 and 0 < sample_dt <= T):
        raise LabError("invalid-argument", "need T > 0 and 0 < sample_dt <= T")
    k = int(np.floor(T / sample_dt + 1e-9))
    return sample_dt * np.arange(k + 1)


def _count_verdict(name: str, series: MonitorSeries, tolerances: dict, require_embedded: bool = False) -> Verdict:
    counts = series.counts()
    verdict = Verdict(name, tolerances=tolerances)
    bad, transient = increase_violations(counts)
    for i in transient:
        verdict.note(i, series.samples[i].t, "transient-increase-forgiven")
    for i in bad:
        verdict.note(i, series.samples[i].t, "monotone_count:increase")
    if require_embedded:
        zero_at = next((i for i, c in enumerate(counts) if c == 0), None)
        if zero_at is not None:
            for i in range(zero_at + 1, len(counts)):
                if counts[i] > 0 and i not in transient:
                    verdict.note(i, series.samples[i].t, "monotone_count:embeddedness-lost")
                    bad.append(i)
    for i, s in enumerate(series.samples):
        for f in s.flags:
            verdict.note(i, s.t, f)
    verdict.monotone_count = not bad
    verdict.t0_detected = series.t0_detected
    verdict.summary = {"counts": counts}
    return verdict


def run_pair_monitor(a0: Polyline, b0: Polyline, T: float, sample_dt: float,
                     cfl: float = CFL, record_frames: bool = False) -> tuple[MonitorSeries, Verdict]:
    """Evolve two curves on a shared clock and sample their intersections."""
    if len(a0) == len(b0) and np.array_equal(a0.vertices, b0.vertices):
        raise LabError("identical-inputs", "the two initial curves coincide")
    if not (a0.closed and b0.closed):
        raise LabError("invalid-curve", "pair monitor needs closed curves")
    h = max(a0.h, b0.h)
    link_r = 2.0 * h
    times = sample_times(T, sample_dt)
    a, b = CsfState(a0), CsfState(b0)
    series = MonitorSeries()
    for ts in times:
        # both curves land exactly on every sample time
        a = evolve(a, float(ts), cfl)
        b = evolve(b, float(ts), cfl)
        flags = []
        if a.alive and b.alive:
            cloud, n_tan = polyline_intersections(a.curve, b.curve, return_tangential=True)
            if n_tan:
                flags.append("tangency")
        else:
            cloud = PointCloud(np.zeros((0, 2)))
            flags.append("extinct:" + (a.reason or b.reason))
        series.samples.append(make_sample(float(ts), cloud, link_r, flags=flags))
        if record_frames:
            series.frames.append((float(ts), [s.curve for s in (a, b) if s.alive]))
    series.t0_detected = first_vanishing([s.t for s in series.samples], [s.empty for s in series.samples])
    tol = {"cfl": cfl, "link_r": link_r, "dedup_r": 0.25 * min(a0.h, b0.h),
           "tol_touch": 0.5 * min(a0.h, b0.h), "extinction_area": (10 * h) ** 2,
           "max_edge_ratio": MAX_EDGE_RATIO, "transient_samples_forgiven": 1}
    return series, _count_verdict("csf_pair", series, tol)


def run_self_monitor(c0: Polyline, T: float, sample_dt: float, cfl: float = CFL,
                     record_frames: bool = False) -> tuple[MonitorSeries, Verdict]:
    """Evolve one (possibly immersed) curve and sample its self-intersections."""
    if not c0.closed:
        raise LabError("invalid-curve", "self monitor needs a closed curve")
    link_r = 2.0 * c0.h
    state = CsfState(c0)
    series = MonitorSeries()
    for ts in sample_times(T, sample_dt):
        state = evolve(state, float(ts), cfl)
        if state.alive:
            cloud, flags = self_intersections(state.curve), []
        else:
            cloud, flags = PointCloud(np.zeros((0, 2))), ["extinct:" + state.reason]
        series.samples.append(make_sample(float(ts), cloud, link_r, flags=flags))
        if record_frames:
            series.frames.append((float(ts), [state.curve] if state.alive else []))
        if not state.alive:
            break
    series.t0_detected = first_vanishing([s.t for s in series.samples], [s.empty for s in series.samples])
    tol = {"cfl": cfl, "link_r": link_r, "dedup_r": 0.25 * c0.h, "extinction_area": (10 * c0.h) ** 2,
           "singular_turn": SINGULAR_TURN, "max_edge_ratio": MAX_EDGE_RATIO, "transient_samples_forgiven": 1}
    return series, _count_verdict("csf_self", series, tol, require_embedded=True)
