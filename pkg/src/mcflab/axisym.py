"""Rotationally symmetric mean curvature flow through meridian profiles.

Profiles are stored in meridian coordinates (r, a): r is the distance to the
rotation axis and a the position along it. ``axis`` records how the meridian
plane sits in the world picture: "y" means world (x, y) = (r, a), "x" means
world (x, y) = (a, r). Closed profiles run counter-clockwise in the (r, a)
plane; open profiles run from a low-a end to a high-a end along r > 0, so the
left normal points into the enclosed region in both cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import shapely
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline
from scipy.optimize import root

from . import _kernels
from .errors import LabError
from .geometry import (
    IntersectionSample,
    Polyline,
    PointCloud,
    ScalarField2D,
    box_dimension,
    measure_estimate,
    resample,
)
from .verdict import Verdict, increase_violations

CFL = 0.25
MAX_EDGE_RATIO = 4.0
BATCH = 32
SINGULAR_TURN = 0.5


@dataclass(frozen=True, eq=False)
class AxisymState:
    profile: Polyline  # meridian coordinates (r, a)
    n: int = 2
    t: float = 0.0
    reflection_symmetric: bool = False
    axis: str = "y"
    h_target: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise LabError("invalid-state", "hypersurface dimension n must be >= 2")
        if self.axis not in ("x", "y"):
            raise LabError("invalid-state", "axis must be 'x' or 'y'")
        if self.h_target <= 0:
            object.__setattr__(self, "h_target", self.profile.h)
        r = self.profile.vertices[:, 0]
        if np.any(r < 0):
            raise LabError("invalid-state", "profile must lie in r >= 0")
        inner = r if self.profile.closed else r[1:-1]
        if np.any(inner < self.profile.h / 10):
            raise LabError("axis-collision", "non-pole vertex within h/10 of the axis")

    @property
    def poles(self) -> tuple[bool, bool]:
        if self.profile.closed:
            return (False, False)
        r = self.profile.vertices[:, 0]
        return (bool(r[0] == 0.0), bool(r[-1] == 0.0))

    def world(self) -> Polyline:
        v = self.profile.vertices
        return Polyline(v if self.axis == "y" else v[:, ::-1], self.profile.closed)

    @classmethod
    def from_world(cls, world: Polyline, axis: str = "y", **kw) -> "AxisymState":
        v = world.vertices if axis == "y" else world.vertices[:, ::-1]
        return cls(Polyline(v, world.closed), axis=axis, **kw)


# --------------------------------------------------------------------------
# curvature and stepping


def mean_curvature(state: AxisymState) -> np.ndarray:
    """Per-vertex mean curvature with respect to the inward normal."""
    v = np.ascontiguousarray(state.profile.vertices)
    out_h = np.empty(len(v))
    vel = np.empty_like(v)
    p0, p1 = state.poles
    _kernels.axisym_velocity(v, state.profile.closed, p0, p1, state.n, out_h, vel)
    return out_h


def normal_velocity(state: AxisymState) -> np.ndarray:
    v = np.ascontiguousarray(state.profile.vertices)
    out_h = np.empty(len(v))
    vel = np.empty_like(v)
    p0, p1 = state.poles
    _kernels.axisym_velocity(v, state.profile.closed, p0, p1, state.n, out_h, vel)
    return vel


def mirror_index(m: int, closed: bool) -> np.ndarray:
    """Index of the reflected partner (a -> -a) for symmetric vertex layouts."""
    k = np.arange(m)
    return (m - k) % m if closed else m - 1 - k


def symmetrize(v: np.ndarray, closed: bool) -> np.ndarray:
    j = mirror_index(len(v), closed)
    out = np.empty_like(v)
    out[:, 0] = 0.5 * (v[:, 0] + v[j, 0])
    out[:, 1] = 0.5 * (v[:, 1] - v[j, 1])
    return out


def symmetry_defect(state: AxisymState) -> float:
    v = state.profile.vertices
    j = mirror_index(len(v), state.profile.closed)
    return float(np.hypot(v[:, 0] - v[j, 0], v[:, 1] + v[j, 1]).max())


def _relayout(v: np.ndarray, closed: bool, symmetric: bool) -> np.ndarray:
    """Equal-arclength redistribution keeping vertex count (and mirror layout)."""
    curve = Polyline(v, closed)
    m = len(v)
    out = np.array(resample(curve, curve.length / (m if closed else m - 1)).vertices)
    if len(out) != m:
        raise LabError("resample-failed", "vertex count changed")
    if symmetric and closed:
        # anchor the layout at vertex 0, which sits on the symmetry line
        out = symmetrize(out, closed)
    elif symmetric:
        out = symmetrize(out, closed)
    return out


def step_axisym(state: AxisymState, dt: float, cfl: float = CFL) -> AxisymState:
    """One explicit step of normal speed H."""
    v = np.array(state.profile.vertices)
    hmin = float(state.profile.edge_lengths().min())
    if not 0 < dt <= cfl * hmin * hmin * (1 + 1e-12):
        raise LabError("cfl-violation", f"dt={dt:.3g} exceeds {cfl}*h_min^2")
    v += dt * normal_velocity(state)
    p0, p1 = state.poles
    if p0:
        v[0, 0] = 0.0
    if p1:
        v[-1, 0] = 0.0
    if state.reflection_symmetric:
        v = symmetrize(v, state.profile.closed)
    curve = Polyline(v, state.profile.closed)
    if curve.edge_ratio() > MAX_EDGE_RATIO:
        v = _relayout(v, curve.closed, state.reflection_symmetric)
        curve = Polyline(v, curve.closed)
    return replace(state, profile=curve, t=state.t + dt)


def evolve_axisym(state: AxisymState, t_end: float, cfl: float = CFL) -> AxisymState:
    """Advance to ``t_end`` in compiled batches; raises on axis collision or singularity."""
    if state.t >= t_end - 1e-15:
        return state
    closed = state.profile.closed
    p0, p1 = state.poles
    v = np.array(state.profile.vertices)
    t = state.t
    while True:
        t, _, status = _kernels.axisym_batch(v, closed, p0, p1, state.n, t, t_end, cfl, BATCH,
                                            MAX_EDGE_RATIO, SINGULAR_TURN, state.h_target / 10)
        if state.reflection_symmetric:
            v = symmetrize(v, closed)
        if status == _kernels.NEEDS_RESAMPLE:
            v = _relayout(v, closed, state.reflection_symmetric)
            continue
        if status == _kernels.AXIS_COLLISION:
            raise LabError("axis-collision", f"non-pole vertex reached the axis at t={t:.6g}")
        if status == _kernels.SINGULAR:
            raise LabError("singularity", f"curvature no longer resolved at t={t:.6g}")
        if t >= t_end - 1e-15:
            return replace(state, profile=Polyline(v, closed), t=t)


def max_abs_h(state: AxisymState) -> float:
    return float(np.abs(mean_curvature(state)).max())


# --------------------------------------------------------------------------
# standard shapes


def sphere_profile(R: float, h: float, n: int = 2, center_a: float = 0.0, axis: str = "y") -> AxisymState:
    m = max(8, int(round(math.pi * R / h)))
    th = np.linspace(-math.pi / 2, math.pi / 2, m + 1)
    v = np.column_stack([R * np.cos(th), center_a + R * np.sin(th)])
    v[[0, -1], 0] = 0.0
    return AxisymState(Polyline(v, closed=False), n=n, reflection_symmetric=center_a == 0.0, axis=axis)


def cylinder_profile(r0: float, half_length: float, h: float, n: int = 2) -> AxisymState:
    m = max(8, int(round(2 * half_length / h)))
    a = np.linspace(-half_length, half_length, m + 1)
    return AxisymState(Polyline(np.column_stack([np.full_like(a, r0), a]), closed=False), n=n,
                       reflection_symmetric=True)


def circle_profile(center_r: float, radius: float, h: float, n: int = 2) -> AxisymState:
    m = 2 * max(4, int(round(math.pi * radius / h)))
    th = -math.pi + 2 * math.pi * np.arange(m) / m  # vertex 0 at the inner point
    v = np.column_stack([center_r + radius * np.cos(th), radius * np.sin(th)])
    return AxisymState(Polyline(v), n=n, reflection_symmetric=True)


# --------------------------------------------------------------------------
# plane y = 0 crossings (marriage ring)


def axis_plane_crossings(profile: Polyline) -> np.ndarray:
    """Radii where the meridian crosses a = 0, by linear interpolation along edges."""
    p, q = profile.edges()
    a0, a1 = p[:, 1], q[:, 1]
    hit = ((a0 <= 0) & (a1 > 0)) | ((a0 > 0) & (a1 <= 0))
    s = a0[hit] / (a0[hit] - a1[hit])
    r = p[hit, 0] + s * (q[hit, 0] - p[hit, 0])
    return np.sort(r)


def section_radii(state: AxisymState) -> np.ndarray:
    """Radii where the meridian section meets a = 0.

    A pole-to-pole profile is half of its section curve (the other half is
    its mirror image across the axis), so its single crossing counts twice.
    """
    r = axis_plane_crossings(state.profile)
    if all(state.poles) and len(r) == 1:
        r = np.repeat(r, 2)
    return r


@dataclass(frozen=True)
class RingRadii:
    r_min: float
    r_max: float
    t: float

    def __post_init__(self):
        if not 0 < self.r_min <= self.r_max:
            raise LabError("invalid-radii", "need 0 < r_min <= r_max")


# --------------------------------------------------------------------------
# marriage ring


RING_C = 12.0  # decay rate of the inner bump
RING_P = 3  # order of contact of the inner bump at the innermost point
RING_G_MIN, RING_G_MAX, RING_G_INNER = 0.1, 10.0, 5.0


def _ring_g(s, a, B, c=RING_C, p=RING_P):
    """Radius of curvature as a function of sin(theta).

    A steep rise to 10 near the outermost point plus a bump (1+s)^p e^{-c(1+s)}
    that is flat to order p at the innermost point, so curvature stays close
    to 10 over several edges there.
    """
    s = np.asarray(s, dtype=float)
    # (e^{-a(1-s)} - e^{-2a}) / (1 - e^{-2a}), written to stay finite for large a
    rise = -np.expm1(-a * (1 + s)) * np.exp(-a * (1 - s)) / -np.expm1(-2 * a)
    sigma = 1 + s
    top = RING_G_MAX - RING_G_MIN - B * 2.0**p * math.exp(-2 * c)  # g(1) = RING_G_MAX exactly
    return RING_G_MIN + top * rise + B * sigma**p * np.exp(-c * sigma)


_GL_T, _GL_W = np.polynomial.legendre.leggauss(800)
_HALF_THETA = 0.5 * math.pi * _GL_T  # nodes on (-pi/2, pi/2)
_HALF_W = 0.5 * math.pi * _GL_W


def _ring_closure(params):
    a, B = params
    g = _ring_g(np.sin(_HALF_THETA), a, B)
    width = float(np.dot(_HALF_W, g * np.cos(_HALF_THETA))) - 1.0
    lift = float(np.dot(_HALF_W, g * np.sin(_HALF_THETA)))
    return [width, lift]


def ring_shape_parameters() -> tuple[float, float]:
    """Solve the two closure conditions (unit width, zero lift) for (a, B)."""
    sol = root(_ring_closure, x0=[250.0, 2600.0], method="hybr", tol=1e-14)
    a, B = (float(x) for x in sol.x)
    if not sol.success or max(abs(x) for x in _ring_closure(sol.x)) > 1e-10 or a <= 0 or B <= 0:
        raise LabError("profile-closure-failed", f"closure solve did not converge: {sol.message}")
    s = np.linspace(-1, 1, 20001)
    g = _ring_g(s, a, B)
    if g.min() < RING_G_MIN - 1e-12 or g.max() > RING_G_MAX * (1 + 1e-9):
        raise LabError("profile-closure-failed", "curvature bounds violated")
    if g[s <= 0].max() > RING_G_INNER:
        raise LabError("profile-closure-failed", "inner half curvature below 1/5")
    return a, B


def ring_theta_curve(m_fine: int = 400_000):
    """Fine (theta, position) samples of the unit-width ring cross-section.

    theta is the tangent angle, starting at 3*pi/2 (the point nearest the
    axis) and running once around counter-clockwise. The start sits at the
    origin.
    """
    a, B = ring_shape_parameters()
    th = 1.5 * math.pi + 2 * math.pi * np.arange(m_fine + 1) / m_fine
    rho = _ring_g(np.sin(th), a, B)
    x = cumulative_trapezoid(rho * np.cos(th), th, initial=0.0)
    y = cumulative_trapezoid(rho * np.sin(th), th, initial=0.0)
    s = cumulative_trapezoid(rho, th, initial=0.0)
    return th, np.column_stack([x, y]), s, rho


def marriage_ring_profile(n: int = 2, h: float | None = None, min_vertices: int = 1024) -> AxisymState:
    """Convex, x-axis symmetric meridian with r_min = 10n, r_max = r_min + 1.

    Curvature is 10 at the innermost point, 1/10 at the outermost point, at
    least 1/5 on the inner half (tangent pointing down), and in between
    everywhere.
    """
    if n < 2:
        raise LabError("invalid-argument", "n must be >= 2")
    th, pos, s, _ = ring_theta_curve()
    L = s[-1]
    if np.hypot(*pos[-1]) > 1e-6:
        raise LabError("profile-closure-failed", f"closure gap {np.hypot(*pos[-1]):.2e}")
    m = int(math.ceil(L / h)) if h else min_vertices
    m = max(m, min_vertices)
    m += m % 2
    targets = L * np.arange(m) / m
    v = np.column_stack([np.interp(targets, s, pos[:, 0]), np.interp(targets, s, pos[:, 1])])
    v[:, 0] += 10.0 * n
    state = AxisymState(Polyline(v), n=n, reflection_symmetric=True, axis="y")
    return replace(state, profile=Polyline(symmetrize(v, True)))


def ring_exact_curvature(theta) -> np.ndarray:
    a, B = ring_shape_parameters()
    return 1.0 / _ring_g(np.sin(theta), a, B)


def smooth_horizon(state: AxisymState, cap: float = 0.02, probe_dt: float | None = None) -> float:
    """First time max|H| reaches twice its initial value, capped."""
    h0 = max_abs_h(state)
    probe_dt = probe_dt or cap / 100
    s = state
    t = state.t
    while t < state.t + cap - 1e-15:
        t = min(t + probe_dt, state.t + cap)
        try:
            s = evolve_axisym(s, t)
        except LabError:
            return t - probe_dt - state.t
        if max_abs_h(s) >= 2 * h0:
            return t - state.t
    return cap


@dataclass(frozen=True)
class RingRecord:
    t: float
    radii: RingRadii | None
    measure: float
    flags: tuple[str, ...] = ()

    def to_sample(self, n: int) -> IntersectionSample:
        radii = [] if self.radii is None else [self.radii.r_min, self.radii.r_max]
        cloud = PointCloud(radii, ambient_n=n, axisymmetric=True)
        dim = box_dimension(cloud) if radii else None
        comps = len(radii)
        return IntersectionSample(self.t, cloud, comps, self.measure,
                                  None if dim is None else min(max(dim, 0.0), n), self.flags)


def ring_intersection_series(state0: AxisymState, T: float, sample_dt: float,
                             delta: float | None = None) -> tuple[list[RingRecord], Verdict]:
    """Sample r_min, r_max and the measure of the intersection with {a = 0}."""
    from .csf import sample_times

    if not state0.reflection_symmetric:
        raise LabError("invalid-state", "ring series needs a reflection-symmetric profile")
    n = state0.n
    if delta is None:
        delta = smooth_horizon(state0, cap=min(0.02, T))
    records: list[RingRecord] = []
    state = state0
    for ts in sample_times(T, sample_dt):
        state = evolve_axisym(state, state0.t + float(ts))
        r = section_radii(state)
        if len(r) != 2:
            records.append(RingRecord(float(ts), None, 0.0, ("topology-change",)))
            break
        m = measure_estimate(PointCloud(r, ambient_n=n, axisymmetric=True), n)
        records.append(RingRecord(float(ts), RingRadii(float(r[0]), float(r[1]), float(ts)), m))
    verdict = ring_verdict(records, n, delta)
    return records, verdict


def ring_verdict(records: list[RingRecord], n: int, delta: float) -> Verdict:
    v = Verdict("marriage_ring", tolerances={"delta": delta, "delta_cap": 0.02, "h_double_factor": 2.0,
                                             "cfl": CFL, "max_edge_ratio": MAX_EDGE_RATIO})
    measures = [r.measure for r in records]
    comps = [0 if r.radii is None else 2 for r in records]
    bad_count, _ = increase_violations(comps)
    rises = [i for i in range(1, len(measures)) if measures[i] > measures[i - 1]]
    in_window = [r for r in records if r.t <= delta + 1e-12 and r.radii is not None]
    strictly_up = all(b.measure > a.measure for a, b in zip(in_window, in_window[1:]))
    for i in rises:
        v.note(i, records[i].t, "monotone_measure:increase")
    for i, r in enumerate(records):
        for f in r.flags:
            v.note(i, r.t, f)
    if strictly_up and len(in_window) >= 2:
        v.note(records.index(in_window[-1]), in_window[-1].t, "measure increased on [0,δ]")
    v.monotone_measure = not rises
    v.monotone_count = not bad_count
    # the intersection stays a pair of round (n-1)-spheres: dimension n-1 throughout
    v.monotone_dim = all(r.radii is not None for r in records)
    if not v.monotone_dim:
        v.note(len(records) - 1, records[-1].t, "monotone_dim:topology-change")
    r_mins = [r.radii.r_min for r in in_window]
    r_maxs = [r.radii.r_max for r in in_window]
    v.summary = {
        "delta": delta,
        "measure_strictly_increasing_on_delta": bool(strictly_up),
        "r_min_nondecreasing": all(b >= a for a, b in zip(r_mins, r_mins[1:])),
        "r_max_nonincreasing": all(b <= a for a, b in zip(r_maxs, r_maxs[1:])),
        "measure": measures,
    }
    return v


def ring_local_patches(state: AxisymState, half_width: float = 0.03, nodes: int = 33):
    """Lift the ring and the plane {a = 0} to graphs near the inner crossing.

    Both surfaces are written as graphs over the plane through the crossing
    point tilted 45 degrees in the meridian plane, spanned by (1, 1)/sqrt(2)
    and the rotation direction. Returns a ``GraphPair`` (ring, plane).
    """
    from .graphical import GraphPair

    prof = state.profile
    if not prof.closed:
        raise LabError("invalid-state", "patches need a closed ring profile")
    v = prof.vertices
    r_min = axis_plane_crossings(prof)[0]
    # spline of the profile by arclength, periodic
    ring = np.vstack([v, v[:1]])
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(ring, axis=0).T))])
    spl = CubicSpline(s, ring, bc_type="periodic")
    # the inner crossing: a = 0 with r near r_min
    i0 = int(np.argmin(np.hypot(v[:, 0] - r_min, v[:, 1])))
    s_tip = s[i0]
    h = 2 * half_width / (nodes - 1)
    g = -half_width + h * np.arange(nodes)
    XI, ETA = np.meshgrid(g, g)
    sq2 = math.sqrt(2.0)

    def F(sv):
        p = spl(sv)
        rr, aa = p[..., 0], p[..., 1]
        return rr * np.sqrt(1 - (ETA / rr) ** 2) - r_min + aa - sq2 * XI, spl(sv, 1), p

    # d/ds (r cos(phi) + a) is close to -1 at the tip (tangent points down)
    sv = s_tip - sq2 * XI
    for _ in range(50):
        f, d, _ = F(sv)
        deriv = d[..., 0] * np.sqrt(1 - (ETA / spl(sv)[..., 0]) ** 2) + d[..., 1]
        step = f / deriv
        sv = sv - step
        if np.abs(step).max() < 1e-14:
            break
    f, _, p = F(sv)
    if np.abs(f).max() > 1e-10:
        raise LabError("patch-failed", "ring patch is not a graph over the tilted plane")
    rr, aa = p[..., 0], p[..., 1]
    height = (-(rr * np.sqrt(1 - (ETA / rr) ** 2) - r_min) + aa) / sq2
    origin = (-half_width, -half_width)
    u = ScalarField2D(height, h, origin)
    plane = ScalarField2D(-XI, h, origin)
    return GraphPair(u, plane, state.t)


# --------------------------------------------------------------------------
# dumbbell


def _smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        g = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1 - x, 1.0)), 0.0)
    return f / (f + g)


@dataclass(frozen=True)
class DumbbellShape:
    L: float
    eps: float
    tail: float
    bell_radius: float
    ramp: float

    @property
    def end(self) -> float:
        return 5 * self.L + self.tail

    def f(self, x) -> np.ndarray:
        s = np.abs(np.asarray(x, dtype=float))
        A = self.L + self.tail
        q = self.bell_radius**2 * np.clip(1 - ((s - 4 * self.L) / A) ** 2, 0.0, None)
        S = _smooth_step((s - self.L) / self.ramp)
        return np.sqrt(np.clip(self.eps**2 + (q - self.eps**2) * S, 0.0, None))


def dumbbell_shape(L: float = 1.0, eps: float = 0.08, tail: float = 10.0, ramp: float | None = None) -> DumbbellShape:
    if not (L > 0 and 0 < eps < L / 10):
        raise LabError("infeasible-dumbbell", "need 0 < eps < L/10")
    if tail <= 0:
        raise LabError("infeasible-dumbbell", "tail must be positive")
    return DumbbellShape(L, eps, tail, 1.5 * L, ramp if ramp is not None else 1.5 * L)


def dumbbell_profile(L: float = 1.0, eps: float = 0.08, h: float = 0.005, tail: float = 10.0,
                     ramp: float | None = None, n: int = 2) -> AxisymState:
    """Even profile f on [-5L-tail, 5L+tail] rotated about the x-axis.

    f = eps on [-L, L], increases to a bell of radius 1.5L around +-4L that
    contains the spheres of radius L there, and meets the axis at both ends.
    """
    shape = dumbbell_shape(L, eps, tail, ramp)
    # sample densely, then redistribute by arclength
    x = np.linspace(-shape.end, shape.end, 400_001)
    fine = np.column_stack([shape.f(x), x])
    fine[[0, -1], 0] = 0.0
    seg = np.hypot(*np.diff(fine, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    m = int(math.ceil(s[-1] / h))
    m += m % 2  # even edge count: a vertex sits on the symmetry plane
    targets = s[-1] * np.arange(m + 1) / m
    v = np.column_stack([np.interp(targets, s, fine[:, 0]), np.interp(targets, s, fine[:, 1])])
    v[[0, -1], 0] = 0.0
    v = symmetrize(v, closed=False)
    return AxisymState(Polyline(v, closed=False), n=n, reflection_symmetric=True, axis="x")


def neck_radius(state: AxisymState) -> float:
    """Distance to the axis where the profile crosses the symmetry plane a = 0."""
    v = state.profile.vertices
    return float(np.interp(0.0, v[:, 1], v[:, 0]))


def plane_intersection(state: AxisymState, z: float, t: float | None = None) -> IntersectionSample:
    """Intersection of the revolved surface with the plane {z = const} parallel to the axis.

    Each maximal interval of the axis coordinate on which the radius exceeds
    ``z`` gives one closed curve a -> (a, +-sqrt(f^2 - z^2)).
    """
    v = state.profile.vertices
    r, a = v[:, 0], v[:, 1]
    above = r > z
    pieces = []
    i = 0
    m = len(r)
    while i < m:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < m and above[j + 1]:
            j += 1
        seg_a, seg_r = list(a[i:j + 1]), list(r[i:j + 1])
        if i > 0:  # entry point where r = z
            s = (z - r[i - 1]) / (r[i] - r[i - 1])
            seg_a.insert(0, a[i - 1] + s * (a[i] - a[i - 1]))
            seg_r.insert(0, z)
        if j < m - 1:
            s = (z - r[j]) / (r[j + 1] - r[j])
            seg_a.append(a[j] + s * (a[j + 1] - a[j]))
            seg_r.append(z)
        sa, sr = np.array(seg_a), np.array(seg_r)
        y = np.sqrt(np.clip(sr**2 - z * z, 0.0, None))
        loop = np.vstack([np.column_stack([sa, y]), np.column_stack([sa[::-1], -y[::-1]])])
        pieces.append(loop)
        i = j + 1
    if not pieces:
        cloud = PointCloud(np.zeros((0, 2)), ambient_n=2)
        return IntersectionSample(state.t if t is None else t, cloud, 0, 0.0, None)
    pts = np.vstack(pieces)
    length = float(sum(np.hypot(*np.diff(p, axis=0, append=p[:1]).T).sum() for p in pieces))
    cloud = PointCloud(pts, ambient_n=2)
    dim = min(max(box_dimension(cloud), 0.0), 2.0)
    return IntersectionSample(state.t if t is None else t, cloud, len(pieces), length, dim)


def sphere_clearance(state: AxisymState, centers: list[float], radius: float) -> float:
    """Smallest (distance from a sphere centre to the profile) - radius; negative means overlap."""
    line = shapely.LineString(state.profile.vertices)
    d = min(shapely.distance(shapely.Point(0.0, c), line) for c in centers)
    return float(d - radius)


def dumbbell_component_series(state0: AxisymState, plane_z: float, T: float, sample_dt: float,
                              L: float = 1.0, eps: float | None = None):
    """Components of the plane intersection over time, with sphere barriers."""
    from .csf import sample_times

    h = state0.h_target
    records: list[IntersectionSample] = []
    clearances: list[float] = []
    necks: list[float] = []
    state = state0
    flags_end = ""
    for ts in sample_times(T, sample_dt):
        t = state0.t + float(ts)
        try:
            state = evolve_axisym(state, t)
        except LabError as e:
            flags_end = e.code
            break
        sample = plane_intersection(state, plane_z, t)
        neck = neck_radius(state)
        necks.append(neck)
        R2 = L * L - 4 * t
        clearances.append(sphere_clearance(state, [-4 * L, 4 * L], math.sqrt(R2)) if R2 > 0 else math.inf)
        flags = ("neck-thin",) if neck < 2 * h else ()
        records.append(IntersectionSample(sample.t, sample.points, sample.components, sample.measure_est,
                                          sample.dim_est, flags))
        if neck < 2 * h:
            flags_end = "neck-thin"
            break
    counts = [s.components for s in records]
    v = Verdict("dumbbell", tolerances={"plane_z": plane_z, "barrier_slack": 3 * h, "cfl": CFL,
                                        "neck_stop": 2 * h})
    bad, transient = increase_violations(counts)
    for i in bad:
        v.note(i, records[i].t, "monotone_count:increase")
    for i in transient:
        v.note(i, records[i].t, "transient-increase-forgiven")
    transition = next((i for i, c in enumerate(counts) if c >= 2), None)
    pinch_first = transition is None and flags_end in ("neck-thin", "axis-collision", "singularity")
    if pinch_first:
        v.note(len(records) - 1, records[-1].t, "pinch-first")
    v.monotone_count = not bad
    v.monotone_dim = True
    barrier_ok = all(c > -3 * h for c in clearances)
    v.summary = {
        "counts": counts,
        "transition_1_to_2": bool(counts and counts[0] == 1 and transition is not None),
        "transition_time": None if transition is None else records[transition].t,
        "barrier_ok": barrier_ok,
        "min_clearance": min(clearances) if clearances else None,
        "neck_radii": necks,
        "pinch_first": pinch_first,
        "stopped": flags_end or "horizon",
    }
    return records, v
