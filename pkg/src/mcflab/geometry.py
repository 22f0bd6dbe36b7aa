"""Discrete curves, grid fields, and the estimators built on them.

Everything in here is a pure function of immutable value objects. Arrays held
by the dataclasses are copied on construction and flagged read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from numpy.typing import NDArray
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial import cKDTree
from skimage.measure import find_contours

from .errors import LabError

Array = NDArray[np.float64]

# Values sitting exactly on a contour level are nudged by this much so that
# sign tests and marching squares never see an exact tie.
TIE_BREAK = 1e-12


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def sphere_area(k: int) -> float:
    """Area of the unit k-sphere in R^(k+1); ``sphere_area(1) == 2*pi``."""
    m = k + 1
    return 2.0 * math.pi ** (m / 2) / math.gamma(m / 2)


class DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            # smaller root wins so labels do not depend on pair order
            if ri < rj:
                self.parent[rj] = ri
            else:
                self.parent[ri] = rj

    def labels(self) -> np.ndarray:
        roots = np.array([self.find(i) for i in range(len(self.parent))], dtype=np.int64)
        _, labels = np.unique(roots, return_inverse=True)
        return labels


def cluster_labels(points: np.ndarray, radius: float) -> np.ndarray:
    """Label points by connected component of the ``radius``-linking graph."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) == 0:
        return np.zeros(0, dtype=np.int64)
    dsu = DisjointSet(len(pts))
    for i, j in sorted(cKDTree(pts).query_pairs(radius)):
        dsu.union(i, j)
    return dsu.labels()


def _merge_close(points: np.ndarray, radius: float) -> np.ndarray:
    if len(points) <= 1:
        return points
    labels = cluster_labels(points, radius)
    k = labels.max() + 1
    out = np.zeros((k, points.shape[1]))
    np.add.at(out, labels, points)
    out /= np.bincount(labels, minlength=k)[:, None]
    return out


# --------------------------------------------------------------------------
# value types


@dataclass(frozen=True, eq=False)
class Polyline:
    vertices: Array
    closed: bool = True

    def __post_init__(self):
        v = _frozen(self.vertices)
        if v.ndim != 2 or v.shape[1] != 2:
            raise LabError("invalid-curve", "vertices must have shape (N, 2)")
        if len(v) < 3:
            raise LabError("invalid-curve", "a polyline needs at least 3 vertices")
        if not np.all(np.isfinite(v)):
            raise LabError("invalid-curve", "non-finite vertex")
        object.__setattr__(self, "vertices", v)
        if np.any(self.edge_lengths() <= 0.0):
            raise LabError("invalid-curve", "consecutive vertices coincide")

    def __len__(self) -> int:
        return len(self.vertices)

    def edges(self) -> tuple[Array, Array]:
        v = self.vertices
        if self.closed:
            return v, np.roll(v, -1, axis=0)
        return v[:-1], v[1:]

    def edge_lengths(self) -> Array:
        a, b = self.edges()
        return np.hypot(*(b - a).T)

    @property
    def length(self) -> float:
        return float(self.edge_lengths().sum())

    @property
    def h(self) -> float:
        """Mean edge length, the curve's sampling scale."""
        return float(self.edge_lengths().mean())

    def edge_ratio(self) -> float:
        e = self.edge_lengths()
        return float(e.max() / e.min())

    def signed_area(self) -> float:
        x, y = self.vertices.T
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def translated(self, dx: float, dy: float) -> "Polyline":
        return Polyline(self.vertices + np.array([dx, dy]), self.closed)

    def reversed(self) -> "Polyline":
        return Polyline(self.vertices[::-1], self.closed)


@dataclass(frozen=True, eq=False)
class ScalarField2D:
    """Uniform-grid scalar field.

    ``values`` is indexed ``[row, col]`` = ``[y, x]``; node ``(i, j)`` sits at
    ``origin + (j*h, i*h)``. One-dimensional ``values`` are accepted for graphs
    over an interval (n = 1), in which case only ``origin[0]`` is used.
    """

    values: Array
    h: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim not in (1, 2) or min(v.shape) < 8:
            raise LabError("invalid-field", "need at least 8 nodes along each axis")
        if not self.h > 0:
            raise LabError("invalid-field", "grid spacing must be positive")
        if not np.all(np.isfinite(v)):
            raise LabError("invalid-field", "non-finite value")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def nx(self) -> int:
        return self.values.shape[-1]

    @property
    def ny(self) -> int:
        return self.values.shape[0] if self.dim == 2 else 1

    @property
    def x(self) -> Array:
        return self.origin[0] + self.h * np.arange(self.nx)

    @property
    def y(self) -> Array:
        return self.origin[1] + self.h * np.arange(self.ny)

    def mesh(self) -> tuple[Array, Array]:
        return np.meshgrid(self.x, self.y)

    def with_values(self, values) -> "ScalarField2D":
        return ScalarField2D(values, self.h, self.origin)

    @classmethod
    def from_function(cls, f, nx: int, ny: int, h: float, origin=(0.0, 0.0)) -> "ScalarField2D":
        x = origin[0] + h * np.arange(nx)
        y = origin[1] + h * np.arange(ny)
        X, Y = np.meshgrid(x, y)
        return cls(f(X, Y), h, origin)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Points in the plane, or radii of round (n-1)-spheres when axisymmetric."""

    points: Array
    ambient_n: int = 1
    axisymmetric: bool = False

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        if self.axisymmetric:
            p = p.reshape(-1)
        else:
            p = p.reshape(-1, 2) if p.size else np.zeros((0, 2))
        if not np.all(np.isfinite(p)):
            raise LabError("invalid-cloud", "non-finite point")
        if self.ambient_n < 1:
            raise LabError("invalid-cloud", "ambient_n must be >= 1")
        object.__setattr__(self, "points", _frozen(p))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def empty(self) -> bool:
        return len(self.points) == 0

    def as_pairs(self) -> Array:
        """Coordinates as (k, 2); radii become ``(r, 0)``."""
        if self.axisymmetric:
            return np.column_stack([self.points, np.zeros(len(self.points))])
        return self.points


@dataclass(frozen=True, eq=False)
class IntersectionSample:
    t: float
    points: PointCloud
    components: int
    measure_est: float
    dim_est: float | None
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if (self.components == 0) != self.points.empty:
            raise LabError("invalid-sample", "components must vanish exactly when the cloud is empty")
        if self.points.empty and self.measure_est != 0.0:
            raise LabError("invalid-sample", "empty intersection must have zero measure")
        if self.measure_est < 0:
            raise LabError("invalid-sample", "negative measure")

    @property
    def empty(self) -> bool:
        return self.points.empty

    def to_row(self) -> list:
        row = [repr(float(self.t)), str(self.components), repr(float(self.measure_est)),
               "" if self.dim_est is None else repr(float(self.dim_est))]
        for x, y in self.points.as_pairs():
            row += [repr(float(x)), repr(float(y))]
        return row

    def to_json(self) -> dict:
        return {
            "t": float(self.t),
            "components": int(self.components),
            "measure": float(self.measure_est),
            "dim": None if self.dim_est is None else float(self.dim_est),
            "points": [[float(x), float(y)] for x, y in self.points.as_pairs()],
        }

    @classmethod
    def from_json(cls, d: dict, ambient_n: int = 1, axisymmetric: bool = False) -> "IntersectionSample":
        pts = np.array(d["points"], dtype=float).reshape(-1, 2)
        cloud = PointCloud(pts[:, 0] if axisymmetric else pts, ambient_n, axisymmetric)
        return cls(d["t"], cloud, d["components"], d["measure"], d["dim"])


CSV_HEADER = ["t", "components", "measure", "dim", "points..."]


# --------------------------------------------------------------------------
# curve operations


def resample(curve: Polyline, target_h: float) -> Polyline:
    """Redistribute vertices at (nearly) equal arclength spacing ``target_h``."""
    if not target_h > 0:
        raise LabError("invalid-argument", "target_h must be positive")
    L = curve.length
    if L < 3 * target_h:
        raise LabError("curve-too-short", f"length {L:.3g} < 3*target_h")
    v = curve.vertices
    if curve.closed:
        ring = np.vstack([v, v[:1]])
        n = max(3, int(round(L / target_h)))
        s_new = np.arange(n) * (L / n)
    else:
        ring = v
        n = max(2, int(round(L / target_h)))
        s_new = np.linspace(0.0, L, n + 1)
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(ring, axis=0).T))])
    s[-1] = L
    pts = np.column_stack([np.interp(s_new, s, ring[:, 0]), np.interp(s_new, s, ring[:, 1])])
    if not curve.closed:
        pts[0], pts[-1] = v[0], v[-1]
    return Polyline(pts, curve.closed)


def menger_curvature(prev: Array, mid: Array, nxt: Array) -> Array:
    """Signed inverse circumradius of each vertex triple (positive when turning left)."""
    a = mid - prev
    b = nxt - mid
    c = nxt - prev
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    denom = np.hypot(*a.T) * np.hypot(*b.T) * np.hypot(*c.T)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(denom > 0, 2.0 * cross / denom, 0.0)
    return k


def curvature(curve: Polyline) -> Array:
    """Per-vertex signed curvature; open-curve endpoints get 0."""
    v = curve.vertices
    if curve.closed:
        return menger_curvature(np.roll(v, 1, axis=0), v, np.roll(v, -1, axis=0))
    k = np.zeros(len(v))
    k[1:-1] = menger_curvature(v[:-2], v[1:-1], v[2:])
    return k


def _segment_hits(p0, p1, q0, q1, pair_mask=None, chunk: int = 2_000_000):
    """Transverse hits between segment families; returns points and index pairs."""
    r = p1 - p0
    s = q1 - q0
    rows = max(1, chunk // max(1, len(q0)))
    pts, ii, jj = [], [], []
    for start in range(0, len(p0), rows):
        sl = slice(start, start + rows)
        rs = r[sl, None, :]
        qp = q0[None, :, :] - p0[sl, None, :]
        rxs = rs[..., 0] * s[None, :, 1] - rs[..., 1] * s[None, :, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (qp[..., 0] * s[None, :, 1] - qp[..., 1] * s[None, :, 0]) / rxs
            u = (qp[..., 0] * rs[..., 1] - qp[..., 1] * rs[..., 0]) / rxs
        hit = (rxs != 0) & (t >= 0) & (t < 1) & (u >= 0) & (u < 1)
        if pair_mask is not None:
            hit &= pair_mask(np.arange(len(p0))[sl, None], np.arange(len(q0))[None, :])
        i, j = np.nonzero(hit)
        if len(i):
            pts.append(p0[sl][i] + t[i, j, None] * r[sl][i])
            ii.append(i + start)
            jj.append(j)
    if not pts:
        return np.zeros((0, 2)), np.zeros(0, int), np.zeros(0, int)
    return np.vstack(pts), np.concatenate(ii), np.concatenate(jj)


def _near_misses(a: Polyline, b: Polyline, tol: float):
    """Vertices of ``a`` within ``tol`` of ``b``, with their closest points on ``b``."""
    line_b = shapely.LinearRing(b.vertices) if b.closed else shapely.LineString(b.vertices)
    pts = shapely.points(a.vertices)
    d = shapely.distance(pts, line_b)
    idx = np.nonzero(d < tol)[0]
    if len(idx) == 0:
        return np.zeros((0, 2)), np.zeros(0)
    nearest = shapely.get_coordinates(shapely.shortest_line(pts[idx], line_b)).reshape(-1, 2, 2)
    return 0.5 * (nearest[:, 0] + nearest[:, 1]), d[idx]


def polyline_intersections(a: Polyline, b: Polyline, touch_tol: float | None = None,
                           return_tangential: bool = False):
    """Crossings of two polylines plus tangential near-contacts.

    Transverse crossings are merged within h/4 (h = finer sampling of the two).
    Clusters of vertices closer than ``touch_tol`` (default h/2) that contain
    no crossing within 2h each contribute one tangential point.
    """
    h = min(a.h, b.h)
    tol = 0.5 * h if touch_tol is None else touch_tol
    pa, pb = a.edges()
    qa, qb = b.edges()
    cross, _, _ = _segment_hits(pa, pb, qa, qb)
    cross = _merge_close(cross, 0.25 * h)

    tangential = np.zeros((0, 2))
    if tol > 0:
        m1, d1 = _near_misses(a, b, tol)
        m2, d2 = _near_misses(b, a, tol)
        cand = np.vstack([m1, m2])
        dist = np.concatenate([d1, d2])
        if len(cand):
            labels = cluster_labels(cand, 2.0 * h)
            keep = []
            tree = cKDTree(cross) if len(cross) else None
            for lab in range(labels.max() + 1):
                members = np.nonzero(labels == lab)[0]
                if tree is not None and any(tree.query_ball_point(cand[members], 2.0 * h, return_length=True)):
                    continue
                best = members[np.lexsort((cand[members, 1], cand[members, 0], dist[members]))[0]]
                keep.append(cand[best])
            if keep:
                tangential = np.array(keep)
    pts = np.vstack([cross, tangential]) if len(tangential) else cross
    cloud = PointCloud(pts, ambient_n=1)
    if return_tangential:
        return cloud, len(tangential)
    return cloud


def self_intersections(curve: Polyline) -> PointCloud:
    """Transverse crossings between non-adjacent edges."""
    n_edges = len(curve.vertices) if curve.closed else len(curve.vertices) - 1
    p0, p1 = curve.edges()
    closed = curve.closed

    def non_adjacent(i, j):
        d = np.abs(i - j)
        if closed:
            d = np.minimum(d, n_edges - d)
        # each unordered pair once
        return (d > 1) & (i < j)

    pts, _, _ = _segment_hits(p0, p1, p0, p1, pair_mask=non_adjacent)
    return PointCloud(_merge_close(pts, 0.25 * curve.h), ambient_n=1)


# --------------------------------------------------------------------------
# point-cloud estimators


def count_components(cloud: PointCloud, link_r: float) -> int:
    if not link_r > 0:
        raise LabError("invalid-argument", "link_r must be positive")
    if cloud.empty:
        return 0
    return int(cluster_labels(cloud.points, link_r).max() + 1)


def _lift(cloud: PointCloud, spacing: float) -> Array:
    """Sample the round spheres encoded by an axisymmetric cloud."""
    n = cloud.ambient_n
    out = []
    for r in cloud.points:
        if r == 0 or n == 1:
            out.append(np.zeros((1, max(n, 2))))
        elif n == 2:
            k = max(16, int(math.ceil(2 * math.pi * r / spacing)))
            a = 2 * math.pi * np.arange(k) / k
            out.append(np.column_stack([r * np.cos(a), r * np.sin(a)]))
        elif n == 3:
            k = max(64, int(math.ceil(4 * math.pi * r * r / spacing**2)))
            i = np.arange(k) + 0.5
            z = 1 - 2 * i / k
            phi = math.pi * (1 + 5**0.5) * i
            s = np.sqrt(1 - z * z)
            out.append(r * np.column_stack([s * np.cos(phi), s * np.sin(phi), z]))
        else:
            raise LabError("invalid-argument", "sphere lifting supports n <= 3")
    return np.vstack(out)


def _cloud_coordinates(cloud: PointCloud) -> Array:
    if not cloud.axisymmetric:
        return cloud.points
    rmax = float(np.max(cloud.points)) if len(cloud) else 0.0
    return _lift(cloud, max(rmax, 1e-12) * 2 * math.pi / 2048)


def dyadic_scales(cloud: PointCloud, min_levels: int = 4, max_levels: int = 10) -> list[float]:
    """Dyadic scales D/4, D/8, ... anchored at the bounding-box extent D.

    The coarsest level D/2 is skipped (it only sees the box corners) and the
    finest level stays above four times the median nearest-neighbour spacing,
    below which a finite sample looks zero-dimensional.
    """
    pts = np.unique(_cloud_coordinates(cloud), axis=0)
    extent = float(np.max(pts.max(axis=0) - pts.min(axis=0))) if len(pts) else 0.0
    if extent == 0.0:
        return [2.0**-k for k in range(2, 2 + min_levels)]
    nn = cKDTree(pts).query(pts, k=2)[0][:, 1]
    floor = 4.0 * float(np.median(nn))
    scales = []
    for k in range(2, 2 + max_levels):
        eps = extent / 2.0**k
        if len(scales) >= min_levels and eps < floor:
            break
        scales.append(eps)
    return scales


def box_dimension(cloud: PointCloud, scales: list[float] | None = None) -> float | None:
    """Least-squares slope of log(occupied boxes) against log(1/scale)."""
    if cloud.empty:
        return None
    if scales is None:
        scales = dyadic_scales(cloud)
    scales = sorted((float(s) for s in scales), reverse=True)
    if len(scales) < 4 or scales[0] / scales[-1] < 8.0 - 1e-9 or scales[-1] <= 0:
        raise LabError("insufficient-scales", "need >= 4 positive scales spanning a factor of 8")
    pts = _cloud_coordinates(cloud)
    lo = pts.min(axis=0)
    extent = pts.max(axis=0) - lo
    counts = []
    for eps in scales:
        # boxes are closed at the far side of the bounding box
        top = np.maximum(np.ceil(extent / eps - 1e-9).astype(np.int64) - 1, 0)
        idx = np.minimum(np.floor((pts - lo) / eps).astype(np.int64), top)
        counts.append(len(np.unique(idx, axis=0)))
    slope = np.polyfit(np.log(1.0 / np.array(scales)), np.log(counts), 1)[0]
    return float(slope) + 0.0


def measure_estimate(cloud: PointCloud, ambient_n: int | None = None, cover_r: float = 1.0) -> float:
    """H^(n-1) estimate of an intersection set.

    Planar clouds: n = 1 counts clusters at ``cover_r``; n = 2 sums the minimum
    spanning forest of the ``cover_r``-linking graph (the chained length).
    Axisymmetric clouds: sum of C_(n-1) r^(n-1) over the radii.
    """
    n = cloud.ambient_n if ambient_n is None else ambient_n
    if not cover_r > 0:
        raise LabError("invalid-argument", "cover_r must be positive")
    if cloud.empty:
        return 0.0
    if cloud.axisymmetric:
        r = cloud.points
        if np.any(r < 0):
            raise LabError("invalid-radius", "negative radius")
        return float(sphere_area(n - 1) * np.sum(r ** (n - 1)))
    if n == 1:
        return float(count_components(cloud, cover_r))
    if n == 2:
        pts = cloud.points
        if len(pts) < 2:
            return 0.0
        pairs = cKDTree(pts).query_pairs(cover_r, output_type="ndarray")
        if len(pairs) == 0:
            return 0.0
        w = np.hypot(*(pts[pairs[:, 0]] - pts[pairs[:, 1]]).T)
        w = np.maximum(w, 1e-300)
        g = coo_matrix((w, (pairs[:, 0], pairs[:, 1])), shape=(len(pts), len(pts)))
        return float(minimum_spanning_tree(g).sum())
    raise LabError("invalid-argument", "planar measure supports n = 1 or 2")


def make_sample(t: float, cloud: PointCloud, link_r: float, cover_r: float | None = None,
                scales: list[float] | None = None, flags=()) -> IntersectionSample:
    """Bundle a cloud with its component count, measure and dimension proxy."""
    comps = count_components(cloud, link_r)
    measure = measure_estimate(cloud, cloud.ambient_n, cover_r or link_r)
    dim = None
    if not cloud.empty:
        dim = box_dimension(cloud, scales)
        dim = float(min(max(dim, 0.0), cloud.ambient_n))
    return IntersectionSample(float(t), cloud, comps, measure, dim, tuple(flags))


# --------------------------------------------------------------------------
# zero sets of grid fields


def tie_broken(values: np.ndarray, level: float = 0.0) -> np.ndarray:
    v = np.array(values, dtype=float)
    v[v == level] += TIE_BREAK
    return v


def zero_points_1d(field: ScalarField2D, level: float = 0.0) -> Array:
    """Linearly interpolated crossings of a 1-D field with ``level``."""
    v = tie_broken(field.values, level) - level
    i = np.nonzero(np.sign(v[:-1]) != np.sign(v[1:]))[0]
    frac = v[i] / (v[i] - v[i + 1])
    return field.origin[0] + field.h * (i + frac)


def zero_contours(field: ScalarField2D, level: float = 0.0) -> list[Array]:
    """Marching-squares contours of a 2-D field as (k, 2) arrays in world coordinates.

    Closed contours repeat their first point at the end.
    """
    v = tie_broken(field.values, level)
    out = []
    for c in find_contours(v, level):
        xy = np.column_stack([field.origin[0] + field.h * c[:, 1], field.origin[1] + field.h * c[:, 0]])
        out.append(xy)
    return out


def contour_length(contours: list[Array]) -> float:
    return float(sum(np.hypot(*np.diff(c, axis=0).T).sum() for c in contours if len(c) > 1))


def contour_points(contours: list[Array]) -> Array:
    if not contours:
        return np.zeros((0, 2))
    return np.vstack(contours)


def densify(contours: list[Array], spacing: float) -> Array:
    """Points along contour segments at most ``spacing`` apart."""
    out = []
    for c in contours:
        if len(c) == 1:
            out.append(c)
            continue
        seg = np.diff(c, axis=0)
        L = np.hypot(*seg.T)
        for p, d, l in zip(c[:-1], seg, L):
            k = max(1, int(math.ceil(l / spacing)))
            out.append(p + np.outer(np.arange(k) / k, d))
        out.append(c[-1:])
    return np.vstack(out) if out else np.zeros((0, 2))


def hausdorff(a: Array, b: Array) -> float:
    """Symmetric Hausdorff distance between point sets (inf if exactly one is empty)."""
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return math.inf
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(), db.max()))
