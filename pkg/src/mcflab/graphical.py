"""Graphical mean curvature flow and the linear equation satisfied by differences.

For two graph solutions u, v the difference w = v - u solves

    w_t = d_i(a^ij d_j w) + b^j d_j w

with coefficients obtained by integrating the derivatives of
F(P, q) = tr P - P_ab q^a q^b / (1 + |q|^2) along w_theta = theta v + (1 - theta) u.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LabError
from .geometry import (
    PointCloud,
    ScalarField2D,
    contour_length,
    contour_points,
    tie_broken,
    zero_contours,
    zero_points_1d,
)

GRAD_CAP = 10.0
CFL = 0.2
N_THETA = 16

_gl_x, _gl_w = np.polynomial.legendre.leggauss(N_THETA)
THETA = 0.5 * (_gl_x + 1.0)
THETA_W = 0.5 * _gl_w


# --------------------------------------------------------------------------
# finite differences


def gradient(u: np.ndarray, h: float) -> list[np.ndarray]:
    """Central differences, second order one-sided at the boundary; x first."""
    if u.ndim == 1:
        return [np.gradient(u, h, edge_order=2)]
    gy, gx = np.gradient(u, h, edge_order=2)
    return [gx, gy]


def hessian(u: np.ndarray, h: float) -> list[list[np.ndarray]]:
    """Second derivatives; pure ones by the 3-point stencil, mixed ones by nested central differences."""
    def second(axis):
        d = np.zeros_like(u)
        sl = [slice(None)] * u.ndim
        c, lo, hi = list(sl), list(sl), list(sl)
        c[axis], lo[axis], hi[axis] = slice(1, -1), slice(0, -2), slice(2, None)
        d[tuple(c)] = (u[tuple(hi)] - 2 * u[tuple(c)] + u[tuple(lo)]) / (h * h)
        return d

    if u.ndim == 1:
        return [[second(0)]]
    gx = np.gradient(u, h, axis=1, edge_order=2)
    uxy = np.gradient(gx, h, axis=0, edge_order=2)
    return [[second(1), uxy], [uxy, second(0)]]


def mcf_rhs(u: np.ndarray, h: float) -> np.ndarray:
    """Delta u - Hess u(grad u, grad u) / (1 + |grad u|^2); boundary entries are meaningless."""
    g = gradient(u, h)
    H = hessian(u, h)
    n = len(g)
    q2 = sum(gi * gi for gi in g)
    lap = sum(H[i][i] for i in range(n))
    quad = sum(H[i][j] * g[i] * g[j] for i in range(n) for j in range(n))
    return lap - quad / (1.0 + q2)


def max_gradient(u: np.ndarray, h: float) -> float:
    return float(np.sqrt(sum(gi * gi for gi in gradient(u, h))).max())


def _interior(shape) -> tuple[slice, ...]:
    return tuple(slice(1, -1) for _ in shape)


def step_graphical(field: ScalarField2D, dt: float, boundary: np.ndarray | None = None,
                   grad_cap: float = GRAD_CAP) -> ScalarField2D:
    """One explicit step of graphical MCF with Dirichlet boundary values.

    ``boundary`` (same shape as the field) supplies the new boundary values;
    by default the current ones are kept.
    """
    h = field.h
    if not 0 < dt <= CFL * h * h * (1 + 1e-12):
        raise LabError("cfl-violation", f"dt={dt:.3g} exceeds {CFL}*h^2")
    u = field.values
    g = max_gradient(u, h)
    if g > grad_cap:
        raise LabError("gradient-blowup", f"|grad u| = {g:.3g} > {grad_cap}")
    new = np.array(boundary, dtype=float) if boundary is not None else u.copy()
    inner = _interior(u.shape)
    new[inner] = u[inner] + dt * mcf_rhs(u, h)[inner]
    return field.with_values(new)


def evolve_graph(field: ScalarField2D, T: float, boundary_at=None, grad_cap: float = GRAD_CAP,
                 t0: float = 0.0) -> ScalarField2D:
    """Advance from ``t0`` to ``T`` with the largest stable steps; ``boundary_at(t)`` gives Dirichlet data."""
    t = t0
    dt_max = CFL * field.h**2
    while t < T - 1e-15:
        dt = min(dt_max, T - t)
        t += dt
        field = step_graphical(field, dt, None if boundary_at is None else boundary_at(t), grad_cap)
    return field


# --------------------------------------------------------------------------
# coefficients of the difference equation


@dataclass(frozen=True, eq=False)
class GraphPair:
    u: ScalarField2D
    v: ScalarField2D
    t: float = 0.0

    def __post_init__(self):
        if (self.u.values.shape != self.v.values.shape or self.u.h != self.v.h
                or self.u.origin != self.v.origin):
            raise LabError("grid-mismatch", "u and v must share one grid")

    @property
    def h(self) -> float:
        return self.u.h

    @property
    def dim(self) -> int:
        return self.u.dim

    def w(self) -> np.ndarray:
        return self.v.values - self.u.values


@dataclass(frozen=True, eq=False)
class DiffCoefficients:
    a: np.ndarray  # (..., n, n)
    b: np.ndarray  # (..., n)
    C_bound: float
    dF_dq: np.ndarray  # theta-integral of dF/dq, before the divergence correction

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.a)

    def ellipticity_ok(self, slack: float = 1e-9) -> bool:
        ev = self.eigenvalues()
        return bool(ev.min() >= 1.0 / (1.0 + self.C_bound) - slack and ev.max() <= 1.0 + slack)


def dF_dP(q: list[np.ndarray]) -> np.ndarray:
    """delta^ij - q^i q^j / (1 + |q|^2), stacked as (..., n, n)."""
    n = len(q)
    Q = np.stack(q, axis=-1)
    den = 1.0 + (Q * Q).sum(-1)
    return np.eye(n) - Q[..., :, None] * Q[..., None, :] / den[..., None, None]


def dF_dq(P: list[list[np.ndarray]], q: list[np.ndarray]) -> np.ndarray:
    """-(P_ij + P_ji) q^i / (1+|q|^2) + 2 q^j P_ab q^a q^b / (1+|q|^2)^2, stacked (..., n)."""
    Q = np.stack(q, axis=-1)
    Pm = np.stack([np.stack(row, axis=-1) for row in P], axis=-2)
    den = 1.0 + (Q * Q).sum(-1)
    sym = Pm + np.swapaxes(Pm, -1, -2)
    first = -np.einsum("...ij,...i->...j", sym, Q) / den[..., None]
    pqq = np.einsum("...ab,...a,...b->...", Pm, Q, Q)
    return first + 2.0 * Q * (pqq / den**2)[..., None]


def assemble_coefficients(pair: GraphPair) -> DiffCoefficients:
    """a, b and C for the difference equation, by 16-point Gauss-Legendre in theta."""
    h = pair.h
    u, v = pair.u.values, pair.v.values
    n = pair.dim
    a = np.zeros(u.shape + (n, n))
    fq = np.zeros(u.shape + (n,))
    gmax = 0.0
    gu, gv = gradient(u, h), gradient(v, h)
    Hu, Hv = hessian(u, h), hessian(v, h)
    for th, wt in zip(THETA, THETA_W):
        q = [th * b_ + (1 - th) * a_ for a_, b_ in zip(gu, gv)]
        P = [[th * Hv[i][j] + (1 - th) * Hu[i][j] for j in range(n)] for i in range(n)]
        a += wt * dF_dP(q)
        fq += wt * dF_dq(P, q)
        gmax = max(gmax, float(np.sqrt(sum(qi * qi for qi in q)).max()))
    # b^j = int dF/dq^j - d_i a^ij
    div = np.zeros_like(fq)
    for j in range(n):
        for i in range(n):
            div[..., j] += gradient(a[..., i, j], h)[i]
    return DiffCoefficients(a, fq - div, gmax * gmax, fq)


def divergence_form(a: np.ndarray, w: np.ndarray, h: float) -> np.ndarray:
    """d_i(a^ij d_j w) by nested central differences."""
    n = a.shape[-1]
    gw = gradient(w, h)
    out = np.zeros_like(w)
    for i in range(n):
        flux = sum(a[..., i, j] * gw[j] for j in range(n))
        out += gradient(flux, h)[i]
    return out


def difference_residual(pair: GraphPair, coeffs: DiffCoefficients | None = None) -> np.ndarray:
    """F_h(v) - F_h(u) - [d_i(a^ij d_j w) + b^j d_j w] on the grid."""
    coeffs = coeffs or assemble_coefficients(pair)
    h = pair.h
    w = pair.w()
    lhs = mcf_rhs(pair.v.values, h) - mcf_rhs(pair.u.values, h)
    gw = gradient(w, h)
    rhs = divergence_form(coeffs.a, w, h) + sum(coeffs.b[..., j] * gw[j] for j in range(pair.dim))
    return lhs - rhs


def middle_mask(field: ScalarField2D, frac: float = 0.5) -> np.ndarray:
    """Nodes in the centered sub-box covering ``frac`` of each side (closed, with h/2 slack)."""
    def axis_mask(coords):
        c = 0.5 * (coords[0] + coords[-1])
        half = 0.5 * frac * (coords[-1] - coords[0])
        return np.abs(coords - c) <= half + 0.5 * field.h
    if field.dim == 1:
        return axis_mask(field.x)
    return axis_mask(field.y)[:, None] & axis_mask(field.x)[None, :]


def verify_coefficient_hypotheses(slices: list[DiffCoefficients], times: list[float], h: float,
                                  stencil: int = 4, mask: np.ndarray | None = None) -> dict:
    """Ellipticity bracket, parabolic Lipschitz constant of a and sup |b| over a window."""
    if len(slices) < 3 or len(slices) != len(times):
        raise LabError("invalid-argument", "need >= 3 coefficient slices with times")
    C = max(c.C_bound for c in slices)
    ellip = all(c.ellipticity_ok() for c in slices)
    shape = slices[0].a.shape[:-2]
    if mask is None:
        mask = np.ones(shape, dtype=bool)
    dim = len(shape)
    offsets = [o for o in np.ndindex(*([2 * stencil + 1] * dim))]
    offsets = [tuple(k - stencil for k in o) for o in offsets]
    offsets = [o for o in offsets if sum(k * k for k in o) <= stencil * stencil]
    lip = 0.0
    for k, (ck, tk) in enumerate(zip(slices, times)):
        for cl, tl in list(zip(slices, times))[k:]:
            dt = abs(tl - tk)
            for o in offsets:
                if dt == 0 and not any(o):
                    continue
                if dt == 0 and o < tuple(0 for _ in o):
                    continue  # each unordered spatial pair once
                src, dst = _shift_slices(shape, o)
                diff = np.abs(cl.a[dst] - ck.a[src]).max(axis=(-1, -2))
                valid = mask[src] & mask[dst]
                if not valid.any():
                    continue
                dist = np.sqrt(h * h * sum(k_ * k_ for k_ in o) + dt)
                lip = max(lip, float(diff[valid].max() / dist))
    b_sup = 0.0
    for c in slices:
        b_sup = max(b_sup, float(np.abs(c.b)[mask].max()))
    return {"ellipticity_ok": ellip, "lipschitz_est": lip, "b_sup": b_sup, "C_bound": C,
            "lipschitz_within_C": lip <= C, "b_within_C": b_sup <= C, "stencil_radius": stencil * h}


def _shift_slices(shape, offset):
    src, dst = [], []
    for n, o in zip(shape, offset):
        if o >= 0:
            src.append(slice(0, n - o))
            dst.append(slice(o, n))
        else:
            src.append(slice(-o, n))
            dst.append(slice(0, n + o))
    return tuple(src), tuple(dst)


# --------------------------------------------------------------------------
# nodal sets


@dataclass(frozen=True, eq=False)
class NodalRecord:
    t: float
    zero_set: PointCloud
    measure_est: float
    lambda_est: float
    contours: tuple = ()
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.measure_est < 0:
            raise LabError("invalid-record", "negative measure")

    @property
    def n_points(self) -> int:
        return len(self.zero_set)


def nodal_set(w: ScalarField2D, mask_frac: float | None = 0.5):
    """Zero set of w: (cloud, measure, contours). n=1 counts crossings, n=2 measures contour length."""
    if w.dim == 1:
        xs = zero_points_1d(w)
        if mask_frac is not None:
            c = 0.5 * (w.x[0] + w.x[-1])
            half = 0.5 * mask_frac * (w.x[-1] - w.x[0])
            xs = xs[np.abs(xs - c) <= half + 0.5 * w.h]
        cloud = PointCloud(np.column_stack([xs, np.zeros_like(xs)]), ambient_n=1)
        return cloud, float(len(xs)), ()
    if mask_frac is not None:
        m = middle_mask(w, mask_frac)
        rows = np.nonzero(m.any(axis=1))[0]
        cols = np.nonzero(m.any(axis=0))[0]
        sub = w.values[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
        origin = (w.origin[0] + cols[0] * w.h, w.origin[1] + rows[0] * w.h)
        w = ScalarField2D(sub, w.h, origin)
    contours = zero_contours(w)
    cloud = PointCloud(contour_points(contours), ambient_n=2)
    return cloud, contour_length(contours), tuple(contours)


def _ball_integral(w2: np.ndarray, field: ScalarField2D, radius_frac: float) -> float:
    """Integral of w^2 over the ball of radius ``radius_frac`` * half-width about the centre."""
    h = field.h
    if field.dim == 1:
        x = field.x
        c = 0.5 * (x[0] + x[-1])
        ell = 0.5 * (x[-1] - x[0])
        sel = np.abs(x - c) <= radius_frac * ell + 1e-12
        return float(w2[sel].sum() * h)
    X, Y = field.mesh()
    cx, cy = 0.5 * (field.x[0] + field.x[-1]), 0.5 * (field.y[0] + field.y[-1])
    ell = 0.5 * min(field.x[-1] - field.x[0], field.y[-1] - field.y[0])
    sel = np.hypot(X - cx, Y - cy) <= radius_frac * ell + 1e-12
    return float(w2[sel].sum() * h * h)


def lambda_estimate(history: list[tuple[float, float]], denom: float, ell: float) -> tuple[float, dict]:
    """Frequency-type ratio in parabolically rescaled units.

    The half-width ``ell`` maps to 2, so time scales by (2/ell)^2. ``history``
    holds (t, integral of w^2 over the big ball) samples. The window is the
    last 4 rescaled time units (or all of the past if shorter); the window
    mean times 4 stands in for the space-time integral.
    """
    lam = 2.0 / ell
    t_now = history[-1][0]
    span = min(4.0 / lam**2, t_now)
    pts = [(t, v) for t, v in history if t >= t_now - span - 1e-12]
    if len(pts) >= 2 and span > 0:
        ts, vs = np.array(pts).T
        mean = float(np.trapezoid(vs, ts) / (ts[-1] - ts[0]))
    else:
        mean = pts[-1][1]
    value = 4.0 * mean / denom if denom > 0 else float("inf")
    return value, {"window_mean": mean, "window_length": span, "denominator": denom, "scale": lam}


def evolve_pair_and_track_nodal(pair: GraphPair, T: float, sample_dt: float, boundary_u=None,
                                boundary_v=None, mask_frac: float = 0.5) -> list[NodalRecord]:
    """Evolve u and v, recording the nodal set of w = v - u at every sample time."""
    from .csf import sample_times

    u, v = pair.u, pair.v
    field0 = u
    ell = 0.5 * (field0.x[-1] - field0.x[0]) if field0.dim == 1 else \
        0.5 * min(field0.x[-1] - field0.x[0], field0.y[-1] - field0.y[0])
    records: list[NodalRecord] = []
    history: list[tuple[float, float]] = []
    t = pair.t
    for ts in sample_times(T, sample_dt):
        ts = pair.t + float(ts)
        u = evolve_graph(u, ts, boundary_u, t0=t)
        v = evolve_graph(v, ts, boundary_v, t0=t)
        t = ts
        w = u.with_values(v.values - u.values)
        if not np.any(w.values != 0.0):
            raise LabError("flows-coincide", f"u and v agree everywhere at t={t:.6g}")
        cloud, measure, contours = nodal_set(w, mask_frac)
        w2 = w.values**2
        history.append((t, _ball_integral(w2, w, 1.0)))
        denom = _ball_integral(w2, w, 0.75)
        lam, raw = lambda_estimate(history, denom, ell)
        raw["big_ball_integral"] = history[-1][1]
        records.append(NodalRecord(t, cloud, measure, lam, contours, raw))
    return records


def one_sided_test(w: ScalarField2D) -> dict:
    """Sign-change status of w and the size of its nodal set."""
    vals = tie_broken(w.values)
    sign_change = bool(vals.max() > 0 and vals.min() < 0)
    _, measure, _ = nodal_set(w, mask_frac=None)
    if w.dim == 1:
        # one crossing in one dimension carries H^0 measure 1
        positive = measure >= 1
    else:
        positive = measure > w.h
    return {
        "sign_change": sign_change,
        "nodal_measure_est": float(measure),
        "verdict": ("nodal-set-positive" if positive else "nodal-set-too-small") if sign_change
        else "no-sign-change",
        "positivity_ok": (not sign_change) or positive,
    }
