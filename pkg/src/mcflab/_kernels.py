"""Compiled inner loops (numba)."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# status codes returned by csf_batch
REACHED = 0
NEEDS_RESAMPLE = 1
SINGULAR = 2
COLLAPSED = 3


@njit(cache=True)
def _curvature_vectors(v, closed, out):
    n = v.shape[0]
    for i in range(n):
        if not closed and (i == 0 or i == n - 1):
            out[i, 0] = 0.0
            out[i, 1] = 0.0
            continue
        ip = (i - 1) % n
        inx = (i + 1) % n
        ax = v[i, 0] - v[ip, 0]
        ay = v[i, 1] - v[ip, 1]
        bx = v[inx, 0] - v[i, 0]
        by = v[inx, 1] - v[i, 1]
        cx = v[inx, 0] - v[ip, 0]
        cy = v[inx, 1] - v[ip, 1]
        la = math.hypot(ax, ay)
        lb = math.hypot(bx, by)
        lc = math.hypot(cx, cy)
        d = la * lb * lc
        k = 2.0 * (ax * by - ay * bx) / d if d > 0 else 0.0
        # left normal of the central tangent c
        out[i, 0] = -k * cy / lc
        out[i, 1] = k * cx / lc
    return out


@njit(cache=True)
def csf_batch(v, closed, t, t_end, cfl, max_steps, max_ratio, singular_turn, min_length):
    """Explicit Euler steps of curve shortening flow, in place on ``v``.

    Stops at ``t_end``, after ``max_steps``, or when the polygon needs
    attention (edge ratio, under-resolved curvature, collapse).
    Returns (t, steps_taken, status).
    """
    n = v.shape[0]
    ne = n if closed else n - 1
    vel = np.empty_like(v)
    for step in range(max_steps):
        hmin = 1e300
        hmax = 0.0
        total = 0.0
        for e in range(ne):
            j = (e + 1) % n
            l = math.hypot(v[j, 0] - v[e, 0], v[j, 1] - v[e, 1])
            total += l
            if l < hmin:
                hmin = l
            if l > hmax:
                hmax = l
        if total <= min_length:
            return t, step, COLLAPSED
        if hmin <= 0.0 or hmax > max_ratio * hmin:
            return t, step, NEEDS_RESAMPLE
        _curvature_vectors(v, closed, vel)
        hmean = total / ne
        kmax = 0.0
        for i in range(n):
            kk = math.hypot(vel[i, 0], vel[i, 1])
            if kk > kmax:
                kmax = kk
        if kmax * hmean > singular_turn:
            return t, step, SINGULAR
        if t >= t_end - 1e-15:
            return t, step, REACHED
        dt = cfl * hmin * hmin
        if t_end - t < dt:
            dt = t_end - t
        for i in range(n):
            v[i, 0] += dt * vel[i, 0]
            v[i, 1] += dt * vel[i, 1]
        t += dt
    return t, max_steps, REACHED


AXIS_COLLISION = 4


@njit(cache=True)
def axisym_velocity(v, closed, pole0, pole1, n_dim, out_h, out_vel):
    """Normal velocity H*N of a meridian polyline in (r, a) coordinates.

    H = kappa - (n-1) N_r / r with N the left normal; poles use H = n*kappa
    with a ghost vertex mirrored across the axis; other open ends use a
    linearly extrapolated ghost.
    """
    m = v.shape[0]
    for i in range(m):
        if closed:
            pr, pa = v[(i - 1) % m, 0], v[(i - 1) % m, 1]
            nr, na = v[(i + 1) % m, 0], v[(i + 1) % m, 1]
        else:
            if i == 0:
                nr, na = v[1, 0], v[1, 1]
                if pole0:
                    pr, pa = -nr, na
                else:
                    pr, pa = 2 * v[0, 0] - nr, 2 * v[0, 1] - na
            elif i == m - 1:
                pr, pa = v[m - 2, 0], v[m - 2, 1]
                if pole1:
                    nr, na = -pr, pa
                else:
                    nr, na = 2 * v[i, 0] - pr, 2 * v[i, 1] - pa
            else:
                pr, pa = v[i - 1, 0], v[i - 1, 1]
                nr, na = v[i + 1, 0], v[i + 1, 1]
        ax = v[i, 0] - pr
        ay = v[i, 1] - pa
        bx = nr - v[i, 0]
        by = na - v[i, 1]
        cx = nr - pr
        cy = na - pa
        la = math.hypot(ax, ay)
        lb = math.hypot(bx, by)
        lc = math.hypot(cx, cy)
        d = la * lb * lc
        k = 2.0 * (ax * by - ay * bx) / d if d > 0 else 0.0
        nx = -cy / lc
        ny = cx / lc
        is_pole = (not closed) and ((i == 0 and pole0) or (i == m - 1 and pole1))
        if is_pole:
            hh = n_dim * k
            nx = 0.0
        else:
            hh = k - (n_dim - 1) * nx / v[i, 0]
        out_h[i] = hh
        out_vel[i, 0] = hh * nx
        out_vel[i, 1] = hh * ny


@njit(cache=True)
def axisym_batch(v, closed, pole0, pole1, n_dim, t, t_end, cfl, max_steps, max_ratio,
                 singular_turn, r_floor):
    """Explicit Euler steps of rotationally symmetric MCF, in place on ``v``."""
    m = v.shape[0]
    ne = m if closed else m - 1
    hvals = np.empty(m)
    vel = np.empty_like(v)
    for step in range(max_steps):
        hmin = 1e300
        hmax = 0.0
        total = 0.0
        for e in range(ne):
            j = (e + 1) % m
            l = math.hypot(v[j, 0] - v[e, 0], v[j, 1] - v[e, 1])
            total += l
            hmin = min(hmin, l)
            hmax = max(hmax, l)
        if hmin <= 0.0 or hmax > max_ratio * hmin:
            return t, step, NEEDS_RESAMPLE
        for i in range(m):
            pole = (not closed) and ((i == 0 and pole0) or (i == m - 1 and pole1))
            if not pole and v[i, 0] < r_floor:
                return t, step, AXIS_COLLISION
        axisym_velocity(v, closed, pole0, pole1, n_dim, hvals, vel)
        hmean = total / ne
        for i in range(m):
            if abs(hvals[i]) * hmean > singular_turn * n_dim:
                return t, step, SINGULAR
        if t >= t_end - 1e-15:
            return t, step, REACHED
        dt = cfl * hmin * hmin
        if t_end - t < dt:
            dt = t_end - t
        for i in range(m):
            v[i, 0] += dt * vel[i, 0]
            v[i, 1] += dt * vel[i, 1]
        if not closed:
            if pole0:
                v[0, 0] = 0.0
            if pole1:
                v[m - 1, 0] = 0.0
        t += dt
    return t, max_steps, REACHED


# --------------------------------------------------------------------------
# level sets; arrays are (rows, cols) and in axisymmetric mode r runs along
# the columns with cell-centred values r_j = (j + 1/2) h


@njit(cache=True)
def _pad(phi, p, axisym):
    """Copy into ``p`` with one ghost layer: Neumann edges, even reflection across the axis."""
    ny, nx = phi.shape
    for i in range(ny):
        for j in range(nx):
            p[i + 1, j + 1] = phi[i, j]
    for i in range(ny):
        p[i + 1, 0] = phi[i, 0]  # cell-centred axis: mirror of cell 0 is cell 0
        p[i + 1, nx + 1] = phi[i, nx - 1]
    for j in range(nx + 2):
        p[0, j] = p[1, j]
        p[ny + 1, j] = p[ny, j]


@njit(cache=True, fastmath=True)
def levelset_steps(phi, h, dt, nsteps, axisym, n_dim, grad_floor):
    """``nsteps`` explicit steps of level-set mean curvature motion, in place.

    Returns the number of cell updates that hit the gradient floor.
    """
    ny, nx = phi.shape
    p = np.empty((ny + 2, nx + 2))
    floored = 0
    g2min = grad_floor * grad_floor
    ih2 = 1.0 / (h * h)
    for _ in range(nsteps):
        _pad(phi, p, axisym)
        for i in range(1, ny + 1):
            for j in range(1, nx + 1):
                c = p[i, j]
                e = p[i, j + 1]
                w = p[i, j - 1]
                nn = p[i + 1, j]
                s = p[i - 1, j]
                px = (e - w) / (2 * h)
                py = (nn - s) / (2 * h)
                pxx = (e - 2 * c + w) * ih2
                pyy = (nn - 2 * c + s) * ih2
                pxy = (p[i + 1, j + 1] - p[i + 1, j - 1] - p[i - 1, j + 1] + p[i - 1, j - 1]) * (0.25 * ih2)
                g2 = px * px + py * py
                if g2 < g2min:
                    g2 = g2min
                    floored += 1
                rate = (pxx * py * py - 2 * px * py * pxy + pyy * px * px) / g2
                if axisym:
                    r = (j - 0.5) * h
                    if r < 2 * h:
                        # guard band: phi_r / r -> phi_rr on the axis
                        rate += (n_dim - 1) * pxx
                    else:
                        rate += (n_dim - 1) * px / r
                phi[i - 1, j - 1] = c + dt * rate
    return floored


@njit(cache=True, fastmath=True)
def fast_sweep_redistance(phi, h, rounds, axisym):
    """Signed distance to the zero level set of ``phi`` (same sign), by fast sweeping.

    Cells next to the interface get phi / |grad phi| (central differences,
    capped at h), which keeps the zero set in place to second order; the rest
    are filled by Gauss-Seidel sweeps of the Godunov upwind eikonal update in
    the four diagonal orderings.
    """
    ny, nx = phi.shape
    big = 1e10
    # padded distance array; the border stays at ``big``
    d = np.full((ny + 2, nx + 2), big)
    frozen = np.zeros((ny + 2, nx + 2), dtype=np.bool_)
    p = np.empty((ny + 2, nx + 2))
    _pad(phi, p, axisym)
    for i in range(ny):
        for j in range(nx):
            c = phi[i, j]
            if c == 0.0:
                d[i + 1, j + 1] = 0.0
                frozen[i + 1, j + 1] = True
                continue
            near = ((j + 1 < nx and c * phi[i, j + 1] <= 0) or (j > 0 and c * phi[i, j - 1] <= 0)
                    or (i + 1 < ny and c * phi[i + 1, j] <= 0) or (i > 0 and c * phi[i - 1, j] <= 0))
            if not near:
                continue
            gx = (p[i + 1, j + 2] - p[i + 1, j]) / (2 * h)
            gy = (p[i + 2, j + 1] - p[i, j + 1]) / (2 * h)
            g = math.sqrt(gx * gx + gy * gy)
            dist = abs(c) / g if g > 0 else h
            d[i + 1, j + 1] = min(dist, h)
            frozen[i + 1, j + 1] = True
    for _ in range(rounds):
        for order in range(4):
            for ii in range(ny):
                i = ii + 1 if order < 2 else ny - ii
                for jj in range(nx):
                    j = jj + 1 if order % 2 == 0 else nx - jj
                    if frozen[i, j]:
                        continue
                    a = min(d[i, j - 1], d[i, j + 1])
                    b = min(d[i - 1, j], d[i + 1, j])
                    if a >= big and b >= big:
                        continue
                    if abs(a - b) >= h:
                        cand = min(a, b) + h
                    else:
                        cand = 0.5 * (a + b + math.sqrt(2 * h * h - (a - b) * (a - b)))
                    if cand < d[i, j]:
                        d[i, j] = cand
    out = np.empty_like(phi)
    for i in range(ny):
        for j in range(nx):
            out[i, j] = d[i + 1, j + 1] if phi[i, j] >= 0 else -d[i + 1, j + 1]
    return out
