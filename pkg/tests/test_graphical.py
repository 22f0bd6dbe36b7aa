from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from mcflab.errors import LabError
from mcflab.geometry import ScalarField2D
from mcflab.graphical import (
    GraphPair,
    assemble_coefficients,
    difference_residual,
    evolve_graph,
    evolve_pair_and_track_nodal,
    middle_mask,
    one_sided_test,
    step_graphical,
    verify_coefficient_hypotheses,
)


def line_field(f, n=65, lo=-1.0, hi=1.0):
    h = (hi - lo) / (n - 1)
    x = lo + h * np.arange(n)
    return ScalarField2D(f(x), h, (lo, 0.0))


def square_field(f, n=33, lo=-1.0, hi=1.0):
    h = (hi - lo) / (n - 1)
    return ScalarField2D.from_function(f, n, n, h, (lo, lo))


def smooth_pair(n):
    u = square_field(lambda x, y: 0.4 * np.sin(1.3 * x + 0.2) * np.cos(y) + 0.1 * x * y, n)
    v = square_field(lambda x, y: 0.3 * np.cos(x - 0.5 * y) + 0.2 * x**2 - 0.1 * y, n)
    return GraphPair(u, v)


# --- solver ---------------------------------------------------------------------


def test_plane_is_static():
    f = square_field(lambda x, y: 0 * x)
    out = step_graphical(f, 0.2 * f.h**2)
    assert np.array_equal(out.values, f.values)


def test_affine_graph_is_static():
    f = square_field(lambda x, y: 0.3 * x)
    out = evolve_graph(f, 50 * f.h**2)
    assert np.abs(out.values - f.values).max() < 1e-13


@pytest.mark.parametrize("n", [121, 241])
def test_grim_reaper_translates(n):
    f = line_field(lambda x: -np.log(np.cos(x)), n, -1.2, 1.2)
    u0 = f.values
    for T in (0.05, 0.1):
        out = evolve_graph(f, T, boundary_at=lambda t: u0 + t)
        assert np.abs(out.values - T - u0).max() < 5 * f.h**2


def test_step_guards():
    f = square_field(lambda x, y: 0.1 * x)
    with pytest.raises(LabError) as e:
        step_graphical(f, f.h**2)
    assert e.value.code == "cfl-violation"
    steep = square_field(lambda x, y: 12 * x)
    with pytest.raises(LabError) as e:
        step_graphical(steep, 0.1 * steep.h**2)
    assert e.value.code == "gradient-blowup"


# --- coefficients ---------------------------------------------------------------


def test_flat_pair_gives_identity():
    z = square_field(lambda x, y: 0 * x)
    c = assemble_coefficients(GraphPair(z, z.with_values(np.ones_like(z.values))))
    assert np.array_equal(c.a, np.broadcast_to(np.eye(2), c.a.shape))
    assert np.all(c.b == 0)


def test_opposite_slopes_quarter_pi():
    x = lambda s: s  # noqa: E731
    pair = GraphPair(line_field(x), line_field(lambda s: -s))
    c = assemble_coefficients(pair)
    oracle = quad(lambda th: 1 / (1 + (1 - 2 * th) ** 2), 0, 1)[0]
    assert oracle == pytest.approx(np.pi / 4, abs=1e-14)
    assert np.abs(c.a[..., 0, 0] - np.pi / 4).max() < 1e-10
    assert np.abs(c.b).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_ellipticity_bracket_random_pairs(seed):
    r = np.random.default_rng(seed)
    k = r.normal(size=(2, 4))
    u = square_field(lambda x, y: k[0, 0] * np.sin(k[0, 1] * x + k[0, 2] * y) + k[0, 3] * x * y, 25)
    v = square_field(lambda x, y: k[1, 0] * np.cos(k[1, 1] * x - k[1, 2] * y) + k[1, 3] * y * y, 25)
    c = assemble_coefficients(GraphPair(u, v))
    assert np.allclose(c.a, np.swapaxes(c.a, -1, -2))
    assert c.ellipticity_ok(1e-9)


def test_residual_is_second_order():
    errs = []
    for n in (33, 65, 129):
        p = smooth_pair(n)
        errs.append(np.abs(difference_residual(p)[middle_mask(p.u)]).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() >= 1.8


def test_hypothesis_report_constant_coefficients():
    z = square_field(lambda x, y: 0 * x, 17)
    c = assemble_coefficients(GraphPair(z, z.with_values(np.full_like(z.values, 2.0))))
    rep = verify_coefficient_hypotheses([c, c, c], [0.0, 0.1, 0.2], z.h)
    assert rep["lipschitz_est"] == 0.0 and rep["b_sup"] == 0.0 and rep["ellipticity_ok"]


def test_hypothesis_report_opposite_slopes():
    pair = GraphPair(square_field(lambda x, y: x, 17), square_field(lambda x, y: -x, 17))
    c = assemble_coefficients(pair)
    rep = verify_coefficient_hypotheses([c] * 3, [0.0, 0.01, 0.02], pair.h)
    assert rep["b_sup"] < 1e-12


def _evolved_slices(n):
    p = smooth_pair(n)
    u, v = p.u, p.v
    out, times = [], []
    for T in (0.0, 0.01, 0.02):
        u, v = evolve_graph(u, T, t0=times[-1] if times else 0.0), evolve_graph(v, T, t0=times[-1] if times else 0.0)
        out.append(assemble_coefficients(GraphPair(u, v)))
        times.append(T)
    return out, times, p.h, middle_mask(p.u)


def test_lipschitz_stable_under_refinement():
    s1, t1, h1, m1 = _evolved_slices(33)
    s2, t2, h2, m2 = _evolved_slices(65)
    r1 = verify_coefficient_hypotheses(s1, t1, h1, mask=m1)
    r2 = verify_coefficient_hypotheses(s2, t2, h2, mask=m2)
    assert np.isfinite(r1["lipschitz_est"]) and r1["lipschitz_est"] > 0
    assert 0.5 < r2["lipschitz_est"] / r1["lipschitz_est"] < 2.0
    assert r1["ellipticity_ok"] and r2["ellipticity_ok"]


# --- nodal sets -----------------------------------------------------------------


def test_parabola_zeros_merge_and_vanish():
    def run(n):
        u = line_field(lambda x: 0 * x, n)
        v = line_field(lambda x: x * x - 0.25, n)
        return evolve_pair_and_track_nodal(GraphPair(u, v), 0.3, 0.01)

    coarse, fine = run(81), run(321)
    counts = [r.n_points for r in coarse]
    assert counts[0] == 2 and counts[-1] == 0
    assert all(c <= 2 for c in counts)
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert np.allclose(np.sort(coarse[0].zero_set.points[:, 0]), [-0.5, 0.5], atol=1e-9)
    # positions agree with the 4x resolution solve
    for a, b in zip(coarse, fine):
        assert a.n_points == b.n_points
        if a.n_points:
            gap = np.abs(np.sort(a.zero_set.points[:, 0]) - np.sort(b.zero_set.points[:, 0])).max()
            assert gap < 20 * (2 / 80) ** 2
    assert all(r.lambda_est > 0 for r in coarse)


def test_shifted_copy_has_no_nodal_set():
    u = line_field(lambda x: 0.3 * np.sin(2 * x))
    rec = evolve_pair_and_track_nodal(GraphPair(u, u.with_values(u.values + 1)), 0.05, 0.01)
    assert all(r.n_points == 0 and r.measure_est == 0 for r in rec)


def test_coincident_flows_rejected():
    u = line_field(lambda x: 0.3 * np.sin(2 * x))
    with pytest.raises(LabError) as e:
        evolve_pair_and_track_nodal(GraphPair(u, u), 0.05, 0.01)
    assert e.value.code == "flows-coincide"


@pytest.mark.parametrize("n", [33, 65])
def test_planar_nodal_line_length_bounded(n):
    u = square_field(lambda x, y: 0.05 * np.sin(np.pi * y / 2), n)
    v = square_field(lambda x, y: 0.05 * np.sin(np.pi * y / 2) + x, n)
    rec = evolve_pair_and_track_nodal(GraphPair(u, v), 0.02, 0.005)
    # middle half of a width-2 square: the nodal line spans width 1
    for r in rec:
        assert r.measure_est == pytest.approx(1.0 + u.h, abs=5 * u.h)
        assert r.lambda_est > 0


def test_nodal_length_converges():
    def est(n):
        u = square_field(lambda x, y: 0 * x, n)
        v = square_field(lambda x, y: x - 0.3 * np.sin(2 * y), n)
        return evolve_pair_and_track_nodal(GraphPair(u, v), 0.01, 0.005)

    a, b = est(33), est(65)
    h = 2 / 32
    for ra, rb in zip(a, b):
        assert abs(ra.measure_est - rb.measure_est) < 5 * h


def test_swapping_u_and_v_keeps_nodal_set():
    u = square_field(lambda x, y: 0.2 * np.sin(2 * x + y))
    v = square_field(lambda x, y: 0.1 * y + 0.05 * x * x)
    a = evolve_pair_and_track_nodal(GraphPair(u, v), 0.01, 0.005)
    b = evolve_pair_and_track_nodal(GraphPair(v, u), 0.01, 0.005)
    for ra, rb in zip(a, b):
        pa = {tuple(np.round(p, 9)) for p in ra.zero_set.points}
        pb = {tuple(np.round(p, 9)) for p in rb.zero_set.points}
        assert pa == pb
        c1 = assemble_coefficients(GraphPair(u, v))
        c2 = assemble_coefficients(GraphPair(v, u))
        assert np.allclose(c1.a, c2.a) and np.allclose(c1.b, c2.b)


# --- one-sidedness ----------------------------------------------------------------


def test_one_sided_linear():
    w = ScalarField2D.from_function(lambda x, y: x - 0.5, 65, 65, 1 / 64)
    res = one_sided_test(w)
    assert res["sign_change"] and res["nodal_measure_est"] == pytest.approx(1.0, abs=1e-9)


def test_one_sided_positive_field():
    res = one_sided_test(square_field(lambda x, y: 1 + x * x))
    assert not res["sign_change"] and res["nodal_measure_est"] == 0


def test_one_sided_touching_zero():
    res = one_sided_test(square_field(lambda x, y: x * x + y * y))
    assert not res["sign_change"]
    assert res["verdict"] == "no-sign-change"
    assert res["nodal_measure_est"] < 1e-3
