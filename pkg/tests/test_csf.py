from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import circle, ellipse
from mcflab.csf import CsfState, evolve, max_dt, run_pair_monitor, run_self_monitor, step_csf
from mcflab.errors import LabError
from mcflab.geometry import Polyline, resample


def figure_eight(n=600):
    t = 2 * np.pi * np.arange(n) / n
    return Polyline(np.column_stack([np.cos(t), np.sin(t) * np.cos(t)]))


def three_crossings(n=600):
    t = 2 * np.pi * np.arange(n) / n
    return Polyline(np.column_stack([np.sin(t) + 2 * np.sin(2 * t), np.cos(t) - 2 * np.cos(2 * t)]))


def turning_number(curve: Polyline) -> int:
    e = np.diff(curve.vertices, axis=0, append=curve.vertices[:1])
    ang = np.arctan2(e[:, 1], e[:, 0])
    turn = np.angle(np.exp(1j * (np.roll(ang, -1) - ang)))
    return int(round(turn.sum() / (2 * np.pi)))


def test_shrinking_circle_law():
    h = 2 * np.pi / 512
    state = CsfState(circle(n=512))
    for t in (0.1, 0.2, 0.3, 0.4, 0.45):
        state = evolve(state, t)
        r = np.hypot(*state.curve.vertices.T)
        assert np.abs(r - math.sqrt(1 - 2 * t)).max() < 5 * h * h


def test_ellipse_area_rate():
    state = CsfState(ellipse(3.0, 1.0, n=800))
    a0 = state.curve.signed_area()
    state = evolve(state, 0.05)
    rate = (state.curve.signed_area() - a0) / 0.05
    assert rate == pytest.approx(-2 * np.pi, rel=0.01)


def test_grim_reaper_translates_at_unit_speed():
    x = np.linspace(-1.2, 1.2, 241)
    c = resample(Polyline(np.column_stack([x, -np.log(np.cos(x))]), closed=False), 0.01)
    apex = lambda p: np.interp(0.0, p.vertices[:, 0], p.vertices[:, 1])  # noqa: E731
    for t in (0.05, 0.1):
        out = evolve(CsfState(c), t)
        assert (apex(out.curve) - apex(c)) / t == pytest.approx(1.0, rel=0.02)
    # the pinned ends stay put
    assert np.array_equal(out.curve.vertices[[0, -1]], c.vertices[[0, -1]])


def test_single_steps_match_batched_evolution():
    s = CsfState(ellipse(1.5, 0.7, n=200))
    a = s
    while a.t < 0.01 - 1e-15:
        a = step_csf(a, min(max_dt(a.curve), 0.01 - a.t))
    b = evolve(s, 0.01)
    assert np.abs(a.curve.vertices - b.curve.vertices).max() < 1e-12


def test_cfl_violation():
    s = CsfState(circle(n=128))
    with pytest.raises(LabError) as e:
        step_csf(s, 2 * max_dt(s.curve))
    assert e.value.code == "cfl-violation"


def test_extinction_sets_not_alive():
    out = evolve(CsfState(circle(r=0.5, n=128)), 0.2)
    assert not out.alive and out.reason == "extinction"
    assert out.t < 0.125


@pytest.mark.parametrize("make, expected", [(circle, 1), (figure_eight, 0), (three_crossings, 2)])
def test_turning_number_preserved(make, expected):
    c = make()
    assert turning_number(c) == expected
    state = CsfState(c)
    for t in np.linspace(0.01, 0.3, 6):
        state = evolve(state, t)
        if not state.alive:
            break
        assert turning_number(state.curve) == expected


def circle_pair_oracle(r1, r2, d, times):
    """Exact intersection status for concentric-shrinking circles r^2 - 2t."""
    status = []
    for t in times:
        a2, b2 = r1 * r1 - 2 * t, r2 * r2 - 2 * t
        if a2 <= 0 or b2 <= 0:
            status.append(False)
            continue
        a, b = math.sqrt(a2), math.sqrt(b2)
        status.append(abs(a - b) <= d <= a + b)
    return status


def test_two_unit_circles_separate_at_three_eighths():
    series, verdict = run_pair_monitor(circle(n=256), circle(n=256, center=(1, 0)), 0.45, 0.01)
    assert verdict.monotone_count
    assert series.counts()[0] == 2
    assert set(series.counts()) == {0, 2}
    assert verdict.t0_detected == pytest.approx(0.375, abs=0.02)


def test_disjoint_circles_stay_empty():
    series, verdict = run_pair_monitor(circle(n=128), circle(n=128, center=(3, 0)), 0.3, 0.05)
    assert all(s.empty for s in series.samples)
    assert verdict.monotone_count and verdict.t0_detected == 0.0


def test_identical_inputs_rejected():
    with pytest.raises(LabError) as e:
        run_pair_monitor(circle(), circle(), 0.1, 0.05)
    assert e.value.code == "identical-inputs"


def test_circle_ellipse_four_crossings_against_rerun():
    a, b = circle(n=256), ellipse(1.5, 0.7, n=256)
    series, verdict = run_pair_monitor(a, b, 0.35, 0.01)
    assert series.counts()[0] == 4
    assert verdict.monotone_count
    assert all(x >= y for x, y in zip(series.counts(), series.counts()[1:]))
    fine, fine_verdict = run_pair_monitor(circle(n=512), ellipse(1.5, 0.7, n=512), 0.35, 0.01)
    assert fine_verdict.t0_detected == pytest.approx(verdict.t0_detected, abs=0.02)


def test_refinement_changes_counts_only_near_transitions():
    coarse, vc = run_pair_monitor(circle(n=200), circle(r=0.8, n=200, center=(1.2, 0.1)), 0.3, 0.01)
    fine, vf = run_pair_monitor(circle(n=400), circle(r=0.8, n=400, center=(1.2, 0.1)), 0.3, 0.01)
    assert abs(vc.t0_detected - vf.t0_detected) < 2 * 0.01
    for s, f in zip(coarse.samples, fine.samples):
        if abs(s.t - vf.t0_detected) > 2 * 0.01:
            assert s.components == f.components


def test_discrete_avoidance():
    a, b = circle(r=0.6, n=256), ellipse(1.2, 0.5, n=256, center=(2.0, 0.3), angle=0.4)
    h = max(a.h, b.h)
    sa, sb = CsfState(a), CsfState(b)
    last = None
    for t in np.arange(0.0, 0.16, 0.02):
        sa, sb = evolve(sa, t), evolve(sb, t)
        d = np.hypot(*(sa.curve.vertices[:, None] - sb.curve.vertices[None]).transpose(2, 0, 1)).min()
        if last is not None:
            assert d > last - 3 * h
        last = d


def test_self_monitor_embedded_circle():
    series, verdict = run_self_monitor(circle(n=200), 0.3, 0.05)
    assert all(c == 0 for c in series.counts())
    assert verdict.monotone_count


def test_self_monitor_figure_eight():
    series, verdict = run_self_monitor(figure_eight(400), 0.2, 0.01)
    counts = series.counts()
    assert counts[0] == 1 and verdict.monotone_count
    assert all(x >= y for x, y in zip(counts, counts[1:]))
    # the plateau survives refinement
    fine, _ = run_self_monitor(figure_eight(800), 0.2, 0.01)
    plateau = [c for c, s in zip(counts, series.samples) if not s.flags]
    assert plateau == fine.counts()[: len(plateau)]


def test_self_monitor_three_crossings():
    series, verdict = run_self_monitor(three_crossings(400), 1.0, 0.05)
    counts = series.counts()
    assert counts[0] == 3 and verdict.monotone_count
    assert all(x >= y for x, y in zip(counts, counts[1:]))


def test_verdict_json_has_tolerances():
    _, verdict = run_pair_monitor(circle(n=64), circle(n=64, center=(0.5, 0)), 0.05, 0.01)
    d = verdict.to_json()
    assert d["schema"] == "1"
    assert {"cfl", "link_r", "dedup_r", "tol_touch"} <= set(d["tolerances"])
