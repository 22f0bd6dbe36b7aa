"""Acceptance criteria, one test each, at the stated resolutions and tolerances.

Each test records a one-line PASS/FAIL summary that is printed in the
"acceptance criteria" section at the end of the pytest run.
"""

from __future__ import annotations

import functools
import json
import math
import time

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from conftest import ACCEPTANCE, circle, ellipse
from mcflab.axisym import (
    dumbbell_component_series,
    dumbbell_profile,
    evolve_axisym,
    marriage_ring_profile,
    ring_intersection_series,
    ring_local_patches,
    section_radii,
    sphere_profile,
)
from mcflab.cli import main
from mcflab.config import parse_config
from mcflab.csf import CsfState, evolve, run_pair_monitor, run_self_monitor
from mcflab.geometry import Polyline, ScalarField2D, sphere_area
from mcflab.graphical import (
    GraphPair,
    assemble_coefficients,
    difference_residual,
    middle_mask,
    one_sided_test,
)
from mcflab.levelset import (
    circle_state,
    cone_intersection_scenario,
    dumbbell_levelset_state,
    fattening_series,
    redistance,
)
from mcflab.report import emit_report
from mcflab.scenarios import run_scenario


def criterion(num: int, title: str):
    def wrap(fn):
        @functools.wraps(fn)
        def test(*args, **kwargs):
            t0 = time.perf_counter()
            try:
                ok, detail = fn(*args, **kwargs)
            except Exception as e:
                ACCEPTANCE.append((num, False, f"{title}: raised {type(e).__name__}: {e}"))
                raise
            ACCEPTANCE.append((num, bool(ok), f"{title}: {detail} [{time.perf_counter() - t0:.1f} s]"))
            assert ok, detail

        return test

    return wrap


def square_field(f, n, lo=-1.0, hi=1.0):
    h = (hi - lo) / (n - 1)
    return ScalarField2D.from_function(f, n, n, h, (lo, lo))


def line_field(f, n=65, lo=-1.0, hi=1.0):
    h = (hi - lo) / (n - 1)
    return ScalarField2D(f(lo + h * np.arange(n)), h, (lo, 0.0))


# ---------------------------------------------------------------------------------


@criterion(1, "shrinking circle and sphere")
def test_c01_shrinking_circle_and_sphere():
    t0 = time.perf_counter()
    # CSF circle, 512 vertices, extinction at 1/2
    c = CsfState(circle(1.0, 512))
    h_c = c.curve.h
    err_c = 0.0
    for t in np.linspace(0.05, 0.4, 8):
        c = evolve(c, float(t))
        r2 = (c.curve.vertices**2).sum(axis=1)
        err_c = max(err_c, float(np.abs(r2 - (1 - 2 * t)).max()))
    # axisymmetric sphere, n = 2, h = 1/256, extinction at 1/4
    h_s = 1 / 256
    s = sphere_profile(1.0, h_s, n=2)
    err_s = 0.0
    for t in np.linspace(0.025, 0.2, 8):
        s = evolve_axisym(s, float(t))
        r2 = (s.profile.vertices**2).sum(axis=1)
        err_s = max(err_s, float(np.abs(r2 - (1 - 4 * t)).max()))
    runtime = time.perf_counter() - t0
    ok = err_c < 10 * h_c and err_s < 10 * h_s and runtime < 20
    return ok, f"circle max|r^2 - law| = {err_c:.2e} (< {10 * h_c:.2e}), sphere {err_s:.2e} (< {10 * h_s:.2e})"


@criterion(2, "difference-equation ellipticity")
def test_c02_ellipticity():
    pairs = {
        "trig": GraphPair(square_field(lambda x, y: 0.4 * np.sin(1.3 * x + 0.2) * np.cos(y) + 0.1 * x * y, 65),
                          square_field(lambda x, y: 0.3 * np.cos(x - 0.5 * y) + 0.2 * x**2 - 0.1 * y, 65)),
        "steep": GraphPair(square_field(lambda x, y: 1.5 * x + 0.5 * np.sin(2 * y), 65),
                           square_field(lambda x, y: -0.8 * x * y + np.cos(x + y), 65)),
        "curve": GraphPair(line_field(lambda x: np.exp(x) - 1), line_field(lambda x: 0.5 * np.sin(3 * x))),
    }
    ring = marriage_ring_profile(2)
    for T in (0.0, 0.001, 0.002):
        pairs[f"ring t={T}"] = ring_local_patches(evolve_axisym(ring, T) if T else ring)
    bad = [name for name, p in pairs.items() if not assemble_coefficients(p).ellipticity_ok(1e-9)]
    # closed form: u = x1, v = -x1 gives a11 = int_0^1 d theta / (1 + (1 - 2 theta)^2) = pi/4
    a = assemble_coefficients(GraphPair(line_field(lambda x: x), line_field(lambda x: -x))).a[..., 0, 0]
    oracle = quad(lambda th: 1 / (1 + (1 - 2 * th) ** 2), 0, 1)[0]
    err = float(np.abs(a - math.pi / 4).max())
    ok = not bad and len(pairs) >= 3 and err < 1e-10 and abs(oracle - math.pi / 4) < 1e-12
    return ok, f"{len(pairs)} pairs in bracket (failing: {bad or 'none'}), |a11 - pi/4| = {err:.1e}"


@criterion(3, "difference-equation residual order")
def test_c03_residual_order():
    t0 = time.perf_counter()
    errs = []
    for n in (33, 65, 129):
        p = GraphPair(square_field(lambda x, y: 0.4 * np.sin(1.3 * x + 0.2) * np.cos(y) + 0.1 * x * y, n),
                      square_field(lambda x, y: 0.3 * np.cos(x - 0.5 * y) + 0.2 * x**2 - 0.1 * y, n))
        errs.append(float(np.abs(difference_residual(p)[middle_mask(p.u)]).max()))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    ok = orders.min() >= 1.8 and time.perf_counter() - t0 < 60
    return ok, f"residuals {', '.join(f'{e:.2e}' for e in errs)}, orders {', '.join(f'{o:.2f}' for o in orders)}"


def circle_pair_t0(r1, r2, d):
    """First time two shrinking circles stop meeting (exact)."""
    def meet(t):
        a, b = math.sqrt(r1 * r1 - 2 * t), math.sqrt(r2 * r2 - 2 * t)
        return min(a + b - d, d - abs(a - b))

    t_ext = 0.5 * min(r1, r2) ** 2
    if meet(t_ext * (1 - 1e-12)) > 0:
        return t_ext
    return brentq(meet, 0.0, t_ext * (1 - 1e-12), xtol=1e-12)


@criterion(4, "CSF intersection monotonicity")
def test_c04_csf_pairs():
    dt = 0.01
    rows = []
    circles = [(1.0, 1.0, 1.0), (1.0, 0.8, 1.2), (1.0, 0.6, 0.9), (1.2, 1.0, 0.5), (0.7, 0.7, 1.0),
               (1.0, 0.5, 1.2)]
    for r1, r2, d in circles:
        a, b = circle(r1, int(256 * r1)), circle(r2, int(256 * r2), (d, 0.0))
        oracle = circle_pair_t0(r1, r2, d)
        _, v = run_pair_monitor(a, b, oracle + 0.05, dt)
        rows.append((f"circles {r1},{r2},{d}", v.monotone_count, v.t0_detected, oracle))
    # non-circular pairs: the oracle is a rerun at twice the resolution
    others = [
        (lambda m: ellipse(1.5, 0.7, m), lambda m: circle(1.0, m)),
        (lambda m: ellipse(1.2, 0.6, m, angle=0.5), lambda m: ellipse(1.0, 0.8, m, (0.6, 0.2))),
        (lambda m: ellipse(1.0, 0.5, m), lambda m: ellipse(1.0, 0.5, m, angle=math.pi / 2)),
        (lambda m: circle(0.9, m), lambda m: ellipse(1.3, 0.4, m, (0.8, -0.3), 0.3)),
    ]
    for k, (fa, fb) in enumerate(others):
        _, v = run_pair_monitor(fa(256), fb(256), 0.5, dt)
        _, ref = run_pair_monitor(fa(512), fb(512), 0.5, dt)
        rows.append((f"convex pair {k}", v.monotone_count, v.t0_detected, ref.t0_detected))
    bad = [r for r in rows if not r[1] or r[2] is None or r[3] is None or abs(r[2] - r[3]) > 2 * dt]
    two = rows[0]
    ok = not bad and len(rows) == 10 and abs(two[2] - 0.375) <= 0.02
    return ok, f"{len(rows)} pairs, all monotone and t0 within 2 sample_dt: {not bad}; unit circles t0 = {two[2]}"


@criterion(5, "CSF self-intersection monotonicity")
def test_c05_self_intersections():
    def fig8(m):
        t = 2 * np.pi * np.arange(m) / m
        return Polyline(np.column_stack([np.cos(t), np.sin(t) * np.cos(t)]))

    def three(m):
        t = 2 * np.pi * np.arange(m) / m
        return Polyline(np.column_stack([np.sin(t) + 2 * np.sin(2 * t), np.cos(t) - 2 * np.cos(2 * t)]))

    out = {}
    for name, c0, T, dt in (("figure-eight", fig8(400), 0.2, 0.01), ("three-crossing", three(400), 1.0, 0.05)):
        series, v = run_self_monitor(c0, T, dt)
        counts = series.counts()
        out[name] = (counts, v.monotone_count and all(x >= y for x, y in zip(counts, counts[1:])))
    ok = all(m for _, m in out.values()) and out["figure-eight"][0][0] == 1 and out["three-crossing"][0][0] == 3
    return ok, "; ".join(f"{k}: {c[0]} -> {c[-1]} nonincreasing={m}" for k, (c, m) in out.items())


@criterion(6, "marriage ring measure increase")
def test_c06_marriage_ring():
    t0 = time.perf_counter()
    ring = marriage_ring_profile(2)
    C1 = sphere_area(1)
    dt = 1e-4
    m0 = C1 * section_radii(ring).sum()
    m1 = C1 * section_radii(evolve_axisym(ring, dt)).sum()
    fd = (m1 - m0) / dt
    analytic = 2 * math.pi * ((10 - 1 / 20) - (1 / 10 + 1 / 21))
    records, v = ring_intersection_series(ring, 0.02, 0.001)
    delta = v.summary["delta"]
    strictly = v.summary["measure_strictly_increasing_on_delta"]
    ok = (len(ring.profile) >= 1024 and fd > 0 and abs(fd - analytic) <= 0.1 * analytic and strictly
          and delta >= 0.002 and time.perf_counter() - t0 < 60)
    return ok, (f"{len(ring.profile)} vertices, forward difference {fd:.2f} vs analytic {analytic:.2f} "
                f"({100 * abs(fd - analytic) / analytic:.1f}%), strictly increasing on [0, {delta}]: {strictly}")


@criterion(7, "dumbbell split with sphere barriers")
def test_c07_dumbbell():
    h, eps = 0.005, 0.08
    s = dumbbell_profile(1.0, eps, h=h)
    _, v = dumbbell_component_series(s, 0.9 * eps, 0.004, 0.0002)
    counts = v.summary["counts"]
    ok = counts[0] == 1 and max(counts) >= 2 and v.summary["transition_1_to_2"] and v.summary["barrier_ok"]
    return ok, (f"components {counts[0]} -> {max(counts)} at t = {v.summary['transition_time']}, "
                f"min sphere clearance {v.summary['min_clearance']:.2e} (> -{3 * h})")


@criterion(8, "cone intersection with a plane")
def test_c08_cone():
    samples, v, _ = cone_intersection_scenario(80.0, 0.0, 0.01, 0.002, h=1 / 256)
    first = samples[0]
    ok0 = first.measure_est == 0 and first.components == 1
    later = all(s.measure_est > 0 and s.dim_est is not None and 0.8 <= s.dim_est <= 1.2 for s in samples[1:])
    spread = v.summary["ratio_spread"]
    ok = ok0 and later and v.monotone_dim is False and spread < 0.1
    dims = ", ".join(f"{s.dim_est:.2f}" for s in samples[1:])
    return ok, (f"t=0 (measure {first.measure_est}, components {first.components}); dims {dims}; "
                f"r/sqrt(t) spread {100 * spread:.2f}%; monotone_dim = {v.monotone_dim}")


@criterion(9, "localizability")
def test_c09_localizability(tmp_path):
    verdicts = []
    for case in ("dumbbell", "circles", "cone"):
        cfg = parse_config(json.dumps({"scenario": "localizability", "params": {"case": case}}))
        verdicts.append(run_scenario(cfg, tmp_path / case))
    summary, _ = emit_report(verdicts)
    status = {r["scenario"]: r["status"] for r in summary["rows"]}
    ok = status == {"localizability:dumbbell": "pass", "localizability:circles": "pass",
                    "localizability:cone": "expected-fail"}
    return ok, ", ".join(f"{k.split(':')[1]} {v}" for k, v in status.items())


def _grows_three(fat: list[float]) -> bool:
    run = 1
    for a, b in zip(fat, fat[1:]):
        run = run + 1 if b > a else 1
        if run >= 3:
            return True
    return False


@criterion(10, "fattening detector calibration")
def test_c10_fattening():
    parts = []
    ok = True
    for h in (1 / 64, 1 / 128):
        reports, _ = fattening_series(redistance(circle_state(0.6, h)), 0.1, 0.025)
        fat = any(r.verdict == "fattening" for r in reports)
        ok &= not fat
        parts.append(f"circle h=1/{round(1 / h)} {'fattening' if fat else 'non-fattening'}")
    for h in (1 / 128, 1 / 256):
        reports, _ = fattening_series(dumbbell_levelset_state(h), 0.0045, 0.0015)
        fat = any(r.verdict == "fattening" for r in reports)
        ok &= not fat
        parts.append(f"dumbbell h=1/{round(1 / h)} {'fattening' if fat else 'non-fattening'}")
    for h in (1 / 128, 1 / 256):
        _, v, reports = cone_intersection_scenario(80.0, 0.0, 0.01, 0.002, h=h)
        grows = _grows_three([r.fat_volume for r in reports])
        ok &= bool(v.fattening) and grows
        parts.append(f"cone h=1/{round(1 / h)} {'fattening' if v.fattening else 'non-fattening'}"
                     f"{' (growing)' if grows else ''}")
    return ok, "; ".join(parts)


@criterion(11, "nodal one-sidedness")
def test_c11_nodal_one_sided():
    rng = np.random.default_rng(2024)
    n, h = 33, 2 / 32
    measures, unresolved = [], 0
    while len(measures) < 100:
        k = rng.normal(size=(3, 4))
        c = rng.normal(scale=0.5)

        def f(x, y, k=k, c=c):
            return c + sum(k[j, 0] * np.sin(k[j, 1] * x + k[j, 2] * y + k[j, 3]) for j in range(3))

        w = square_field(f, n)
        res = one_sided_test(w)
        if not res["sign_change"]:
            continue
        # Lipschitz certificate: |w(p)| >= G h puts a disk of radius h (at worst a quarter disk in a
        # corner) on each side, so the separating zero set is at least pi h / 2 long
        G = float(np.sum(np.abs(k[:, 0]) * np.hypot(k[:, 1], k[:, 2])))
        if w.values.min() <= -G * h and w.values.max() >= G * h:
            measures.append(res["nodal_measure_est"])
        else:
            unresolved += 1
    low = min(measures)
    return low > h, (f"100 fields with a certified sign change, smallest nodal measure {low:.3f} (> h = {h:.4f}); "
                     f"{unresolved} sub-grid sign changes skipped")


@criterion(12, "determinism")
def test_c12_determinism(tmp_path):
    cfgs = tmp_path / "cfg"
    cfgs.mkdir()
    docs = {
        "pair": {"scenario": "csf_pair", "horizon": 0.1, "sample_dt": 0.02},
        "random": {"scenario": "custom", "seed": 11, "horizon": 0.1, "sample_dt": 0.02},
        "ring": {"scenario": "marriage_ring", "horizon": 0.002, "sample_dt": 0.0005},
        "cone": {"scenario": "cone_fattening", "h": 1 / 64, "horizon": 0.004, "sample_dt": 0.001},
        "graph": {"scenario": "graphical_pair", "horizon": 0.04, "sample_dt": 0.01},
    }
    for name, d in docs.items():
        (cfgs / f"{name}.json").write_text(json.dumps(d))
    assert main(["suite", str(cfgs), "--out", str(tmp_path / "a")]) == 0
    assert main(["suite", str(cfgs), "--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
    same = [(tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files]
    ok = len(files) >= len(docs) and all(same)
    return ok, f"{sum(same)}/{len(files)} CSV files bit-identical across two suite runs"
