"""Scenario pipelines: build inputs from a config, run a module, write artifacts, return the verdict."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import io
from .config import ScenarioConfig, serialize_config
from .errors import LabError
from .geometry import Polyline, ScalarField2D, resample
from .verdict import Verdict, first_vanishing, increase_violations


def _circle(r: float, center=(0.0, 0.0), m: int = 1024) -> Polyline:
    th = 2 * np.pi * np.arange(m) / m
    return Polyline(np.column_stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)]))


def _ellipse(a: float, b: float, center=(0.0, 0.0), m: int = 1024) -> Polyline:
    th = 2 * np.pi * np.arange(m) / m
    return Polyline(np.column_stack([center[0] + a * np.cos(th), center[1] + b * np.sin(th)]))


def _figure_eight(m: int = 2048) -> Polyline:
    t = 2 * np.pi * np.arange(m) / m
    return Polyline(np.column_stack([np.cos(t), np.sin(t) * np.cos(t)]))


def _three_crossings(m: int = 4096) -> Polyline:
    t = 2 * np.pi * np.arange(m) / m
    return Polyline(np.column_stack([np.sin(t) + 2 * np.sin(2 * t), np.cos(t) - 2 * np.cos(2 * t)]))


def random_convex_curve(rng: np.random.Generator, amplitude: float, modes: int, center=(0.0, 0.0),
                        m: int = 2048) -> Polyline:
    """Unit circle with a random low-mode radial perturbation, scaled so sum k^2 |a_k| = amplitude."""
    k = np.arange(2, modes + 1)
    a = rng.uniform(-1.0, 1.0, len(k))
    phase = rng.uniform(0.0, 2 * np.pi, len(k))
    s = float((k * k * np.abs(a)).sum())
    a = a * (amplitude / s) if s > 0 else a * 0
    th = 2 * np.pi * np.arange(m) / m
    r = 1.0 + (a[:, None] * np.cos(k[:, None] * th[None] + phase[:, None])).sum(axis=0)
    return Polyline(np.column_stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)]))


# --------------------------------------------------------------------------
# pipelines: each writes its series and returns the verdict


def _csf_pair(cfg: ScenarioConfig, out: Path) -> Verdict:
    from .csf import run_pair_monitor

    p = cfg.params
    a = resample(_circle(p["radius_a"]), cfg.h)
    b = resample(_ellipse(p["radius_b"], p["radius_b"] * p["aspect_b"], (p["separation"], 0.0)), cfg.h)
    return _pair_artifacts(cfg, out, *run_pair_monitor(a, b, cfg.horizon, cfg.sample_dt,
                                                       record_frames=cfg.emit_frames))


def _custom(cfg: ScenarioConfig, out: Path) -> Verdict:
    from .csf import run_pair_monitor

    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    ang = rng.uniform(0.0, 2 * np.pi)
    a = random_convex_curve(rng, p["amplitude"], p["modes"])
    b = random_convex_curve(rng, p["amplitude"], p["modes"],
                            (p["separation"] * math.cos(ang), p["separation"] * math.sin(ang)))
    series, v = run_pair_monitor(resample(a, cfg.h), resample(b, cfg.h), cfg.horizon, cfg.sample_dt,
                                 record_frames=cfg.emit_frames)
    v.scenario = "custom"
    v.tolerances["seed"] = cfg.seed
    return _pair_artifacts(cfg, out, series, v)


def _pair_artifacts(cfg, out, series, verdict) -> Verdict:
    io.write_samples_csv(out / "series.csv", series.samples)
    if cfg.emit_frames:
        io.write_frames(out / "frames", series.frames, series.samples)
    return verdict


def _csf_self(cfg: ScenarioConfig, out: Path) -> Verdict:
    from .csf import run_self_monitor

    c0 = _figure_eight() if cfg.params["curve"] == "figure_eight" else _three_crossings()
    series, v = run_self_monitor(resample(c0, cfg.h), cfg.horizon, cfg.sample_dt, record_frames=cfg.emit_frames)
    return _pair_artifacts(cfg, out, series, v)


def _graphical_pair(cfg: ScenarioConfig, out: Path) -> Verdict:
    from .graphical import GraphPair, assemble_coefficients, evolve_pair_and_track_nodal

    m = int(round(2.0 / cfg.h)) + 1
    h = 2.0 / (m - 1)
    x = -1.0 + h * np.arange(m)
    if cfg.params["profile"] == "parabola":
        u = ScalarField2D(0 * x, h, (-1.0, 0.0))
        v = ScalarField2D(x * x - 0.25, h, (-1.0, 0.0))
    else:
        X, Y = np.meshgrid(x, x)
        u = ScalarField2D(0.05 * np.sin(np.pi * Y / 2), h, (-1.0, -1.0))
        v = ScalarField2D(0.05 * np.sin(np.pi * Y / 2) + X - 0.3 * np.sin(2 * Y), h, (-1.0, -1.0))
    pair = GraphPair(u, v)
    coeffs = assemble_coefficients(pair)
    records = evolve_pair_and_track_nodal(pair, cfg.horizon, cfg.sample_dt)
    dim = u.dim
    # in one dimension the intersection is a point set (count); in two it is a curve (components)
    if dim == 1:
        counts = [r.n_points for r in records]
    else:
        from .geometry import count_components

        counts = [count_components(r.zero_set, 2 * h) for r in records]
    verdict = Verdict("graphical_pair", tolerances={"h": h, "mask_frac": 0.5, "ellipticity_slack": 1e-9,
                                                    "C_bound": coeffs.C_bound, "transient_samples_forgiven": 1})
    bad, transient = increase_violations(counts)
    for i in transient:
        verdict.note(i, records[i].t, "transient-increase-forgiven")
    for i in bad:
        verdict.note(i, records[i].t, "monotone_count:increase")
    verdict.monotone_count = not bad
    verdict.t0_detected = first_vanishing([r.t for r in records], [r.n_points == 0 for r in records])
    verdict.summary = {"counts": counts, "measure": [r.measure_est for r in records],
                       "lambda_est": [r.lambda_est for r in records],
                       "ellipticity_ok_t0": coeffs.ellipticity_ok()}
    rows = [[r.t, c, r.measure_est, r.lambda_est] for r, c in zip(records, counts)]
    io.write_table_csv(out / "series.csv", ["t", "components", "measure", "lambda_est"], rows)
    return verdict


def _marriage_ring(cfg: ScenarioConfig, out: Path) -> Verdict:
    from .axisym import marriage_ring_profile, ring_intersection_series

    state = marriage_ring_profile(cfg.n, h=cfg.h)
    records, v = ring_intersection_series(state, cfg.horizon, cfg.sample_dt, delta=cfg.params["delta"])
    v.tolerances["h"] = state.profile.h
    v.tolerances["vertices"] = len(state.profile)
    io.write_samples_csv(out / "series.csv", [r.to_sample(cfg.n) for r in records])
    return v


def _dumbbell(cfg: ScenarioConfig, out: Path) -> Verdict:
    from .axisym import dumbbell_component_series, dumbbell_profile

    p = cfg.params
    state = dumbbell_profile(p["L"], p["eps"], h=cfg.h, n=cfg.n)
    z = 0.9 * p["eps"] if p["plane_z"] is None else p["plane_z"]
    records, v = dumbbell_component_series(state, z, cfg.horizon, cfg.sample_dt, L=p["L"], eps=p["eps"])
    io.write_samples_csv(out / "series.csv", records)
    return v


def _cone_fattening(cfg: ScenarioConfig, out: Path) -> Verdict:
    from .levelset import cone_intersection_scenario, zero_set

    p = cfg.params

    def keep(k, runs):
        if cfg.emit_frames:
            io.write_polylines_csv(out / "polylines" / f"sample_{k:04d}.csv",
                                   {"outer": zero_set(runs.outer), "inner": zero_set(runs.inner)})

    samples, v, reports = cone_intersection_scenario(p["aperture"], p["plane_offset"], cfg.horizon, cfg.sample_dt,
                                                     h=cfg.h, n=cfg.n, on_sample=keep)
    io.write_samples_csv(out / "series.csv", samples)
    io.write_fattening_csv(out / "fattening.csv", reports)
    return v


def _localizability(cfg: ScenarioConfig, out: Path) -> Verdict:
    from .levelset import (Disk, HalfSpace, double_cone_state, dumbbell_levelset_state, evolve_to,
                           localizability_check, two_circles_state, zero_set)

    case, h = cfg.params["case"], cfg.h
    t0 = cfg.params["t0"]
    if case == "circles":
        state, K = two_circles_state(h), HalfSpace((0.0, 0.0), (1.0, 0.0))
        t0 = 0.0 if t0 is None else t0
    elif case == "dumbbell":
        # after the neck pinches the two bells are cut apart by a disk around one of them
        state, K = dumbbell_levelset_state(h), Disk((1.6, 0.0), 1.55)
        t0 = 0.002 if t0 is None else t0
    else:
        state, K = double_cone_state(80.0, h, 0.5), HalfSpace((0.0, 0.0), (0.0, 1.0))
        t0 = 0.0 if t0 is None else t0
    if t0 > 0:
        state = evolve_to(state, t0)
    if cfg.emit_frames:
        io.write_polylines_csv(out / "polylines" / "start.csv", {"whole": zero_set(state)})
    res = localizability_check(state, K, cfg.horizon, cfg.sample_dt)
    v = Verdict(f"localizability:{case}", tolerances={"hausdorff_tol": res["tolerance"], "separation_tol": 2 * h,
                                                      "h": h, "t0": t0, "hug_limit": 10 * h})
    ok = res["verdict"] == "pass"
    if not ok:
        i = next(i for i, r in enumerate(res["samples"]) if not r["ok"])
        v.note(i, res["samples"][i]["t"], "localizability:fail")
    v.summary = {"localizable": ok, "cut_points": res["cut_points"], "samples": res["samples"]}
    io.write_table_csv(out / "series.csv", ["t", "hausdorff_union_whole", "piece_separation", "ok"],
                       [[r["t"], r["hausdorff_union_whole"], r["piece_separation"], r["ok"]]
                        for r in res["samples"]])
    return v


PIPELINES = {
    "csf_pair": _csf_pair,
    "csf_self": _csf_self,
    "graphical_pair": _graphical_pair,
    "marriage_ring": _marriage_ring,
    "dumbbell": _dumbbell,
    "cone_fattening": _cone_fattening,
    "localizability": _localizability,
    "custom": _custom,
}


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path) -> Verdict:
    """Run one scenario and write its artifacts into ``out_dir``.

    Writes ``config.json`` (with defaults applied), ``series.csv``, ``verdict.json``
    and, when frames are requested, SVG frames or zero-set polylines.
    Simulation failures propagate as ``LabError``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(serialize_config(cfg), encoding="utf-8")
    try:
        v = PIPELINES[cfg.scenario](cfg, out)
    except LabError as e:
        io.write_json(out / "error.json", {**e.to_dict(), "scenario": cfg.scenario})
        raise
    v.tolerances.setdefault("h", cfg.h)
    v.tolerances.setdefault("sample_dt", cfg.sample_dt)
    io.write_verdict(out / "verdict.json", v)
    return v
