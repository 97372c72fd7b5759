"""The ten acceptance criteria, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v``; a summary with one
PASS/FAIL line per criterion is printed at the end of the session.
"""

import time

import numpy as np
import pytest
from scipy.stats import norm

from fracperim.asymmetry import barycentric_asymmetry, s_deficit
from fracperim.experiments import ShapeFamily, SweepConfig, counterexample_curve, estimate_constant, run_sweep
from fracperim.geometry import Ball, Cuboid, Ellipsoid, Polytope
from fracperim.nonlocal_perimeter import (
    estimate_sperimeter,
    sperimeter_direct_mc,
    sperimeter_interval_exact,
    sperimeter_ray_mc,
)
from fracperim.sets import TwoBallSet
from fracperim.spherical import build_grid, lambda0_ns, random_nearly_spherical
from fracperim.verify import (
    check_fuglede_family,
    check_limits,
    check_main_theorem,
    check_scale_invariance,
    check_slicing_steps,
    check_step3_family,
)

S_VALUES = (0.25, 0.5, 0.75)
MC_SAMPLES = 1_000_000
BODIES = {
    "ball": Ball.unit(2),
    "square": Cuboid(np.zeros(2), [1.0, 1.0]),
    "ellipse": Ellipsoid(np.zeros(2), [1.5, 1 / 1.5]),
}


def convex_family():
    """Ellipses, rectangles, triangle, square and the standard simplex (all planar)."""
    fam = [Ellipsoid(np.zeros(2), [1 + e, 1 / (1 + e)]) for e in (0.05, 0.1, 0.2, 0.3, 0.5)]
    fam += [Cuboid(np.zeros(2), [a, 1.0]) for a in (1.0, 2.0, 3.0)]
    fam += [Polytope.regular_polygon(k) for k in (3, 4)]
    fam.append(Polytope.from_vertices([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    return fam


def test_criterion_1_interval_oracle(record):
    worst_z, worst_t = 0.0, 0.0
    for L in (1.0, 2.0):
        for s in S_VALUES:
            exact = sperimeter_interval_exact(L, s)
            for estimator in (sperimeter_ray_mc, sperimeter_direct_mc):
                t0 = time.perf_counter()
                est = estimator(Cuboid.interval(0.0, L), s, MC_SAMPLES, 0)
                worst_t = max(worst_t, time.perf_counter() - t0)
                worst_z = max(worst_z, abs(est.value - exact) / est.std_error)
    ok = worst_z <= 3 and worst_t < 10
    record(1, ok, f"max |z| = {worst_z:.2f} over 12 runs at 1e6 samples, slowest {worst_t:.2f} s")
    assert ok


def test_criterion_2_cross_estimator(record):
    worst_z, worst_t = 0.0, 0.0
    for name, body in BODIES.items():
        for s in S_VALUES:
            t0 = time.perf_counter()
            a = sperimeter_ray_mc(body, s, MC_SAMPLES, 0)
            b = sperimeter_direct_mc(body, s, MC_SAMPLES, 1)
            worst_t = max(worst_t, time.perf_counter() - t0)
            worst_z = max(worst_z, abs(a.value - b.value) / np.hypot(a.std_error, b.std_error))
    ok = worst_z <= 3 and worst_t < 60
    record(2, ok, f"ray vs direct: max |z| = {worst_z:.2f} on ball/square/ellipse, slowest case {worst_t:.2f} s")
    assert ok


def test_criterion_3_scale_invariance(record):
    margins = []
    for body in BODIES.values():
        for s in S_VALUES:
            margins.append(check_scale_invariance(body, s, 2.0, MC_SAMPLES, 0, method="ray_mc").margin)
            margins.append(check_scale_invariance(body, s, 2.0, method="quadrature").margin)
    ok = min(margins) >= 0
    record(3, ok, f"max |z| = {3 - min(margins):.2f} (ray MC, independent seeds; quadrature to 1e-9 relative)")
    assert ok


def test_criterion_4_limits(record):
    v0_int, v1_int = check_limits(Cuboid.interval(0.0, 1.0))
    v0_disc, v1_disc = check_limits(Ball.unit(2))
    kappa_int = v1_int.details["kappa"]
    ok = v0_int.passed and v0_disc.passed and abs(kappa_int - 1.0) <= 0.05
    record(
        4,
        ok,
        f"s->0 rel. errors {v0_int.details['relative_error']:.4f} (interval), "
        f"{v0_disc.details['relative_error']:.4f} (disc); kappa {kappa_int:.4f} (interval), "
        f"{v1_disc.details['kappa']:.4f} (disc, logged)",
    )
    assert ok


def test_criterion_5_exponent(record, tmp_path):
    t0 = time.perf_counter()
    fam = ShapeFamily("ellipsoids", (0.05, 0.1, 0.15, 0.2, 0.25, 0.3), 2)
    res = run_sweep(SweepConfig(fam, (0.5,), MC_SAMPLES, 0), tmp_path / "ellipses.csv")
    est = estimate_constant(res.rows)
    dt = time.perf_counter() - t0
    ok = 0.45 <= est.slope <= 0.55 and dt < 900
    record(5, ok, f"log-log slope {est.slope:.4f} +- {est.slope_stderr:.4f}, {dt:.1f} s")
    assert ok


def test_criterion_6_boundedness(record):
    fam = convex_family()
    spreads = []
    for s in S_VALUES:
        ratios = []
        for body in fam:
            d = s_deficit(body, s).value
            ratios.append(barycentric_asymmetry(body).value / np.sqrt(d))
        assert all(np.isfinite(ratios))
        spreads.append(max(ratios) / min(ratios))
    # regular k-gons approach the disc, where the ratio decays like k^(-(1+s)/2); logged only
    poly = [barycentric_asymmetry(Polytope.regular_polygon(k)).value
            / np.sqrt(s_deficit(Polytope.regular_polygon(k), 0.5).value) for k in (3, 5, 6, 8)]
    ok = max(spreads) < 3
    record(
        6,
        ok,
        "ratio spread " + ", ".join(f"{x:.2f}" for x in spreads) + f" at s = {S_VALUES} over {len(fam)} bodies"
        + "; info: k-gon ratios at s=0.5 for k=3,5,6,8: " + ", ".join(f"{x:.3f}" for x in poly),
    )
    assert ok


def test_criterion_7_fuglede(record):
    grid = build_grid(2, 256)
    rng = np.random.default_rng(2024)
    family = [random_nearly_spherical(rng, grid, 0.1) for _ in range(50)]
    min_ratio, min_margin = np.inf, np.inf
    for s in S_VALUES:
        v = check_fuglede_family(family, s)
        min_ratio = min(min_ratio, v.details["min_ratio"])
        min_margin = min(min_margin, v.margin)
    z = []
    for i, ns in enumerate(family):
        mc = barycentric_asymmetry(ns, 200_000, i, method="mc")
        z.append((mc.value - lambda0_ns(ns)) / mc.std_error)
    z = np.array(z)
    # 3 sigma held family-wise: pooled mean, and each z at the Bonferroni-adjusted level
    pooled = abs(z.mean()) * np.sqrt(len(z))
    z_max = norm.isf(norm.sf(3.0) / len(z))
    ok = min_margin >= 0 and min_ratio > 0 and pooled <= 3 and np.abs(z).max() <= z_max
    record(
        7,
        ok,
        f"50 sets: min ratio {min_ratio:.4f} (deterministic); radial lambda0 vs MC pooled |z| = {pooled:.2f}, "
        f"max |z| = {np.abs(z).max():.2f} (family-wise limit {z_max:.2f}; {int((np.abs(z) > 3).sum())} of 50 beyond 3 per set)",
    )
    assert ok


def test_criterion_8_slicing(record):
    triangle = Polytope.from_vertices([[0.0, 0.0], [2.0, 0.0], [1.0, 0.5]])
    cube = Cuboid(np.zeros(3), [1.0, 1.0, 1.0])
    step2 = {}
    for name, body in (("triangle", triangle), ("ball", Ball.unit(2)), ("cube", cube)):
        _, v2, _ = check_slicing_steps(body, 0.5, n_t=9, budget=1 << 16, per_slice_budget=1 << 12)
        step2[name] = v2
    gap = step2["triangle"].details["gap"] / step2["triangle"].details["bound"]
    step1 = [check_slicing_steps(b, 0.5)[0] for b in (Ball.unit(2), BODIES["square"])]
    spreads = [check_step3_family(convex_family(), s) for s in S_VALUES]
    ok = all(v.passed for v in step2.values()) and abs(gap) <= 1e-8 and all(v.passed for v in step1)
    ok = ok and all(v.passed for v in spreads)
    record(
        8,
        ok,
        f"step 2 exact (triangle gap {gap:.1e}); step 1 ratios "
        + ", ".join(f"{v.details['ratio']:.3f}" for v in step1)
        + "; step 3 spread "
        + ", ".join(f"{v.details['spread']:.2f}" for v in spreads),
    )
    assert ok


def test_criterion_9_counterexample(record):
    curve = counterexample_curve([0.02, 0.01, 0.005], 0.5)
    exact_two = all(r.lambda0 == 2.0 for r in curve.rows)
    failures = [check_main_theorem(TwoBallSet(e, TwoBallSet.min_separation(e)), 0.5, 200_000) for e in (0.05, 0.02)]
    asserted = all((not v.passed) and v.expected_failure for v in failures)
    coarse = counterexample_curve([0.2, 0.1, 0.05], 0.5).exponent
    ok = exact_two and abs(curve.exponent - 1.5) <= 0.15 and asserted
    record(
        9,
        ok,
        f"lambda0 = 2 exactly; exponent {curve.exponent:.4f} for eps 0.02..0.005 (target 1.5; "
        f"{coarse:.4f} for eps 0.2..0.05, info); main check fails as asserted "
        f"(ratios " + ", ".join(f"{v.details['ratio']:.1f}" for v in failures) + ")",
    )
    assert ok


def test_criterion_10_determinism(record, tmp_path):
    fam = ShapeFamily("two_ball", (0.2, 0.1), 2)
    cfg = SweepConfig(fam, (0.25, 0.5), 50_000, 11, fraenkel=True)
    run_sweep(cfg, tmp_path / "w1.csv", workers=1)
    run_sweep(cfg, tmp_path / "w4.csv", workers=4)
    same_sweep = (tmp_path / "w1.csv").read_bytes() == (tmp_path / "w4.csv").read_bytes()
    a = sperimeter_ray_mc(BODIES["ellipse"], 0.5, 200_000, 5, workers=1)
    b = sperimeter_ray_mc(BODIES["ellipse"], 0.5, 200_000, 5, workers=8)
    c = estimate_sperimeter(Ball.unit(3), 0.5, "line_mc", 1 << 16, 5)
    d = estimate_sperimeter(Ball.unit(3), 0.5, "line_mc", 1 << 16, 5)
    ok = same_sweep and a == b and c == d
    record(10, ok, "sweep CSV byte-identical for 1 and 4 workers; estimators identical across worker counts")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
