"""Geometry tests: radii formulas, containment margin, profile export."""

import math

import numpy as np
import pytest

from cbo_hull.errors import InvalidGeometryError
from cbo_hull.hull import (
    DEFAULT_BASELINE,
    BaselineGeometry,
    HullParams,
    baseline_radius,
    containment_margin,
    hull_radius,
    hull_radius_profile,
    is_valid_geometry,
    min_tail_radius,
    nose_radius,
    profile,
    tail_radius,
    write_profile_csv,
)

from conftest import brute_force_margin, random_baseline, random_hull

P0 = HullParams(a=555.0, b=2664.0, c=512.0, d=1026.0, n=2.0, theta=30.0)


class TestNoseRadius:
    def test_endpoints(self):
        assert nose_radius(P0, 0.0) == 0.0
        assert nose_radius(P0, P0.a) == pytest.approx(P0.d / 2, rel=1e-12)

    def test_midpoint_value(self):
        # 513 * 0.75**0.5, evaluated independently at 50-digit precision
        assert nose_radius(P0, 277.5) == pytest.approx(444.27103214141702579, rel=1e-12)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            nose_radius(P0, -1.0)
        with pytest.raises(ValueError):
            nose_radius(P0, P0.a + 1.0)


class TestTailRadius:
    def test_endpoints(self):
        lo = P0.a + P0.b
        assert tail_radius(P0, lo) == pytest.approx(P0.d / 2, rel=1e-12)
        # algebraic cancellation: d/2 - 3d/2 + c tan + d - c tan = 0
        assert abs(tail_radius(P0, lo + P0.c)) <= 1e-9 * P0.d

    def test_quarterpoint_value(self):
        # cubic at z=256 with d=1026, c=512, theta=30deg, 50-digit evaluation
        assert tail_radius(P0, P0.a + P0.b + 256.0) == pytest.approx(
            293.45041722813604893, rel=1e-12
        )

    def test_domain_error(self):
        with pytest.raises(ValueError):
            tail_radius(P0, P0.a + P0.b - 1.0)
        with pytest.raises(ValueError):
            tail_radius(P0, P0.length + 1.0)

    def test_negative_dip_detected(self):
        # steep exit angle with a long thin tail pulls the cubic below zero
        bad = None
        for c in (1500.0, 2500.0, 3000.0):
            for d in (120.0, 200.0):
                cand = HullParams(a=500.0, b=2000.0, c=c, d=d, n=1.0, theta=45.0)
                if min_tail_radius(cand) < 0.0:
                    bad = cand
                    break
            if bad:
                break
        assert bad is not None, "expected at least one invalid combination"
        assert not is_valid_geometry(bad)


class TestHullRadius:
    def test_piecewise_dispatch(self, rng):
        for _ in range(50):
            p = random_hull(rng)
            xn = rng.uniform(0.0, p.a)
            assert hull_radius(p, xn) == nose_radius(p, xn)
            xc = rng.uniform(p.a, p.a + p.b)
            assert hull_radius(p, xc) == p.d / 2
            xt = rng.uniform(p.a + p.b, p.length)
            assert hull_radius(p, xt) == tail_radius(p, xt)

    def test_continuity_at_joints(self, rng):
        for _ in range(100):
            p = random_hull(rng)
            eps = 1e-9 * p.length
            for joint in (p.a, p.a + p.b):
                left = hull_radius(p, joint - eps)
                right = hull_radius(p, joint + eps)
                assert abs(left - right) <= 1e-6 * p.d

    def test_cylinder_midpoint(self):
        assert hull_radius(P0, P0.a + P0.b / 2) == P0.d / 2

    def test_vectorized_matches_scalar(self, rng):
        p = random_hull(rng)
        xs = rng.uniform(0.0, p.length, 64)
        rv = hull_radius_profile(p, xs)
        for x, r in zip(xs, rv):
            assert r == pytest.approx(hull_radius(p, x), abs=1e-12)


class TestBaselineRadius:
    BG = DEFAULT_BASELINE

    def test_ramps(self):
        bg = self.BG
        assert baseline_radius(bg, 0.0) == 0.0
        assert baseline_radius(bg, bg.a) == bg.d / 2
        assert baseline_radius(bg, bg.a / 2) == pytest.approx(bg.d / 4, rel=1e-12)
        assert baseline_radius(bg, bg.a + bg.b + bg.c / 2) == pytest.approx(bg.d / 4, rel=1e-12)
        assert baseline_radius(bg, bg.length) == 0.0

    def test_domain_error(self):
        with pytest.raises(ValueError):
            baseline_radius(self.BG, -0.1)


class TestContainmentMargin:
    def test_sign_matches_brute_force(self, rng):
        agreements = 0
        for _ in range(100):
            bg = random_baseline(rng)
            p = random_hull(rng, bg)
            g_fast = containment_margin(p, bg)
            g_dense = brute_force_margin(p, bg, stations=20_000)
            assert (g_fast <= 0.0) == (g_dense <= 1e-9 * bg.d)
            agreements += 1
        assert agreements == 100

    def test_fat_steep_hull_fits(self):
        # fatter than the envelope everywhere, tail steep enough to clear the cone
        p = HullParams(a=555.0, b=2664.0, c=512.0, d=1026.0 * 1.2, n=1.0, theta=48.0)
        g = containment_margin(p, DEFAULT_BASELINE)
        assert g <= 0.0
        assert brute_force_margin(p, DEFAULT_BASELINE) <= 0.0

    def test_shallow_tail_interferes(self):
        # same fat hull but a shallow exit angle pinches under the tail cone
        p = HullParams(a=555.0, b=2664.0, c=512.0, d=1026.0 * 1.2, n=1.0, theta=5.0)
        g = containment_margin(p, DEFAULT_BASELINE)
        assert g > 0.0
        assert brute_force_margin(p, DEFAULT_BASELINE) > 0.0

    def test_degenerate_envelope_always_fits(self, rng):
        bg = BaselineGeometry(a=100.0, b=100.0, c=100.0, d=1e-6)
        p = HullParams(a=150.0, b=2000.0, c=200.0, d=800.0, n=1.5, theta=25.0)
        assert containment_margin(p, bg) < 0.0

    def test_short_nose_sentinel(self):
        bg = DEFAULT_BASELINE
        p = HullParams(a=bg.a - 1.0, b=bg.b, c=bg.c, d=bg.d, n=1.0, theta=48.0)
        assert containment_margin(p, bg) == 0.5 * bg.d

    def test_short_tail_sentinel(self):
        bg = DEFAULT_BASELINE
        p = HullParams(a=bg.a, b=bg.b, c=bg.c - 1.0, d=bg.d, n=1.0, theta=48.0)
        assert containment_margin(p, bg) == 0.5 * bg.d

    def test_invalid_geometry_sentinel(self):
        bg = DEFAULT_BASELINE
        p = HullParams(a=600.0, b=2700.0, c=2500.0, d=150.0, n=1.0, theta=45.0)
        if min_tail_radius(p) >= 0.0:
            pytest.skip("combination unexpectedly valid")
        assert containment_margin(p, bg) == 0.5 * bg.d

    def test_monotone_in_diameter(self, rng):
        bg = DEFAULT_BASELINE
        for _ in range(40):
            p = random_hull(rng, bg)
            grown = HullParams(p.a, p.b, p.c, p.d * 1.05, p.n, p.theta)
            assert containment_margin(grown, bg) <= containment_margin(p, bg) + 1e-9

    def test_samples_validation(self):
        with pytest.raises(ValueError):
            containment_margin(P0, DEFAULT_BASELINE, samples=32)


class TestProfile:
    def test_invariants(self):
        prof = profile(P0)
        assert prof.x[0] == 0.0
        assert prof.x[-1] == pytest.approx(P0.length)
        assert np.all(np.diff(prof.x) > 0)
        assert prof.r[0] == 0.0 and prof.r[-1] == 0.0
        assert np.all(prof.r >= 0.0)

    def test_rejects_invalid_geometry(self):
        p = HullParams(a=600.0, b=2700.0, c=2500.0, d=150.0, n=1.0, theta=45.0)
        if min_tail_radius(p) >= 0.0:
            pytest.skip("combination unexpectedly valid")
        with pytest.raises(InvalidGeometryError):
            profile(p)

    def test_csv_format(self, tmp_path):
        path = tmp_path / "prof.csv"
        write_profile_csv(profile(P0, stations=65), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x_mm,r_mm"
        for line in lines[1:]:
            x_str, r_str = line.split(",")
            assert len(x_str.split(".")[1]) == 6
            assert len(r_str.split(".")[1]) == 6
        xs = [float(line.split(",")[0]) for line in lines[1:]]
        assert xs == sorted(xs)


class TestValidation:
    def test_positive_parameters(self):
        with pytest.raises(ValueError):
            HullParams(a=-1.0, b=1.0, c=1.0, d=1.0, n=1.0, theta=0.0)
        with pytest.raises(ValueError):
            HullParams(a=1.0, b=1.0, c=1.0, d=1.0, n=0.0, theta=0.0)
        with pytest.raises(ValueError):
            BaselineGeometry(a=1.0, b=0.0, c=1.0, d=1.0)
        with pytest.raises(ValueError):
            HullParams(a=1.0, b=1.0, c=1.0, d=math.nan, n=1.0, theta=0.0)

    def test_length(self):
        assert P0.length == P0.a + P0.b + P0.c
