import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fracperim.boundary import converged_curve_sperimeter, ellipse_curve, polygon_sperimeter
from fracperim.errors import ParameterError, PreconditionError
from fracperim.geometry import Ball, Cuboid, Ellipsoid, Polytope
from fracperim.nonlocal_perimeter import (
    ESTIMATORS,
    estimate_sperimeter,
    sperimeter,
    sperimeter_ball,
    sperimeter_boundary_quadrature,
    sperimeter_direct_mc,
    sperimeter_interval_exact,
    sperimeter_line_mc,
    sperimeter_ray_mc,
    sperimeter_two_ball,
    sperimeter_unit_ball,
    slicewise_lower_bound,
)
from fracperim.sets import EmptySet, TwoBallSet

from oracles import FROZEN_BALL, ball_sperimeter, interval_sperimeter, two_ball_deficit_bounds

S_VALUES = (0.25, 0.5, 0.75)
SQUARE = Cuboid(np.zeros(2), [1.0, 1.0])
ELLIPSE = Ellipsoid(np.zeros(2), [1.5, 1 / 1.5])


def z_score(est, exact):
    return abs(est.value - exact) / est.std_error


class TestDeterministicValues:
    @pytest.mark.parametrize("s", S_VALUES)
    def test_interval_closed_form(self, s):
        assert_allclose(sperimeter_interval_exact(2.0, s), interval_sperimeter(2.0, s))

    @pytest.mark.parametrize("n,s", sorted(FROZEN_BALL))
    def test_unit_ball_matches_closed_form(self, n, s):
        assert_allclose(ball_sperimeter(n, 1.0, s), FROZEN_BALL[(n, s)], rtol=1e-14)
        assert_allclose(sperimeter_unit_ball(n, s), FROZEN_BALL[(n, s)], rtol=1e-12)

    def test_ball_scaling(self):
        assert_allclose(sperimeter_ball(2, 3.0, 0.4), 3.0 ** 1.6 * sperimeter_unit_ball(2, 0.4), rtol=1e-12)

    def test_empty_set(self):
        assert sperimeter(EmptySet(2), 0.5).value == 0.0

    @pytest.mark.parametrize("s", [0.0, 1.0, -0.1, 1.5])
    def test_s_outside_range(self, s):
        with pytest.raises(ParameterError):
            sperimeter(Ball.unit(2), s)

    def test_bad_budget(self):
        with pytest.raises(ParameterError):
            sperimeter_ray_mc(Ball.unit(2), 0.5, 0)
        with pytest.raises(ParameterError):
            sperimeter_ray_mc(Ball.unit(2), 0.5, 2.5)

    def test_unknown_estimator(self):
        assert "quadrature" in ESTIMATORS
        with pytest.raises(ParameterError):
            estimate_sperimeter(Ball.unit(2), 0.5, "magic")


class TestBoundaryQuadrature:
    @pytest.mark.parametrize("s", S_VALUES)
    def test_circle_matches_ball_oracle(self, s):
        val, N = converged_curve_sperimeter(ellipse_curve(1.0, 1.0), s)
        assert_allclose(val, FROZEN_BALL[(2, s)], rtol=1e-10)
        assert N <= 4096

    @pytest.mark.parametrize("s", S_VALUES)
    def test_regular_polygon_approaches_disc(self, s):
        # a regular 100-gon of radius 1 lies within 5e-4 of the unit circle
        P = Polytope.regular_polygon(100)
        assert_allclose(sperimeter(P, s).value, FROZEN_BALL[(2, s)], rtol=3e-3)

    def test_polygon_orientation_irrelevant(self):
        V = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 0.5]])
        assert_allclose(polygon_sperimeter(V, 0.5), sperimeter(Polytope.from_vertices(V[::-1]), 0.5).value)

    @pytest.mark.parametrize("s", S_VALUES)
    @pytest.mark.parametrize(
        "body", [SQUARE, ELLIPSE, Polytope.from_vertices([[0.0, 0.0], [2.0, 0.0], [1.0, 0.5]])], ids=["sq", "ell", "tri"]
    )
    def test_agrees_with_line_estimator(self, body, s):
        q = sperimeter_boundary_quadrature(body, s)
        assert q.std_error == 0.0 and q.method == "quadrature"
        mc = sperimeter_line_mc(body, s, 1 << 18, 3)
        assert z_score(mc, q.value) < 4

    def test_not_available_in_3d(self):
        with pytest.raises(PreconditionError):
            sperimeter_boundary_quadrature(Ball.unit(3), 0.5)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.2, 0.8), st.floats(0.3, 4.0), st.floats(1.0, 3.0))
    def test_scaling_law(self, s, lam, aspect):
        E = Cuboid(np.zeros(2), [aspect, 1.0])
        assert_allclose(sperimeter(E.scaled(lam), s).value, lam ** (2 - s) * sperimeter(E, s).value, rtol=1e-10)

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.2, 0.8), st.floats(0.0, np.pi))
    def test_rotation_invariance(self, s, phi):
        R = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
        T = Polytope.from_vertices([[0.0, 0.0], [2.0, 0.0], [0.3, 0.9]])
        assert_allclose(sperimeter(T.rotated(R), s).value, sperimeter(T, s).value, rtol=1e-10)


class TestMonteCarlo:
    @pytest.mark.parametrize("s", S_VALUES)
    def test_ray_and_direct_on_interval(self, s):
        exact = interval_sperimeter(1.0, s)
        I = Cuboid.interval(0.0, 1.0)
        assert z_score(sperimeter_ray_mc(I, s, 200_000, 1), exact) < 4
        assert z_score(sperimeter_direct_mc(I, s, 200_000, 1), exact) < 4

    def test_ray_on_ball_3d(self):
        est = sperimeter_ray_mc(Ball.unit(3), 0.5, 200_000, 2)
        assert z_score(est, FROZEN_BALL[(3, 0.5)]) < 4

    def test_line_on_cube(self):
        cube = Cuboid(np.zeros(3), [1.0, 1.0, 1.0])
        a = sperimeter_line_mc(cube, 0.5, 1 << 16, 0)
        b = sperimeter_direct_mc(cube, 0.5, 400_000, 0)
        assert abs(a.value - b.value) < 4 * np.hypot(a.std_error, b.std_error)

    def test_seed_reproducible_and_worker_independent(self):
        a = sperimeter_ray_mc(SQUARE, 0.5, 100_000, 7, workers=1)
        b = sperimeter_ray_mc(SQUARE, 0.5, 100_000, 7, workers=4)
        c = sperimeter_ray_mc(SQUARE, 0.5, 100_000, 8)
        assert a == b
        assert a.value != c.value

    def test_error_shrinks_with_budget(self):
        a = sperimeter_ray_mc(ELLIPSE, 0.5, 50_000, 0)
        b = sperimeter_ray_mc(ELLIPSE, 0.5, 800_000, 0)
        assert_allclose(a.std_error / b.std_error, 4.0, rtol=0.25)


class TestTwoBall:
    @pytest.mark.parametrize("eps", [0.2, 0.1, 0.05])
    def test_decomposition_within_interaction_bounds(self, eps):
        L = TwoBallSet.min_separation(eps)
        tb = TwoBallSet(eps, L)
        est = sperimeter_two_ball(tb, 0.5, 100_000, 0)
        PB = FROZEN_BALL[(2, 0.5)]
        lo, hi = two_ball_deficit_bounds(eps, L, 0.5)
        d = (est.value - PB) / PB
        assert lo - 3 * est.std_error / PB <= d <= hi + 3 * est.std_error / PB

    def test_overlap_rejected(self):
        with pytest.raises(PreconditionError):
            TwoBallSet(0.1, 0.5)


class TestSlicewise:
    def test_ball_bound_below_perimeter(self):
        lb = slicewise_lower_bound(Ball.unit(2), 0.5, 33)
        assert lb.std_error == 0.0
        assert 0 < lb.value < FROZEN_BALL[(2, 0.5)]

    def test_needs_dimension_two(self):
        with pytest.raises(ParameterError):
            slicewise_lower_bound(Cuboid.interval(0.0, 1.0), 0.5)

    def test_needs_convex(self):
        with pytest.raises(PreconditionError):
            slicewise_lower_bound(TwoBallSet(0.1, 5.0), 0.5)
