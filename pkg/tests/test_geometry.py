import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fracperim.errors import ConfigError, DegenerateInputError, ParameterError, PreconditionError
from fracperim.geometry import (
    Ball,
    Cuboid,
    Ellipsoid,
    Polytope,
    body_from_dict,
    diameter,
    hausdorff_to_unit_ball,
    normalize,
    ray_exit_distance,
    slice_measure,
)
from fracperim.sets import EmptySet

TRIANGLE = [[0.0, 0.0], [2.0, 0.0], [1.0, 0.5]]


class TestMeasures:
    def test_ball_volume_and_barycenter(self):
        b = Ball(np.array([1.0, -2.0, 0.5]), 2.0)
        assert_allclose(b.volume(), 4 / 3 * np.pi * 8)
        assert_allclose(b.barycenter(), [1.0, -2.0, 0.5])

    def test_ellipse_and_box(self):
        assert_allclose(Ellipsoid(np.zeros(2), [2.0, 0.5]).volume(), np.pi)
        assert_allclose(Cuboid(np.zeros(3), [1.0, 2.0, 3.0]).volume(), 48.0)

    def test_triangle_barycenter(self):
        T = Polytope.from_vertices(TRIANGLE)
        assert_allclose(T.volume(), 0.5)
        assert_allclose(T.barycenter(), [1.0, 0.5 / 3])

    def test_polytope_from_halfspaces_matches_vertices(self):
        # unit square as A x <= b rows [a1, a2, b]
        H = [[1, 0, 1], [-1, 0, 1], [0, 1, 1], [0, -1, 1]]
        P = Polytope.from_halfspaces(H)
        assert_allclose(P.volume(), 4.0)
        assert_allclose(P.barycenter(), [0.0, 0.0], atol=1e-12)

    def test_degenerate_polytope_rejected(self):
        with pytest.raises((DegenerateInputError, ParameterError)):
            Polytope.from_vertices([[0, 0], [1, 0], [2, 0]]).volume()


class TestRays:
    def test_ball_exit(self):
        assert_allclose(ray_exit_distance(Ball.unit(2), [0.5, 0.0], [1.0, 0.0]), 0.5)
        assert_allclose(ray_exit_distance(Ball.unit(2), [0.5, 0.0], [-1.0, 0.0]), 1.5)

    def test_square_exit_diagonal(self):
        sq = Cuboid(np.zeros(2), [1.0, 1.0])
        d = np.array([1.0, 1.0]) / np.sqrt(2)
        assert_allclose(ray_exit_distance(sq, [0.0, 0.0], d), np.sqrt(2))

    def test_interior_margin_at_center(self):
        for body in (Ball.unit(2), Cuboid(np.zeros(3), [1, 1, 1]), Cuboid.interval(-1.0, 1.0)):
            m = body.interior_margin(body.barycenter()[None, :])
            assert np.isfinite(m).all() and m[0] > 0

    @settings(max_examples=40, deadline=None)
    @given(
        st.floats(0.3, 3.0), st.floats(0.3, 3.0), st.floats(0, 2 * np.pi), st.floats(0.0, 0.95), st.floats(0, 2 * np.pi)
    )
    def test_exit_point_lies_on_ellipse(self, a, b, phi, frac, psi):
        E = Ellipsoid(np.zeros(2), [a, b])
        x = frac * np.array([a * np.cos(psi), b * np.sin(psi)])
        d = np.array([np.cos(phi), np.sin(phi)])
        t = ray_exit_distance(E, x, d)
        y = x + t * d
        assert t >= 0
        assert_allclose((y[0] / a) ** 2 + (y[1] / b) ** 2, 1.0, rtol=1e-9)


class TestDiameterAndSlices:
    def test_diameters(self):
        assert_allclose(diameter(Cuboid(np.zeros(2), [1.0, 1.0])).value, 2 * np.sqrt(2))
        assert_allclose(diameter(Ellipsoid(np.zeros(3), [3.0, 1.0, 2.0])).value, 6.0)
        assert_allclose(diameter(Polytope.from_vertices(TRIANGLE)).value, 2.0)

    def test_triangle_slices_are_linear(self):
        T = Polytope.from_vertices(TRIANGLE)
        dm = diameter(T)
        # the apex sits over the midpoint of the base
        assert_allclose(slice_measure(T, dm.x0, dm.x1, 0.5), 0.5, atol=1e-12)
        assert_allclose(slice_measure(T, dm.x0, dm.x1, 0.25), 0.25, atol=1e-12)

    def test_end_slices_are_empty(self):
        b = Ball.unit(3)
        dm = diameter(b)
        assert slice_measure(b, dm.x0, dm.x1, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_ball_central_slice(self):
        b = Ball.unit(3)
        dm = diameter(b)
        assert_allclose(slice_measure(b, dm.x0, dm.x1, 0.5), np.pi)


class TestNormalization:
    def test_normalize_volume_and_center(self):
        nb = normalize(Ellipsoid(np.array([3.0, 1.0]), [2.0, 0.7])).body
        assert_allclose(nb.volume(), np.pi)
        assert_allclose(nb.barycenter(), [0.0, 0.0], atol=1e-12)

    def test_hausdorff_of_ellipse(self):
        # semiaxes 1.2 and 1/1.2 already have area pi
        assert_allclose(hausdorff_to_unit_ball(Ellipsoid(np.zeros(2), [1.2, 1 / 1.2])), 0.2, rtol=1e-9)

    def test_hausdorff_needs_interior_origin(self):
        with pytest.raises(PreconditionError):
            hausdorff_to_unit_ball(Ball(np.array([5.0, 0.0]), 1.0))


class TestShapeFormat:
    @pytest.mark.parametrize(
        "body",
        [
            Ball(np.array([0.5, 0.0]), 2.0),
            Ellipsoid(np.zeros(3), [1.0, 2.0, 3.0]),
            Cuboid(np.zeros(2), [1.0, 0.5]),
            Polytope.from_vertices(TRIANGLE),
        ],
    )
    def test_round_trip(self, body):
        again = body_from_dict(body.to_dict())
        assert_allclose(again.volume(), body.volume())
        assert_allclose(again.barycenter(), body.barycenter(), atol=1e-12)

    def test_rejects_unknown(self):
        with pytest.raises(ConfigError):
            body_from_dict({"kind": "torus", "dim": 3})
        with pytest.raises(ConfigError):
            body_from_dict({"kind": "ball", "dim": 2, "radius": 1.0, "colour": "red"})
        with pytest.raises(ConfigError):
            body_from_dict({"kind": "ball", "dim": 2})

    def test_empty_set_measure(self):
        assert EmptySet(2).measure() == 0.0
