"""
Unit tests for the curved-space primitives.
"""

import math
import warnings

import numpy as np
import pytest

from curvednet import manifold
from curvednet.manifold import (
    BallPoint, SpherePoint, ProductPoint, EuclideanVec,
    sphere_project, ball_clip, mobius_add, geodesic_dist, mobius_matvec, conformal_factor, origin,
)
from curvednet.errors import (
    BadCurvature, ZeroVector, CurvatureMismatch, Singularity, ManifoldViolation, DegenerateMap,
)
from curvednet.oracles import mobius_1d_reference


def _random_ball(rng, k, dim=3):
    """Point with norm below 0.9 / sqrt(|k|)."""
    x = rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    return BallPoint(x * rng.uniform(0.0, 0.9 / math.sqrt(abs(k))), k)


# ── sphere_project ───────────────────────────────────────


class TestSphereProject:
    """Tests for the projection onto the sphere of curvature k."""

    def test_unit_sphere(self):
        p = sphere_project([3.0, 4.0], 1.0)
        np.testing.assert_allclose(p.coords, [0.6, 0.8], atol=1e-12)

    def test_curvature_four(self):
        p = sphere_project([3.0, 4.0], 4.0)
        np.testing.assert_allclose(p.coords, [0.3, 0.4], atol=1e-12)
        assert np.linalg.norm(p.coords) == pytest.approx(0.5, abs=1e-9)

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            sphere_project([0.0, 0.0], 1.0)

    def test_bad_curvature(self):
        with pytest.raises(BadCurvature):
            sphere_project([1.0, 0.0], 0.0)
        with pytest.raises(BadCurvature):
            sphere_project([1.0, 0.0], -1.0)

    def test_idempotent(self, rng):
        for k in (1.0, 4.0, 0.25):
            p = sphere_project(rng.standard_normal(5), k)
            again = sphere_project(p.coords, k)
            np.testing.assert_allclose(again.coords, p.coords, atol=1e-12)


# ── ball_clip ────────────────────────────────────────────


class TestBallClip:
    """Tests for clipping into the Poincaré ball."""

    def test_inside_unchanged(self):
        np.testing.assert_array_equal(ball_clip([0.5, 0.0], -1.0).coords, [0.5, 0.0])

    def test_outside_rescaled(self):
        p = ball_clip([3.0, 0.0], -1.0, 1e-5)
        np.testing.assert_allclose(p.coords, [0.99999, 0.0], atol=1e-12)

    def test_literal_radius_small_curvature(self):
        np.testing.assert_array_equal(ball_clip([3.0, 0.0], -0.01).coords, [3.0, 0.0])

    def test_bad_curvature(self):
        with pytest.raises(BadCurvature):
            ball_clip([0.1, 0.0], 1.0)

    def test_point_outside_ball_rejected(self):
        with pytest.raises(ManifoldViolation):
            BallPoint([2.0, 0.0], -1.0)


# ── mobius_add ───────────────────────────────────────────


class TestMobiusAdd:
    """Tests for Möbius addition."""

    def test_left_identity_example(self):
        y = BallPoint([0.4, 0.1], -1.0)
        np.testing.assert_allclose(mobius_add(origin(2), y).coords, [0.4, 0.1], atol=1e-12)

    def test_collinear_example(self):
        out = mobius_add(BallPoint([0.3, 0.0], -1.0), BallPoint([0.4, 0.0], -1.0))
        np.testing.assert_allclose(out.coords, [0.625, 0.0], atol=1e-12)

    def test_left_inverse_example(self):
        out = mobius_add(BallPoint([-0.3, 0.2], -1.0), BallPoint([0.3, -0.2], -1.0))
        np.testing.assert_allclose(out.coords, [0.0, 0.0], atol=1e-12)

    def test_curvature_mismatch(self):
        with pytest.raises(CurvatureMismatch):
            mobius_add(BallPoint([0.1, 0.0], -1.0), BallPoint([0.1, 0.0], -0.5))

    @pytest.mark.parametrize("k", [-1.0, -0.01])
    def test_identity_and_inverse_properties(self, k):
        rng = np.random.default_rng(7)
        zero = origin(3, k)
        for _ in range(1000):
            x = _random_ball(rng, k)
            np.testing.assert_allclose(mobius_add(zero, x).coords, x.coords, atol=1e-12)
            neg = BallPoint(-x.coords, k)
            np.testing.assert_allclose(mobius_add(neg, x).coords, 0.0, atol=1e-12)

    @pytest.mark.parametrize("k", [-1.0, -0.01])
    def test_collinear_matches_1d_reference(self, k):
        rng = np.random.default_rng(8)
        bound = 0.9 / math.sqrt(abs(k))
        for _ in range(1000):
            a, b = rng.uniform(-bound, bound, 2)
            out = mobius_add(BallPoint([a, 0.0], k), BallPoint([b, 0.0], k))
            assert out.coords[0] == pytest.approx(mobius_1d_reference(a, b, k), abs=1e-12)
            assert out.coords[1] == 0.0


# ── geodesic_dist ────────────────────────────────────────


class TestGeodesicDist:
    """Tests for the geodesic distance."""

    def test_same_point(self):
        x = BallPoint([0.2, 0.7], -1.0)
        assert geodesic_dist(x, x) == pytest.approx(0.0, abs=1e-9)

    def test_from_origin(self):
        assert geodesic_dist(origin(2), BallPoint([0.5, 0.0], -1.0)) == pytest.approx(math.log(3), abs=1e-9)

    def test_opposite_points(self):
        d = geodesic_dist(BallPoint([0.5, 0.0], -1.0), BallPoint([-0.5, 0.0], -1.0))
        assert d == pytest.approx(2 * math.atanh(0.8), abs=1e-9)

    @pytest.mark.parametrize("k", [-1.0, -0.01])
    def test_metric_properties(self, k):
        rng = np.random.default_rng(9)
        for _ in range(1000):
            x, y, z = (_random_ball(rng, k) for _ in range(3))
            dxy = geodesic_dist(x, y)
            assert dxy == pytest.approx(geodesic_dist(y, x), abs=1e-9)
            assert geodesic_dist(x, x) <= 1e-9
            assert geodesic_dist(x, z) <= dxy + geodesic_dist(y, z) + 1e-9

    def test_curvature_mismatch(self):
        with pytest.raises(CurvatureMismatch):
            geodesic_dist(BallPoint([0.1], -1.0), BallPoint([0.1], -2.0))


# ── mobius_matvec ────────────────────────────────────────


class TestMobiusMatvec:
    """Tests for the hyperbolic linear map."""

    def test_scalar_example(self):
        out = mobius_matvec([[2.0]], BallPoint([0.3], -1.0))
        # tanh(2 atanh 0.3) = 0.6 / 1.09
        assert out.coords[0] == pytest.approx(0.6 / 1.09, abs=1e-9)

    def test_identity_fixes_points(self):
        out = mobius_matvec(np.eye(2), BallPoint([0.2, -0.1], -1.0))
        np.testing.assert_allclose(out.coords, [0.2, -0.1], atol=1e-9)

    def test_origin_maps_to_origin(self):
        out = mobius_matvec([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]], origin(2))
        np.testing.assert_array_equal(out.coords, [0.0, 0.0, 0.0])

    def test_degenerate_map_warns(self):
        with pytest.warns(DegenerateMap):
            out = mobius_matvec([[0.0, 1.0]], BallPoint([0.4, 0.0], -1.0))
        np.testing.assert_array_equal(out.coords, [0.0])

    def test_origin_does_not_warn(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            mobius_matvec([[0.0, 1.0]], origin(2))

    def test_identity_on_random_points(self, rng):
        for _ in range(1000):
            x = _random_ball(rng, -1.0)
            np.testing.assert_allclose(mobius_matvec(np.eye(3), x).coords, x.coords, atol=1e-9)


# ── conformal_factor ─────────────────────────────────────


class TestConformalFactor:
    """Tests for the conformal factor 1 / (1 + k ||x||^2)."""

    def test_origin(self):
        assert conformal_factor(origin(2)) == 1.0

    def test_half(self):
        assert conformal_factor(BallPoint([0.5, 0.0], -1.0)) == pytest.approx(4.0 / 3.0, abs=1e-12)

    def test_boundary_singularity(self):
        with pytest.raises(Singularity):
            conformal_factor(BallPoint([0.6, 0.8], -1.0))


class TestChartMap:
    """Tests for the clip that keeps 1 + k ||x||^2 positive."""

    @pytest.mark.parametrize("k,radius", [(-1.0, 1.0), (-4.0, 0.25), (-0.01, 10.0)])
    def test_radius(self, k, radius):
        assert manifold.chart_radius(k) == pytest.approx(radius, abs=1e-12)

    def test_inside_returned_as_is(self):
        x = np.array([[3.0, 4.0]])
        assert manifold.chart_map(x, -0.01) is x

    def test_ball_point_beyond_chart(self):
        x = np.array([[30.0, 40.0], [1.0, 0.0]])
        clipped = manifold.chart_map(x, -0.01)
        assert np.linalg.norm(clipped[0]) == pytest.approx((1 - 1e-5) * 10.0, abs=1e-9)
        np.testing.assert_array_equal(clipped[1], [1.0, 0.0])
        assert np.all(manifold.conformal(clipped, -0.01) > 0)

    def test_same_as_ball_map_at_unit_curvature(self, rng):
        x = rng.uniform(-2.0, 2.0, (20, 3))
        np.testing.assert_array_equal(manifold.chart_map(x, -1.0), manifold.ball_map(x, -1.0))


# ── Typed points ─────────────────────────────────────────


class TestPoints:
    """Tests for point validation."""

    def test_sphere_point_invariant(self):
        SpherePoint([0.6, 0.8], 1.0)
        with pytest.raises(ManifoldViolation):
            SpherePoint([1.0, 1.0], 1.0)

    def test_product_point_needs_components(self):
        with pytest.raises(ManifoldViolation):
            ProductPoint(())

    def test_product_point(self):
        p = ProductPoint((EuclideanVec([1.0, 2.0]), SpherePoint([1.0, 0.0], 1.0), origin(2)))
        assert len(p.components) == 3

    def test_non_finite_rejected(self):
        with pytest.raises(ManifoldViolation):
            EuclideanVec([math.nan, 0.0])

    def test_batch_kernel_matches_typed_api(self, rng):
        X = rng.uniform(-0.4, 0.4, (6, 3))
        Y = rng.uniform(-0.4, 0.4, (6, 3))
        d = manifold.geodesic(X, Y, -1.0)[:, 0]
        for i in range(6):
            assert d[i] == pytest.approx(geodesic_dist(BallPoint(X[i], -1.0), BallPoint(Y[i], -1.0)), abs=1e-14)
