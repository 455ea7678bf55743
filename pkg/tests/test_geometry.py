import numpy as np
import pytest

from lcnystrom import shapes
from lcnystrom.errors import GeometryError
from lcnystrom.geometry import (
    NurbsPatch,
    curve_frame,
    eval_curve,
    eval_curve_jacobian,
    eval_surface,
    eval_surface_jacobian,
    gram_det,
    perspective_map,
    surface_frame,
    unit_normal,
)
from lcnystrom.splines import KnotVector


def random_curve(rng, degree=3, ncp=7, dim=2):
    interior = np.sort(rng.uniform(0.1, 0.9, size=ncp - degree - 1))
    knots = np.r_[np.zeros(degree + 1), interior, np.ones(degree + 1)]
    kv = KnotVector(knots, degree)
    pts = rng.uniform(-1, 1, size=(ncp, dim))
    w = rng.uniform(0.5, 2.0, size=ncp)
    return NurbsPatch.from_points(pts, w, (kv,))


def random_surface(rng, degrees=(2, 3), shape=(5, 6)):
    kvs = []
    for p, n in zip(degrees, shape):
        interior = np.sort(rng.uniform(0.1, 0.9, size=n - p - 1))
        kvs.append(KnotVector(np.r_[np.zeros(p + 1), interior, np.ones(p + 1)], p))
    base = np.stack(
        np.meshgrid(np.linspace(0, 1, shape[0]), np.linspace(0, 1, shape[1]), indexing="ij"),
        axis=-1,
    )
    pts = np.concatenate(
        [base + 0.08 * rng.uniform(-1, 1, size=base.shape),
         0.3 * rng.uniform(-1, 1, size=base.shape[:2] + (1,))],
        axis=-1,
    )
    w = rng.uniform(0.5, 2.0, size=shape)
    return NurbsPatch.from_points(pts, w, tuple(kvs))


class TestPerspectiveMap:
    def test_homogeneous_arc_midpoint(self):
        # quadratic homogeneous curve with control points (2,0,2), (2,3,2), (0,4,4)
        cp = np.array([[2.0, 0.0, 2.0], [2.0, 3.0, 2.0], [0.0, 4.0, 4.0]])
        b = np.array([0.25, 0.5, 0.25])
        xh = b @ cp
        np.testing.assert_allclose(xh, [1.5, 2.5, 2.5])
        np.testing.assert_allclose(perspective_map(xh), [0.6, 1.0])

    def test_unit_weight(self):
        np.testing.assert_allclose(perspective_map([3.0, -2.0, 1.0]), [3.0, -2.0])

    def test_scale_invariance(self):
        a, b = 1.7, -0.3
        np.testing.assert_allclose(perspective_map([2 * a, 2 * b, 2.0]), [a, b])

    def test_zero_weight(self):
        with pytest.raises(GeometryError):
            perspective_map([1.0, 1.0, 0.0])


class TestCurve:
    def test_quarter_circle_midpoint(self):
        patch = shapes.quarter_circle_arc()
        x = eval_curve(patch, 0.5)
        np.testing.assert_allclose(x, [np.sqrt(2) / 2, np.sqrt(2) / 2], atol=1e-14)

    def test_circle_radius_property(self):
        patch = shapes.quarter_circle_arc()
        us = np.linspace(0, 1, 1000)
        x, _, _, _ = curve_frame(patch, us)
        r = np.linalg.norm(x, axis=1)
        assert np.max(np.abs(r - 1.0)) <= 1e-12

    def test_full_circle_radius(self):
        patch = shapes.unit_circle()
        us = np.linspace(0, 4, 1000)
        x, _, _, _ = curve_frame(patch, us)
        assert np.max(np.abs(np.linalg.norm(x, axis=1) - 1.0)) <= 1e-12

    def test_affine_reproduction(self):
        patch = shapes.straight_segment((0, 0), (2, 0))
        for u in [0.0, 0.3, 0.77, 1.0]:
            x = eval_curve(patch, u)
            np.testing.assert_allclose(x, [2 * u, 0.0], atol=1e-14)

    def test_endpoint_interpolation(self):
        rng = np.random.default_rng(0)
        patch = random_curve(rng)
        pos = patch.control_positions()
        np.testing.assert_allclose(eval_curve(patch, 0.0), pos[0], atol=1e-13)
        np.testing.assert_allclose(eval_curve(patch, 1.0), pos[-1], atol=1e-13)

    def test_constant_tangent_segment(self):
        patch = shapes.straight_segment((0, 0), (2, 0))
        for u in [0.0, 0.5, 1.0]:
            np.testing.assert_allclose(eval_curve_jacobian(patch, u), [2.0, 0.0], atol=1e-14)

    def test_circle_tangent_orthogonal_to_radius(self):
        patch = shapes.quarter_circle_arc()
        for u in np.linspace(0, 1, 17):
            x = eval_curve(patch, u)
            j = eval_curve_jacobian(patch, u)
            assert abs(np.dot(x, j)) <= 1e-12 * np.linalg.norm(j)

    def test_jacobian_finite_difference(self):
        rng = np.random.default_rng(1)
        h = 1e-6
        for _ in range(5):
            patch = random_curve(rng)
            for u in rng.uniform(0.05, 0.95, size=8):
                fd = (eval_curve(patch, u + h) - eval_curve(patch, u - h)) / (2 * h)
                np.testing.assert_allclose(eval_curve_jacobian(patch, u), fd, atol=1e-6)

    def test_normal_orientation_circle(self):
        patch = shapes.unit_circle()
        for u in np.linspace(0.1, 3.9, 11):
            x = eval_curve(patch, u)
            n = unit_normal(patch, u)
            # outward normal of a ccw circle points along x
            np.testing.assert_allclose(n, x / np.linalg.norm(x), atol=1e-12)


class TestSurface:
    def test_flat_square_jacobian(self):
        patch = shapes.flat_square()
        jac = eval_surface_jacobian(patch, (0.3, 0.8))
        np.testing.assert_allclose(jac[:, 0], [1, 0, 0], atol=1e-14)
        np.testing.assert_allclose(jac[:, 1], [0, 1, 0], atol=1e-14)
        assert gram_det(patch, (0.3, 0.8)) == pytest.approx(1.0, abs=1e-14)

    def test_torus_membership(self):
        patch = shapes.torus(0.9, 0.2)
        rng = np.random.default_rng(4)
        uv = rng.uniform(0, 4, size=(200, 2))
        x, _, _, _ = surface_frame(patch, uv[:, 0], uv[:, 1])
        rho = np.hypot(x[:, 0], x[:, 1])
        implicit = (rho - 0.9) ** 2 + x[:, 2] ** 2
        assert np.max(np.abs(implicit - 0.2**2)) <= 1e-10

    def test_torus_gram_oracle(self):
        # area element = minor speed * distance-from-axis * unit-major speed
        r1, r2 = 0.9, 0.2
        patch = shapes.torus(r1, r2)
        gen = shapes.circle(radius=r2, center=(r1, 0.0))
        unit = shapes.unit_circle()
        rng = np.random.default_rng(5)
        for u, v in rng.uniform(0.05, 3.95, size=(40, 2)):
            g = gram_det(patch, (u, v))
            xg = eval_curve(gen, u)
            smin = np.linalg.norm(eval_curve_jacobian(gen, u))
            smaj = np.linalg.norm(eval_curve_jacobian(unit, v))
            assert g == pytest.approx(smin * xg[0] * smaj, rel=1e-10)

    def test_torus_outward_normal(self):
        patch = shapes.torus(0.9, 0.2)
        rng = np.random.default_rng(6)
        for u, v in rng.uniform(0.05, 3.95, size=(25, 2)):
            x = eval_surface(patch, (u, v))
            n = unit_normal(patch, (u, v))
            rho = np.hypot(x[0], x[1])
            center = np.array([0.9 * x[0] / rho, 0.9 * x[1] / rho, 0.0])
            np.testing.assert_allclose(n, (x - center) / 0.2, atol=1e-10)

    def test_jacobian_finite_difference(self):
        rng = np.random.default_rng(7)
        patch = random_surface(rng)
        h = 1e-6
        for u, v in rng.uniform(0.05, 0.95, size=(10, 2)):
            jac = eval_surface_jacobian(patch, (u, v))
            fd1 = (eval_surface(patch, (u + h, v)) - eval_surface(patch, (u - h, v))) / (2 * h)
            fd2 = (eval_surface(patch, (u, v + h)) - eval_surface(patch, (u, v - h))) / (2 * h)
            np.testing.assert_allclose(jac[:, 0], fd1, atol=1e-6)
            np.testing.assert_allclose(jac[:, 1], fd2, atol=1e-6)

    def test_corner_interpolation(self):
        rng = np.random.default_rng(8)
        patch = random_surface(rng)
        pos = patch.control_positions()
        np.testing.assert_allclose(eval_surface(patch, (0, 0)), pos[0, 0], atol=1e-12)
        np.testing.assert_allclose(eval_surface(patch, (1, 1)), pos[-1, -1], atol=1e-12)


class TestShippedShapes:
    def test_gram_positive_everywhere(self):
        rng = np.random.default_rng(9)
        for patch in [shapes.unit_circle(), shapes.flower(), shapes.teardrop()]:
            lo, hi = patch.knot_vectors[0].domain
            us = rng.uniform(lo, hi, size=300)
            _, _, _, speed = curve_frame(patch, us)
            assert np.all(speed > 0)
        patch = shapes.torus()
        uv = rng.uniform(0, 4, size=(200, 2))
        _, _, _, gram = surface_frame(patch, uv[:, 0], uv[:, 1])
        assert np.all(gram > 0)

    def test_flower_is_closed_and_smooth(self):
        patch = shapes.flower()
        np.testing.assert_allclose(eval_curve(patch, 0.0), eval_curve(patch, 1.0), atol=1e-12)
        j0 = eval_curve_jacobian(patch, 0.0)
        j1 = eval_curve_jacobian(patch, 1.0)
        np.testing.assert_allclose(j0, j1, atol=1e-8)

    def test_flower_radius_profile(self):
        patch = shapes.flower(scale=1.5, lobes=5, amplitude=0.2)
        us = np.linspace(0, 1, 500, endpoint=False)
        x, _, _, _ = curve_frame(patch, us)
        r = np.linalg.norm(x, axis=1)
        th = np.arctan2(x[:, 1], x[:, 0])
        ideal = 1.5 * (1 + 0.2 * np.cos(5 * th))
        assert np.max(np.abs(r - ideal)) < 0.05

    def test_teardrop_corner_angle(self):
        patch = shapes.teardrop()
        np.testing.assert_allclose(eval_curve(patch, 0.0), eval_curve(patch, 1.0), atol=1e-14)
        t0 = eval_curve_jacobian(patch, 0.0)
        t1 = eval_curve_jacobian(patch, 1.0)
        ray0 = t0 / np.linalg.norm(t0)
        ray1 = -t1 / np.linalg.norm(t1)
        angle = np.degrees(np.arccos(np.clip(np.dot(ray0, ray1), -1, 1)))
        assert angle == pytest.approx(90.0, abs=1e-8)


class TestValidation:
    def test_net_size_mismatch(self):
        kv = KnotVector([0, 0, 0, 1, 1, 1], 2)
        with pytest.raises(GeometryError):
            NurbsPatch.from_points(np.zeros((4, 2)), np.ones(4), (kv,))

    def test_nonpositive_weight(self):
        kv = KnotVector([0, 0, 0, 1, 1, 1], 2)
        with pytest.raises(GeometryError):
            NurbsPatch.from_points(np.zeros((3, 2)), np.array([1.0, -1.0, 1.0]), (kv,))
