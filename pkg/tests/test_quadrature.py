import numpy as np
import pytest
from scipy.integrate import quad

from lcnystrom import shapes
from lcnystrom.errors import AccuracyError
from lcnystrom.geometry import NurbsPatch, curve_frame
from lcnystrom.partition import (
    ElementPartition,
    RefinementPoint,
    init_partition,
    insert_knots,
)
from lcnystrom.quadrature import (
    adaptive_integrate,
    distribute_points,
    duffy_integrate,
    gauss_legendre,
    log_singular_integrate_1d,
)
from lcnystrom.splines import KnotVector


def refine_uniform(part, times=1):
    for _ in range(times):
        for d in range(part.pdim):
            part = insert_knots(part, d, part.spans(d).mean(axis=1))
    return part


class TestGaussLegendre:
    def test_one_point(self):
        rule = gauss_legendre(1)
        np.testing.assert_allclose(rule.nodes, [0.0])
        np.testing.assert_allclose(rule.weights, [2.0])

    def test_two_point(self):
        rule = gauss_legendre(2)
        np.testing.assert_allclose(rule.nodes, [-1 / np.sqrt(3), 1 / np.sqrt(3)])
        np.testing.assert_allclose(rule.weights, [1.0, 1.0])

    def test_quartic_exact(self):
        rule = gauss_legendre(3)
        val = np.sum(rule.weights * rule.nodes**4)
        assert val == pytest.approx(2 / 5, abs=1e-14)

    def test_weight_sum(self):
        for n in [1, 2, 5, 16, 64]:
            assert gauss_legendre(n).weights.sum() == pytest.approx(2.0, abs=1e-13)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            gauss_legendre(0)
        with pytest.raises(ValueError):
            gauss_legendre(65)


class TestDistributePoints:
    def test_fig4_point_locations(self):
        kv = KnotVector([0, 0, 0, 0, 2, 4, 4, 4, 4], 3)
        pts = np.array([[0, 0], [1, 1], [2, 0], [3, 1], [4, 0]], dtype=float)
        patch = NurbsPatch.from_points(pts, np.ones(5), (kv,))
        part = insert_knots(init_partition(patch), 0, [1.0, 3.0])
        ps = distribute_points(part, gauss_legendre(2))
        assert ps.num_points == 8
        g = 0.5 / np.sqrt(3)
        expected = np.concatenate([[m + 0.5 - g, m + 0.5 + g] for m in range(4)])
        np.testing.assert_allclose(ps.param[:, 0], expected, atol=1e-14)

    def test_straight_segment_weights(self):
        patch = shapes.straight_segment((0, 0), (3, 0))
        ps = distribute_points(init_partition(patch), gauss_legendre(2))
        np.testing.assert_allclose(ps.weight, [1.5, 1.5])

    def test_local_refinement_count(self):
        # one global insertion in each direction plus a refinement point:
        # 3 plain global elements + 4 local leaves = 7 leaves
        kv = KnotVector([0, 0, 0, 2, 2, 2], 2)
        g = np.linspace(0, 1, 3)
        base = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1)
        z = np.zeros(base.shape[:2] + (1,))
        patch = NurbsPatch.from_points(
            np.concatenate([base, z], axis=-1), np.ones((3, 3)), (kv, kv)
        )
        part = init_partition(patch)
        part = insert_knots(part, 0, [1.0])
        part = insert_knots(part, 1, [1.0])
        part = ElementPartition(
            patch=part.patch,
            artificial_knots=part.artificial_knots,
            refinement_points=(RefinementPoint([0.5, 0.5], 1),),
        )
        for n in (2, 3):
            ps = distribute_points(part, gauss_legendre(n))
            assert len(ps.leaves) == 7
            assert ps.num_points == 7 * n * n

    def test_open_type_placement(self):
        patch = shapes.unit_circle()
        part = refine_uniform(init_partition(patch), 1)
        ps = distribute_points(part, gauss_legendre(4))
        for leaf in ps.leaves:
            u = ps.param[leaf.point_slice]
            assert np.all(u[:, 0] > leaf.box[0, 0])
            assert np.all(u[:, 0] < leaf.box[0, 1])

    def test_circle_circumference(self):
        patch = shapes.unit_circle()
        ps = distribute_points(init_partition(patch), gauss_legendre(16))
        assert ps.weight.sum() == pytest.approx(2 * np.pi, abs=1e-10)
        assert np.all(ps.weight > 0)

    def test_flower_arclength_against_scipy(self):
        patch = shapes.flower()
        ps = distribute_points(init_partition(patch), gauss_legendre(16))

        def speed(u):
            _, _, _, s = curve_frame(patch, np.array([u]))
            return s[0]

        ref = 0.0
        knots = np.unique(patch.knot_vectors[0].knots)
        for a, b in zip(knots[:-1], knots[1:]):
            val, _ = quad(speed, a, b, epsabs=1e-13, epsrel=1e-13)
            ref += val
        assert ps.weight.sum() == pytest.approx(ref, abs=1e-10)

    def test_torus_surface_area(self):
        patch = shapes.torus(0.9, 0.2)
        ps = distribute_points(init_partition(patch), gauss_legendre(8))
        area = 4 * np.pi**2 * 0.9 * 0.2
        assert ps.weight.sum() == pytest.approx(area, abs=1e-6)

    def test_determinism(self):
        patch = shapes.flower()
        part = refine_uniform(init_partition(patch), 1)
        a = distribute_points(part, gauss_legendre(3))
        b = distribute_points(part, gauss_legendre(3))
        assert np.array_equal(a.param, b.param)
        assert np.array_equal(a.weight, b.weight)
        assert np.array_equal(a.phys, b.phys)

    def test_physical_coords_match_geometry(self):
        patch = shapes.unit_circle()
        ps = distribute_points(init_partition(patch), gauss_legendre(3))
        x, _, _, _ = curve_frame(patch, ps.param[:, 0])
        np.testing.assert_allclose(ps.phys, x, atol=1e-14)


class TestAdaptiveIntegrate:
    def test_polynomial_no_subdivision(self):
        val, err = adaptive_integrate(lambda x: x**4 - 2 * x + 1, [0.0, 2.0], 1e-12)
        assert val == pytest.approx(2**5 / 5 - 4 + 2, abs=1e-13)

    def test_near_singular_1d(self):
        val, _ = adaptive_integrate(lambda x: 1.0 / (x + 0.01), [0.0, 1.0], 1e-10)
        assert val == pytest.approx(np.log(101.0), rel=1e-10)

    def test_peak_outside_box(self):
        val, _ = adaptive_integrate(
            lambda x: 1.0 / ((x - 1.05) ** 2 + 1e-4), [0.0, 1.0], 1e-9
        )
        ref, _ = quad(lambda x: 1.0 / ((x - 1.05) ** 2 + 1e-4), 0, 1, epsrel=1e-13)
        assert val == pytest.approx(ref, rel=1e-8)

    def test_2d_box(self):
        val, _ = adaptive_integrate(
            lambda p: np.exp(p[:, 0]) * np.sin(p[:, 1]),
            np.array([[0.0, 1.0], [0.0, np.pi]]),
            1e-11,
        )
        assert val == pytest.approx((np.e - 1) * 2.0, rel=1e-10)

    def test_vector_valued(self):
        val, _ = adaptive_integrate(
            lambda x: np.c_[x, x**2, np.sin(x)], [0.0, 1.0], 1e-12
        )
        np.testing.assert_allclose(val, [0.5, 1 / 3, 1 - np.cos(1)], rtol=1e-11)

    def test_budget_exhaustion(self):
        # genuinely singular integrand: cannot converge, must raise
        with pytest.raises(AccuracyError) as exc:
            adaptive_integrate(lambda x: 1.0 / np.maximum(x, 1e-300), [0.0, 1.0], 1e-10)
        assert exc.value.best_estimate is not None


class TestLogSingular:
    def test_interior_log(self):
        val = log_singular_integrate_1d(
            lambda u, t: np.log(t), 0.5, 0.0, 1.0, 1e-13
        )
        assert val == pytest.approx(np.log(0.5) - 1.0, abs=1e-12)

    def test_symmetric_log(self):
        val = log_singular_integrate_1d(
            lambda u, t: np.log(t), 0.0, -1.0, 1.0, 1e-13
        )
        assert val == pytest.approx(-2.0, abs=1e-12)

    def test_smooth_factor(self):
        # integral of (1 + u^2) ln|u - 0.3| over [0, 1]
        ref, _ = quad(
            lambda u: (1 + u**2) * np.log(abs(u - 0.3)),
            0,
            1,
            points=[0.3],
            epsabs=1e-14,
            limit=200,
        )
        val = log_singular_integrate_1d(
            lambda u, t: (1 + u**2) * np.log(t), 0.3, 0.0, 1.0, 1e-13
        )
        assert val == pytest.approx(ref, abs=1e-12)

    def test_smooth_integrand_matches_adaptive(self):
        val = log_singular_integrate_1d(
            lambda u, t: np.cos(u), 0.4, 0.0, 1.0, 1e-12
        )
        ref, _ = adaptive_integrate(np.cos, [0.0, 1.0], 1e-13)
        assert val == pytest.approx(ref, rel=1e-11)

    def test_vector_integrand(self):
        val = log_singular_integrate_1d(
            lambda u, t: np.c_[np.log(t), np.ones_like(u)], 0.5, 0.0, 1.0, 1e-12
        )
        np.testing.assert_allclose(val, [np.log(0.5) - 1.0, 1.0], atol=1e-11)


class TestDuffy:
    def test_corner_singularity(self):
        val = duffy_integrate(
            lambda p: 1.0 / np.hypot(p[:, 0], p[:, 1]),
            np.array([[0.0, 1.0], [0.0, 1.0]]),
            [0.0, 0.0],
            1e-12,
        )
        assert val == pytest.approx(2 * np.log(1 + np.sqrt(2)), abs=1e-10)

    def test_centre_symmetry(self):
        val, parts = duffy_integrate(
            lambda p: 1.0 / np.hypot(p[:, 0] - 0.5, p[:, 1] - 0.5),
            np.array([[0.0, 1.0], [0.0, 1.0]]),
            [0.5, 0.5],
            1e-11,
            return_parts=True,
        )
        assert len(parts) == 4
        np.testing.assert_allclose(parts, parts[0], rtol=1e-9)
        # value oracle: 4 corner problems of the half-size square
        ref = 4 * 0.5 * 2 * np.log(1 + np.sqrt(2))
        assert val == pytest.approx(ref, rel=1e-9)

    def test_smooth_matches_gauss(self):
        def f(p):
            return p[:, 0] ** 2 * p[:, 1] + 1.0

        val = duffy_integrate(f, np.array([[0.0, 1.0], [0.0, 1.0]]), [0.3, 0.6], 1e-13)
        assert val == pytest.approx(1 / 3 * 1 / 2 + 1.0, abs=1e-12)

    def test_edge_point_three_triangles(self):
        val = duffy_integrate(
            lambda p: 1.0 / np.hypot(p[:, 0], p[:, 1] - 0.5),
            np.array([[0.0, 1.0], [0.0, 1.0]]),
            [0.0, 0.5],
            1e-11,
        )
        ref, _ = adaptive_integrate(
            lambda p: 1.0 / np.hypot(p[:, 0] + 1e-200, p[:, 1] - 0.5),
            np.array([[1e-9, 1.0], [0.0, 1.0]]),
            1e-7,
        )
        assert val == pytest.approx(ref, rel=1e-3)
