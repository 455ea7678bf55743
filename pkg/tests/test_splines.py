import numpy as np
import pytest

from lcnystrom.errors import DomainError
from lcnystrom.splines import (
    KnotVector,
    bernstein_values,
    bezier_knot_vector,
    eval_basis,
    eval_basis_batch,
    eval_basis_deriv_batch,
    eval_basis_derivatives,
    find_span,
)


def random_open_kv(rng, degree, n_interior=None):
    if n_interior is None:
        n_interior = rng.integers(1, 8)
    interior = np.sort(rng.uniform(0.05, 0.95, size=n_interior))
    knots = np.r_[np.zeros(degree + 1), interior, np.ones(degree + 1)]
    return KnotVector(knots, degree)


class TestFindSpan:
    def test_single_span(self):
        kv = KnotVector([0, 0, 0, 1, 1, 1], 2)
        assert find_span(kv, 0.4) == 2

    def test_last_knot_clamps_to_last_nonzero_span(self):
        kv = KnotVector([0, 0, 0, 1, 1, 1], 2)
        assert find_span(kv, 1.0) == 2

    def test_cubic_two_span(self):
        kv = KnotVector([0, 0, 0, 0, 2, 4, 4, 4, 4], 3)
        assert find_span(kv, 3.0) == 4

    def test_outside_domain_raises(self):
        kv = KnotVector([0, 0, 1, 1], 1)
        with pytest.raises(DomainError):
            find_span(kv, -0.1)
        with pytest.raises(DomainError):
            find_span(kv, 1.1)

    def test_at_interior_repeated_knot(self):
        kv = KnotVector([0, 0, 0, 1, 1, 2, 2, 2], 2)
        # lands on the non-zero span starting at the repeated knot
        assert find_span(kv, 1.0) == 4


class TestEvalBasis:
    def test_bernstein_midpoint(self):
        kv = KnotVector([0, 0, 0, 1, 1, 1], 2)
        bs = eval_basis(kv, 0.5)
        np.testing.assert_allclose(bs.values, [0.25, 0.5, 0.25], atol=1e-15)

    def test_uniform_quadratic_middle_knot(self):
        # hand evaluation of the recursion: N_{0,2}(2) = 0.5 on {1,2,3,4}
        kv = KnotVector([1, 2, 3, 4], 2)
        bs = eval_basis(kv, 2.0)
        assert bs.value_of(0) == pytest.approx(0.5, abs=1e-15)

    def test_partition_of_unity_random(self):
        rng = np.random.default_rng(42)
        for _ in range(30):
            degree = int(rng.integers(1, 6))
            kv = random_open_kv(rng, degree)
            us = rng.uniform(0.0, 1.0, size=1000)
            for u in us[:40]:
                bs = eval_basis(kv, float(u))
                assert abs(bs.values.sum() - 1.0) <= 1e-12
            _, vals = eval_basis_batch(kv, us)
            assert np.max(np.abs(vals.sum(axis=1) - 1.0)) <= 1e-12

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(7)
        for degree in range(1, 6):
            kv = random_open_kv(rng, degree)
            us = rng.uniform(0, 1, size=50)
            spans, vals = eval_basis_batch(kv, us)
            for q, u in enumerate(us):
                bs = eval_basis(kv, float(u))
                assert bs.span_index == spans[q]
                np.testing.assert_allclose(vals[q], bs.values, atol=1e-14)

    def test_domain_error(self):
        kv = KnotVector([0, 0, 1, 1], 1)
        with pytest.raises(DomainError):
            eval_basis(kv, 2.0)

    def test_continuity_at_knot(self):
        # value continuity across a knot of multiplicity m <= p
        rng = np.random.default_rng(3)
        for degree, mult in [(2, 1), (3, 2), (4, 3), (5, 1)]:
            interior = np.r_[np.full(mult, 0.5)]
            knots = np.r_[np.zeros(degree + 1), interior, np.ones(degree + 1)]
            kv = KnotVector(knots, degree)
            eps = 1e-12
            left = eval_basis(kv, 0.5 - eps)
            right = eval_basis(kv, 0.5 + eps)
            n = kv.num_basis
            lv = np.array([left.value_of(i) for i in range(n)])
            rv = np.array([right.value_of(i) for i in range(n)])
            assert np.max(np.abs(lv - rv)) <= 1e-10


class TestDerivatives:
    def test_bernstein_derivatives(self):
        kv = KnotVector([0, 0, 0, 1, 1, 1], 2)
        bs = eval_basis_derivatives(kv, 0.5)
        np.testing.assert_allclose(bs.derivatives, [-1.0, 0.0, 1.0], atol=1e-14)

    def test_derivative_sum_is_zero(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            degree = int(rng.integers(1, 6))
            kv = random_open_kv(rng, degree)
            for u in rng.uniform(0.01, 0.99, size=20):
                bs = eval_basis_derivatives(kv, float(u))
                assert abs(bs.derivatives.sum()) <= 1e-11

    def test_finite_difference_uniform_quadratic(self):
        kv = KnotVector([1, 2, 3, 4], 2)
        h = 1e-6
        bs = eval_basis_derivatives(kv, 2.5)
        lo = eval_basis(kv, 2.5 - h)
        hi = eval_basis(kv, 2.5 + h)
        fd = (hi.values - lo.values) / (2 * h)
        np.testing.assert_allclose(bs.derivatives, fd, atol=1e-6)

    def test_finite_difference_random(self):
        rng = np.random.default_rng(5)
        h = 1e-6
        for _ in range(20):
            degree = int(rng.integers(1, 6))
            kv = random_open_kv(rng, degree)
            us = rng.uniform(0.05, 0.95, size=10)
            spans, vals, ders = eval_basis_deriv_batch(kv, us)
            _, vlo = eval_basis_batch(kv, us - h)
            _, vhi = eval_basis_batch(kv, us + h)
            slo, _ = eval_basis_batch(kv, us - h)
            # only compare where the span does not change across the stencil
            same = slo == spans
            fd = (vhi - vlo) / (2 * h)
            assert np.max(np.abs(ders[same] - fd[same])) <= 1e-6

    def test_deriv_batch_matches_scalar(self):
        rng = np.random.default_rng(13)
        kv = random_open_kv(rng, 4)
        us = rng.uniform(0, 1, size=30)
        spans, vals, ders = eval_basis_deriv_batch(kv, us)
        for q, u in enumerate(us):
            bs = eval_basis_derivatives(kv, float(u))
            np.testing.assert_allclose(vals[q], bs.values, atol=1e-14)
            np.testing.assert_allclose(ders[q], bs.derivatives, atol=1e-11)


class TestKnotVectorValidation:
    def test_decreasing_rejected(self):
        with pytest.raises(ValueError):
            KnotVector([0, 1, 0.5, 2], 1)

    def test_excess_multiplicity_rejected(self):
        with pytest.raises(ValueError):
            KnotVector([0, 0, 0, 1, 1], 1)

    def test_max_degree(self):
        with pytest.raises(ValueError):
            KnotVector(np.r_[np.zeros(12), np.ones(12)], 11)

    def test_open_flag(self):
        assert KnotVector([0, 0, 0, 1, 1, 1], 2).is_open
        assert not KnotVector([1, 2, 3, 4], 2).is_open


class TestBernstein:
    def test_matches_spline_eval(self):
        rng = np.random.default_rng(2)
        for mult in range(1, 9):
            kv = bezier_knot_vector(mult)
            xi = rng.uniform(-1, 1, size=20)
            _, vals = eval_basis_batch(kv, xi)
            direct = bernstein_values(mult - 1, xi)
            np.testing.assert_allclose(vals, direct, atol=1e-13)

    def test_partition_of_unity(self):
        xi = np.linspace(-1, 1, 101)
        b = bernstein_values(5, xi)
        np.testing.assert_allclose(b.sum(axis=1), 1.0, atol=1e-14)
