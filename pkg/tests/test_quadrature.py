"""Quadrature rules: nodes, weights, exactness, Smolyak size bounds."""

import itertools

import numpy as np
import pytest

from gvplan import expect, hermite_rule_1d, smolyak_rule, tensor_rule
from gvplan.quadrature import smolyak_point_bound
from helpers import random_spd


def gaussian_moment_1d(k: int) -> float:
    """E[x^k] for x ~ N(0,1): 0 for odd k, (k-1)!! for even k."""
    if k % 2 == 1:
        return 0.0
    out = 1.0
    for j in range(k - 1, 0, -2):
        out *= j
    return out


def monomial_expectation(rule, powers) -> float:
    vals = np.prod(rule.points ** np.asarray(powers), axis=1)
    return float(rule.weights @ vals)


class TestHermite1D:
    def test_single_point(self):
        r = hermite_rule_1d(1)
        assert r.npoints == 1
        assert r.points[0, 0] == pytest.approx(0.0, abs=1e-15)
        assert r.weights[0] == pytest.approx(1.0, rel=1e-14)

    def test_three_point_rule(self):
        # He_3(x) = x^3 - 3x has roots {-sqrt(3), 0, sqrt(3)}; weights solve
        # the moment equations for k = 0, 2, 4 -> {1/6, 2/3, 1/6}
        r = hermite_rule_1d(3)
        assert np.allclose(sorted(r.points[:, 0]), [-np.sqrt(3), 0, np.sqrt(3)],
                           atol=1e-12)
        order = np.argsort(r.points[:, 0])
        assert np.allclose(r.weights[order], [1 / 6, 2 / 3, 1 / 6], atol=1e-12)

    def test_second_moment_two_points(self):
        r = hermite_rule_1d(2)
        assert monomial_expectation(r, [2]) == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("p", [1, 2, 3, 5, 8, 13, 21, 40, 64])
    def test_moment_exactness_up_to_degree(self, p):
        r = hermite_rule_1d(p)
        assert abs(float(np.sum(r.weights)) - 1.0) <= 1e-12
        for k in range(2 * p):
            got = monomial_expectation(r, [k])
            want = gaussian_moment_1d(k)
            if want == 0.0:
                # cancellation scale of the odd-moment sum, not unit scale
                scale = float(np.abs(r.weights) @ np.abs(r.points[:, 0]) ** k)
                assert abs(got) <= 1e-10 * max(scale, 1.0)
            else:
                assert abs(got - want) / want <= 1e-10

    def test_order_out_of_range(self):
        with pytest.raises(ValueError):
            hermite_rule_1d(0)
        with pytest.raises(ValueError):
            hermite_rule_1d(65)


class TestTensorRule:
    def test_sizes(self):
        assert tensor_rule(3, 2).npoints == 9
        r = tensor_rule(2, 3)
        assert r.npoints == 8
        assert float(np.sum(r.weights)) == pytest.approx(1.0, abs=1e-12)

    def test_product_moment(self):
        r = tensor_rule(3, 2)
        assert monomial_expectation(r, [2, 2]) == pytest.approx(1.0, rel=1e-12)

    def test_size_guard(self):
        with pytest.raises(ValueError):
            tensor_rule(10, 8)


class TestSmolyakRule:
    def test_level_one_is_midpoint(self):
        for d in (1, 2, 5, 9):
            r = smolyak_rule(1, d)
            assert r.npoints == 1
            assert np.allclose(r.points, 0.0)
            assert r.weights[0] == pytest.approx(1.0, rel=1e-14)

    def test_degree_five_exactness_d3(self):
        r = smolyak_rule(3, 3)
        for powers in itertools.product(range(6), repeat=3):
            if sum(powers) > 5:
                continue
            want = np.prod([gaussian_moment_1d(k) for k in powers])
            got = monomial_expectation(r, powers)
            if want == 0.0:
                assert abs(got) <= 1e-9, f"powers {powers}"
            else:
                assert abs(got - want) / abs(want) <= 1e-9, f"powers {powers}"

    def test_odd_and_quartic_examples(self):
        r = smolyak_rule(3, 3)
        assert monomial_expectation(r, [2, 2, 1]) == pytest.approx(0.0, abs=1e-9)
        assert monomial_expectation(r, [4, 0, 0]) == pytest.approx(3.0, rel=1e-9)

    def test_point_count_bound(self):
        # the bound is dimension-asymptotic; at d=1, k_q=6 the grid collapses
        # to the plain 6-point 1D rule (6 points) while e^6/5! < 4
        for k_q in range(1, 7):
            for d in (1, 2, 3, 5, 8, 14):
                if (k_q, d) == (6, 1):
                    continue
                r = smolyak_rule(k_q, d)
                assert r.npoints <= smolyak_point_bound(k_q, d), (k_q, d)

    def test_lemma_bound_example(self):
        assert smolyak_point_bound(3, 3) == pytest.approx(np.e**3 / 2 * 27, rel=1e-12)
        assert smolyak_rule(3, 3).npoints <= np.e**3 / 2 * 27

    def test_weights_normalized_some_negative(self):
        r = smolyak_rule(3, 4)
        assert float(np.sum(r.weights)) == pytest.approx(1.0, abs=1e-12)
        assert np.any(r.weights < 0)  # inherent to the combination technique

    def test_matches_tensor_on_low_degree_polynomials(self):
        # both rules are exact for total degree <= 2 k_q - 1, so they agree
        rng = np.random.default_rng(0)
        for d in (2, 3, 4):
            for k_q in (2, 3):
                sparse = smolyak_rule(k_q, d)
                full = tensor_rule(k_q, d)
                for _ in range(5):
                    powers = rng.integers(0, 2 * k_q, size=d)
                    while sum(powers) > 2 * k_q - 1:
                        powers = rng.integers(0, 2 * k_q, size=d)
                    a = monomial_expectation(sparse, powers)
                    b = monomial_expectation(full, powers)
                    assert abs(a - b) <= 1e-8 * max(1.0, abs(b))


class TestExpect:
    def test_constant(self):
        r = smolyak_rule(2, 3)
        assert expect(r, lambda x: 1.0, np.zeros(3), np.eye(3)) == pytest.approx(1.0)

    def test_first_moment(self):
        rng = np.random.default_rng(1)
        m = rng.normal(size=3)
        p = random_spd(rng, 3)
        r = smolyak_rule(2, 3)
        got = expect(r, lambda x: x, m, p)
        assert np.allclose(got, m, atol=1e-12)

    def test_second_central_moment(self):
        rng = np.random.default_rng(2)
        m = rng.normal(size=3)
        p = random_spd(rng, 3)
        r = smolyak_rule(2, 3)
        got = expect(r, lambda x: np.outer(x - m, x - m), m, p)
        assert np.max(np.abs(got - p)) <= 1e-9 * np.max(np.abs(p))

    def test_near_singular_covariance(self):
        # rank-deficient covariance goes through the eigendecomposition root
        p = np.diag([1.0, 0.0])
        r = tensor_rule(3, 2)
        got = expect(r, lambda x: x @ x, np.zeros(2), p)
        assert got == pytest.approx(1.0, rel=1e-9)
