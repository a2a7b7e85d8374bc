"""Tests for design containers, bases, links, and the variance function."""

import math

import numpy as np
import pytest

from robust_design import (
    BasisSpec,
    Design,
    DesignPoint,
    LinkSpec,
    VarianceModel,
    expand_basis,
    mean_response,
    model_matrix,
    variance_function,
)


class TestDesignTypes:
    def test_point_weight_must_be_nonnegative(self):
        with pytest.raises(ValueError, match="weight"):
            DesignPoint((0.0,), -0.1)

    def test_design_needs_points(self):
        with pytest.raises(ValueError, match="at least one"):
            Design(())

    def test_weights_must_normalize(self):
        pts = (DesignPoint((0.0,), 0.7), DesignPoint((0.5,), 0.7))
        with pytest.raises(ValueError, match="sum to 1"):
            Design(pts)

    def test_coordinates_must_respect_bounds(self):
        with pytest.raises(ValueError, match="outside bounds"):
            Design.from_arrays([[1.5]], [1.0])

    def test_mixed_dimensions_rejected(self):
        pts = (DesignPoint((0.0,), 0.5), DesignPoint((0.0, 0.0), 0.5))
        with pytest.raises(ValueError, match="dimension"):
            Design(pts)

    def test_from_arrays_uniform_weights(self):
        d = Design.from_arrays([[0.0, 0.0], [1.0, -1.0]])
        np.testing.assert_allclose(d.weights(), [0.5, 0.5])
        assert d.bounds == ((-1.0, 1.0), (-1.0, 1.0))

    def test_basis_rejects_duplicates_and_empty(self):
        with pytest.raises(ValueError, match="duplicate"):
            BasisSpec(2, ((0, 0), (0, 0)))
        with pytest.raises(ValueError, match="at least one term"):
            BasisSpec(2, ())

    def test_full_quadratic_layout(self):
        b = BasisSpec.full_quadratic(2)
        assert b.d == 6
        assert b.terms == ((0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2))

    def test_pairwise_basis_has_seven_terms_for_q3(self):
        b = BasisSpec.main_effects_with_interactions(3)
        assert b.d == 7


class TestExpandBasis:
    def test_origin_kills_nonconstant_terms(self):
        b = BasisSpec.full_quadratic(2)
        np.testing.assert_array_equal(
            expand_basis(DesignPoint((0.0, 0.0)), b), [1, 0, 0, 0, 0, 0]
        )

    def test_hand_evaluation_at_corner(self):
        b = BasisSpec.full_quadratic(2)
        np.testing.assert_allclose(
            expand_basis(DesignPoint((-1.0, 1.0)), b), [1, -1, 1, -1, 1, 1]
        )

    def test_all_ones_point_q3(self):
        b = BasisSpec.main_effects_with_interactions(3)
        np.testing.assert_array_equal(
            expand_basis(DesignPoint((1.0, 1.0, 1.0)), b), np.ones(7)
        )

    def test_dimension_mismatch_rejected(self):
        b = BasisSpec.full_quadratic(2)
        with pytest.raises(ValueError, match="dimension"):
            expand_basis(DesignPoint((1.0, 1.0, 1.0)), b)

    def test_monomials_multiply_on_grid(self):
        """Term (a, b) evaluates to x1^a * x2^b over the whole grid."""
        levels = [-1.0, -0.5, 0.0, 0.5, 1.0]
        b = BasisSpec(2, ((0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (2, 1)))
        for x1 in levels:
            for x2 in levels:
                row = expand_basis(DesignPoint((x1, x2)), b)
                expected = [x1**a * x2**c for a, c in b.terms]
                np.testing.assert_allclose(row, expected, atol=1e-15)


class TestModelMatrix:
    def test_two_point_linear(self):
        d = Design.from_arrays([[-1.0], [1.0]])
        b = BasisSpec(1, ((0,), (1,)))
        np.testing.assert_array_equal(model_matrix(d, b), [[1, -1], [1, 1]])

    def test_single_point_quadratic(self):
        d = Design.from_arrays([[0.0, 0.0]])
        b = BasisSpec.full_quadratic(2)
        m = model_matrix(d, b)
        assert m.shape == (1, 6)
        np.testing.assert_array_equal(m[0], [1, 0, 0, 0, 0, 0])

    def test_shapes_for_random_designs(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(1, 51))
            q = int(rng.integers(1, 4))
            b = BasisSpec.full_quadratic(q)
            d = Design.from_arrays(rng.uniform(-1, 1, size=(n, q)))
            assert model_matrix(d, b).shape == (n, b.d)


class TestVarianceFunction:
    def test_unit_at_orthogonal_direction(self):
        vm = VarianceModel((1.0, -1.0))
        assert variance_function(DesignPoint((1.0, 1.0)), vm) == 1.0

    def test_exp_three(self):
        vm = VarianceModel((1.0, 0.0))
        np.testing.assert_allclose(
            variance_function(DesignPoint((1.0, 0.0)), vm), math.exp(3.0)
        )

    def test_exp_three_via_split_direction(self):
        vm = VarianceModel((0.5, 0.5))
        np.testing.assert_allclose(
            variance_function(DesignPoint((1.0, 1.0)), vm), math.exp(3.0)
        )

    def test_sign_flip_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            x = rng.uniform(-1, 1, size=3)
            a = rng.normal(size=3)
            v1 = variance_function(DesignPoint(tuple(x)), VarianceModel(tuple(a)))
            v2 = variance_function(DesignPoint(tuple(-x)), VarianceModel(tuple(-a)))
            np.testing.assert_allclose(v1, v2, rtol=1e-12)

    def test_sigma2_must_be_positive(self):
        with pytest.raises(ValueError, match="sigma2"):
            VarianceModel((1.0,), 0.0)


class TestMeanResponse:
    def test_logit_at_zero_beta(self):
        b = BasisSpec.full_quadratic(2)
        val = mean_response(DesignPoint((0.3, -0.7)), b, np.zeros(6), LinkSpec("logit"))
        assert val == 0.5

    def test_identity_hand_case(self):
        b = BasisSpec(1, ((0,), (1,)))
        val = mean_response(DesignPoint((1.0,)), b, [2.0, -1.0], LinkSpec("identity"))
        assert val == 1.0

    def test_logit_saturates_without_overflow(self):
        b = BasisSpec(1, ((0,),))
        with np.errstate(over="raise"):
            val = mean_response(DesignPoint((0.0,)), b, [40.0], LinkSpec("logit"))
        assert 1.0 - 1e-15 < val <= 1.0

    def test_logit_complement_identity(self):
        rng = np.random.default_rng(11)
        b = BasisSpec.full_quadratic(2)
        link = LinkSpec("logit")
        for _ in range(50):
            x = DesignPoint(tuple(rng.uniform(-1, 1, size=2)))
            beta = rng.normal(scale=3.0, size=6)
            total = mean_response(x, b, beta, link) + mean_response(x, b, -beta, link)
            np.testing.assert_allclose(total, 1.0, atol=1e-12)

    def test_unknown_link_rejected(self):
        with pytest.raises(ValueError, match="link"):
            LinkSpec("probit")
