"""Tests for correlation kernels and the PRN block-effect covariance."""

import numpy as np
import pytest

from robust_design import (
    Design,
    KernelSpec,
    PrnAssignment,
    PrnCorrelationSpec,
    assignment_matrix,
    build_correlation,
    prn_covariance,
)


def random_design(rng, n, q=2):
    return Design.from_arrays(rng.uniform(-1, 1, size=(n, q)))


class TestKernels:
    def test_independent_is_identity(self):
        d = Design.from_arrays([[0.1, 0.2], [0.3, -0.4], [0.9, 0.0]])
        np.testing.assert_array_equal(
            build_correlation(d, KernelSpec("independent")), np.eye(3)
        )

    def test_auto_regressive_powers(self):
        d = Design.from_arrays([[0.0], [0.5], [1.0]])
        r = build_correlation(d, KernelSpec("auto_regressive", rho=0.5))
        expected = [[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]]
        np.testing.assert_allclose(r, expected)

    def test_distance_kernel_at_zero_distance(self):
        d = Design.from_arrays([[0.3, 0.3], [0.3, 0.3]])
        r = build_correlation(d, KernelSpec("distance_kernel", rho=0.7))
        np.testing.assert_allclose(r[0, 1], 0.7)
        np.testing.assert_allclose(np.diag(r), 1.0)

    def test_constant_off_diagonals(self):
        d = Design.from_arrays([[0.0], [0.5], [1.0]])
        r = build_correlation(d, KernelSpec("constant", sigma2=2.0, rho=0.3))
        np.testing.assert_allclose(np.diag(r), 2.0)
        np.testing.assert_allclose(r[np.triu_indices(3, 1)], 0.6)

    def test_symmetry_all_kinds(self):
        rng = np.random.default_rng(5)
        for kind in ("independent", "constant", "auto_regressive", "distance_kernel"):
            for _ in range(5):
                d = random_design(rng, int(rng.integers(2, 12)))
                r = build_correlation(d, KernelSpec(kind, rho=float(rng.uniform(0, 1))))
                np.testing.assert_allclose(r, r.T)

    def test_rho_range_enforced(self):
        with pytest.raises(ValueError, match="rho"):
            KernelSpec("constant", rho=1.5)
        with pytest.raises(ValueError, match="sigma2"):
            KernelSpec("constant", sigma2=-1.0)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="kernel"):
            KernelSpec("matern")


class TestKernelPermutations:
    """Permutation behavior: invariance, equivariance, and the AR exception."""

    def _permute(self, design, perm):
        coords = design.coords_matrix()[perm]
        return Design.from_arrays(coords, design.weights()[perm], design.bounds)

    def test_independent_and_constant_invariant(self):
        rng = np.random.default_rng(9)
        for kind in ("independent", "constant"):
            spec = KernelSpec(kind, rho=0.4)
            d = random_design(rng, 6)
            perm = rng.permutation(6)
            p = np.eye(6)[perm]
            r = build_correlation(d, spec)
            r2 = build_correlation(self._permute(d, perm), spec)
            np.testing.assert_allclose(r2, p @ r @ p.T)

    def test_distance_kernel_equivariant(self):
        rng = np.random.default_rng(10)
        spec = KernelSpec("distance_kernel", rho=0.6)
        d = random_design(rng, 7)
        perm = rng.permutation(7)
        p = np.eye(7)[perm]
        r = build_correlation(d, spec)
        r2 = build_correlation(self._permute(d, perm), spec)
        np.testing.assert_allclose(r2, p @ r @ p.T, atol=1e-14)

    def test_auto_regressive_not_equivariant(self):
        """Some n=3 permutation changes the AR matrix: order is semantic."""
        spec = KernelSpec("auto_regressive", rho=0.5)
        d = Design.from_arrays([[0.0], [0.2], [0.4]])
        r = build_correlation(d, spec)
        found = False
        for perm in ([1, 0, 2], [0, 2, 1], [2, 0, 1], [1, 2, 0], [2, 1, 0]):
            p = np.eye(3)[perm]
            r2 = build_correlation(self._permute(d, np.array(perm)), spec)
            if not np.allclose(r2, p @ r @ p.T):
                found = True
        assert found

    def test_constant_and_ar_positive_definite(self):
        rng = np.random.default_rng(12)
        for n in (2, 5, 12, 30):
            d = random_design(rng, n)
            for rho in (0.0, 0.3, 0.9, 0.99):
                for kind in ("constant", "auto_regressive"):
                    r = build_correlation(d, KernelSpec(kind, rho=rho))
                    assert np.linalg.eigvalsh(r).min() > 0

    def test_constant_eigenvalues_closed_form(self):
        n, rho, s2 = 8, 0.4, 1.7
        d = Design.from_arrays(np.zeros((n, 1)), None, [(-1, 1)])
        r = build_correlation(d, KernelSpec("constant", sigma2=s2, rho=rho))
        eig = np.sort(np.linalg.eigvalsh(r))
        np.testing.assert_allclose(eig[:-1], s2 * (1 - rho))
        np.testing.assert_allclose(eig[-1], s2 * (1 + (n - 1) * rho))


class TestPrnStructures:
    def test_assignment_matrix_basic(self):
        np.testing.assert_array_equal(
            assignment_matrix(PrnAssignment(1, (1, 1)), 2), [[1, 0], [1, 0]]
        )
        np.testing.assert_array_equal(
            assignment_matrix(PrnAssignment(1, (1, 2)), 2), [[1, 0], [0, 1]]
        )

    def test_assignment_matrix_unit_rows(self):
        z = assignment_matrix(PrnAssignment(2, (3, 1, 4)), 3)
        expected = np.zeros((3, 4))
        expected[0, 2] = expected[1, 0] = expected[2, 3] = 1.0
        np.testing.assert_array_equal(z, expected)

    def test_stream_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="stream"):
            PrnAssignment(1, (1, 3))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="covers"):
            assignment_matrix(PrnAssignment(1, (1, 2)), 3)

    def test_shared_stream_covariance(self):
        spec = PrnCorrelationSpec(rho_plus=0.6, rho_minus=0.2)
        v = prn_covariance(PrnAssignment(1, (1, 1)), spec)
        np.testing.assert_allclose(v, [[1.0, 0.6], [0.6, 1.0]])

    def test_antithetic_pair_covariance(self):
        spec = PrnCorrelationSpec(rho_plus=0.6, rho_minus=0.2)
        v = prn_covariance(PrnAssignment(1, (1, 2)), spec)
        np.testing.assert_allclose(v, [[1.0, -0.2], [-0.2, 1.0]])

    def test_zero_correlations_identity(self):
        spec = PrnCorrelationSpec(0.0, 0.0)
        v = prn_covariance(PrnAssignment(2, (1, 3, 2, 4, 1)), spec)
        np.testing.assert_array_equal(v, np.eye(5))

    def test_diagonal_exactly_one_on_grid(self):
        rng = np.random.default_rng(21)
        for rp in np.linspace(0, 1, 6):
            for rm in np.linspace(0, 1, 6):
                k = tuple(int(v) for v in rng.integers(1, 5, size=7))
                v = prn_covariance(PrnAssignment(2, k), PrnCorrelationSpec(rp, rm))
                assert np.all(np.diag(v) == 1.0)

    def test_relabeling_invariance(self):
        """Swapping base streams (with antitheses in tandem) through k
        leaves the covariance unchanged."""
        rng = np.random.default_rng(30)
        g = 3
        spec = PrnCorrelationSpec(0.55, 0.35)
        for _ in range(20):
            k = rng.integers(1, 2 * g + 1, size=9)
            perm = rng.permutation(g)
            flips = rng.integers(0, 2, size=g)
            relabel = np.empty(2 * g + 1, dtype=int)
            for j in range(g):
                base, anti = perm[j] + 1, perm[j] + 1 + g
                if flips[j]:
                    base, anti = anti, base
                relabel[j + 1] = base
                relabel[j + 1 + g] = anti
            k2 = relabel[k]
            v1 = prn_covariance(PrnAssignment(g, tuple(k)), spec)
            v2 = prn_covariance(PrnAssignment(g, tuple(k2)), spec)
            np.testing.assert_allclose(v1, v2, atol=1e-15)

    def test_correlation_ranges_enforced(self):
        with pytest.raises(ValueError, match="rho_plus"):
            PrnCorrelationSpec(1.2, 0.0)
        with pytest.raises(ValueError, match="rho_minus"):
            PrnCorrelationSpec(0.2, -0.1)
