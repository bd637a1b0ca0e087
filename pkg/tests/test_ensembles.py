import numpy as np
import pytest

from lps import ensembles, pnorm
from lps.ensembles import EnsembleSpec
from lps.errors import CapacityError, InvalidInputError


class TestGaussianInstance:
    def test_deterministic(self):
        spec = EnsembleSpec(m=2, N=3, seed=42)
        A1, y1 = ensembles.gen_gaussian_instance(spec)
        A2, y2 = ensembles.gen_gaussian_instance(spec)
        assert np.array_equal(A1, A2)
        assert np.array_equal(y1, y2)

    def test_seed_changes_output(self):
        A1, _ = ensembles.gen_gaussian_instance(EnsembleSpec(m=2, N=3, seed=42))
        A2, _ = ensembles.gen_gaussian_instance(EnsembleSpec(m=2, N=3, seed=43))
        assert not np.array_equal(A1, A2)

    def test_moments(self):
        A, y = ensembles.gen_gaussian_instance(EnsembleSpec(m=100, N=100, seed=7))
        samples = np.concatenate([A.ravel(), y])
        assert abs(samples.mean()) < 0.05
        assert 0.9 < samples.var() < 1.1

    def test_invalid_spec(self):
        with pytest.raises(InvalidInputError):
            EnsembleSpec(m=0, N=3, seed=1)
        with pytest.raises(InvalidInputError):
            EnsembleSpec(m=2, N=3, seed=1, sparsity=4)
        with pytest.raises(InvalidInputError):
            EnsembleSpec(m=2, N=3, seed=1, distribution="bernoulli")


class TestSparseMeasured:
    def test_full_sparsity_boundary(self):
        spec = EnsembleSpec(m=3, N=4, seed=5, sparsity=4)
        A, y, x0, support = ensembles.gen_sparse_measured(spec)
        assert np.all(x0 != 0)
        assert np.array_equal(support, np.arange(4))
        assert np.array_equal(y, A @ x0)

    def test_exact_measurement(self):
        spec = EnsembleSpec(m=4, N=10, seed=11, sparsity=3)
        A, y, x0, support = ensembles.gen_sparse_measured(spec)
        assert np.abs(y - A @ x0).max() == 0.0
        assert np.array_equal(np.flatnonzero(x0), support)
        assert set(np.abs(x0[support])) == {1.0}

    def test_one_sparse_measurement_is_signed_column(self):
        spec = EnsembleSpec(m=2, N=6, seed=3, sparsity=1)
        A, y, x0, support = ensembles.gen_sparse_measured(spec)
        j = support[0]
        assert x0[j] in (-1.0, 1.0)
        assert np.array_equal(y, x0[j] * A[:, j])

    def test_gaussian_magnitudes(self):
        spec = EnsembleSpec(m=4, N=10, seed=11, sparsity=3, signal_values="gaussian")
        _, _, x0, support = ensembles.gen_sparse_measured(spec)
        assert not set(np.abs(x0[support])) <= {1.0}

    def test_requires_sparsity(self):
        with pytest.raises(InvalidInputError):
            ensembles.gen_sparse_measured(EnsembleSpec(m=2, N=3, seed=1))


class TestSetS:
    def test_hand_example(self):
        # all three 2x2 minors have determinant +-1
        A = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
        assert ensembles.is_in_set_S(A, [1.0, 1.0], 1e-10)

    def test_zero_column_fails(self):
        A = np.array([[1.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
        assert not ensembles.is_in_set_S(A, [1.0, 1.0], 1e-10)

    def test_zero_rhs_fails(self):
        A = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
        assert not ensembles.is_in_set_S(A, [0.0, 0.0], 1e-10)

    def test_gaussian_is_generic(self):
        rng = ensembles.rng_for(3)
        A = rng.standard_normal((3, 7))
        y = rng.standard_normal(3)
        assert ensembles.is_in_set_S(A, y, 1e-12)

    def test_capacity_error(self):
        A = np.zeros((2, 30))
        with pytest.raises(CapacityError):
            ensembles.is_in_set_S(A, np.ones(2), 1e-10)


class TestRip:
    def test_identity(self):
        assert ensembles.rip_constant(np.eye(4), 2) == pytest.approx(0.0, abs=1e-12)

    def test_diagonal(self):
        assert ensembles.rip_constant(np.diag([1.0, 2.0]), 1) == pytest.approx(3.0)

    def test_rotation(self):
        th = 0.7
        A = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        assert ensembles.rip_constant(A, 2) == pytest.approx(0.0, abs=1e-12)

    def test_monotone_in_k(self):
        rng = ensembles.rng_for(9)
        A = rng.standard_normal((4, 7)) / 2.0
        deltas = [ensembles.rip_constant(A, k) for k in range(1, 6)]
        assert all(b >= a - 1e-12 for a, b in zip(deltas, deltas[1:]))

    def test_capacity_error(self):
        A = np.zeros((4, 40))
        with pytest.raises(CapacityError):
            ensembles.rip_constant(A, 5)

    def test_matches_direct_eig(self):
        rng = ensembles.rng_for(10)
        A = rng.standard_normal((3, 6)) / np.sqrt(3)
        k = 2
        import itertools
        ref = 0.0
        for cols in itertools.combinations(range(6), k):
            G = A[:, cols].T @ A[:, cols]
            w = np.linalg.eigvalsh(G)
            ref = max(ref, w[-1] - 1.0, 1.0 - w[0])
        assert ensembles.rip_constant(A, k) == pytest.approx(ref, abs=1e-12)


class TestMinPnorm:
    def test_symmetric_line(self):
        assert ensembles.min_pnorm_over_affine([[1.0, 1.0]], [2.0], 2) == pytest.approx(
            np.sqrt(2.0)
        )

    def test_identity(self):
        assert ensembles.min_pnorm_over_affine(np.eye(2), [3.0, 4.0], 2) == pytest.approx(5.0)

    def test_matches_bp_example(self):
        t = 5.0 / (1.0 + 2.0 * np.sqrt(2.0))
        expected = (t ** 3 + 2.0 * np.sqrt(2.0) * t ** 3) ** (1.0 / 3.0)
        got = ensembles.min_pnorm_over_affine([[1.0, 2.0]], [5.0], 3)
        assert got == pytest.approx(expected, rel=1e-8)


def test_rng_for_independent_of_order():
    a = ensembles.rng_for(1, 2, 3).standard_normal(4)
    b = ensembles.rng_for(1, 2, 4).standard_normal(4)
    a2 = ensembles.rng_for(1, 2, 3).standard_normal(4)
    assert np.array_equal(a, a2)
    assert not np.array_equal(a, b)


def test_derive_seed_stable():
    s1 = ensembles.derive_seed(7, 0, 1)
    s2 = ensembles.derive_seed(7, 0, 1)
    s3 = ensembles.derive_seed(7, 0, 2)
    assert s1 == s2 != s3
    assert 0 <= s1 < 2 ** 64
