import numpy as np
import pytest

from ngw.errors import ContractViolation, DegenerateProjection, NotPSDError
from ngw.linalg import (
    frobenius_radius,
    project_frobenius,
    psd_sqrt,
    random_rotation,
    sym_eigendecompose,
)


def random_symmetric(d, seed):
    A = np.random.default_rng(seed).standard_normal((d, d))
    return (A + A.T) / 2.0


class TestEigendecompose:
    def test_already_diagonal(self):
        eig = sym_eigendecompose(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(eig.eigenvalues, [3.0, 2.0, 1.0])
        # eigenvectors form a signed permutation of the identity
        assert np.allclose(np.abs(eig.eigenvectors), np.eye(3)[:, [0, 2, 1]])

    def test_two_by_two_hand_values(self):
        # char. poly of [[2,1],[1,2]]: (2-l)^2 - 1 = 0 -> l in {3, 1}
        eig = sym_eigendecompose([[2.0, 1.0], [1.0, 2.0]])
        assert np.allclose(eig.eigenvalues, [3.0, 1.0], atol=1e-12)

    def test_identity(self):
        eig = sym_eigendecompose(np.eye(4))
        assert np.allclose(eig.eigenvalues, np.ones(4))
        Q = eig.eigenvectors
        assert np.max(np.abs(Q.T @ Q - np.eye(4))) <= 1e-8

    @pytest.mark.parametrize("d", [2, 5, 16, 64])
    def test_reconstruction_random(self, d):
        S = random_symmetric(d, seed=d)
        eig = sym_eigendecompose(S)
        scale = np.max(np.abs(S))
        assert np.max(np.abs(eig.reconstruct() - S)) <= 1e-6 * scale
        Q = eig.eigenvectors
        assert np.max(np.abs(Q.T @ Q - np.eye(d))) <= 1e-8
        assert np.all(np.diff(eig.eigenvalues) <= 1e-12)

    def test_matches_lapack_eigenvalues(self, subtests=None):
        for seed in range(10):
            S = random_symmetric(12, seed=seed)
            ours = sym_eigendecompose(S).eigenvalues
            ref = np.sort(np.linalg.eigvalsh(S))[::-1]
            assert np.allclose(ours, ref, atol=1e-9)

    def test_rejects_non_square(self):
        with pytest.raises(ContractViolation):
            sym_eigendecompose(np.ones((2, 3)))

    def test_rejects_asymmetric(self):
        with pytest.raises(ContractViolation):
            sym_eigendecompose([[1.0, 2.0], [0.0, 1.0]])


class TestPsdSqrt:
    def test_diagonal(self):
        assert np.allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_identity(self):
        assert np.allclose(psd_sqrt(np.eye(3)), np.eye(3))

    def test_two_by_two(self):
        R = psd_sqrt([[2.0, 1.0], [1.0, 2.0]])
        vals = np.sort(np.linalg.eigvalsh(R))
        assert np.allclose(vals, [1.0, np.sqrt(3.0)])
        assert np.allclose(R @ R, [[2.0, 1.0], [1.0, 2.0]], atol=1e-10)

    @pytest.mark.parametrize("seed", range(0, 100, 7))
    def test_square_recovers_input(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 33))
        B = rng.standard_normal((d, d))
        S = B @ B.T
        R = psd_sqrt(S)
        assert np.max(np.abs(R @ R - S)) <= 1e-6 * (1.0 + np.max(np.abs(S)))

    def test_rejects_negative_definite(self):
        with pytest.raises(NotPSDError):
            psd_sqrt(np.diag([1.0, -0.5]))


class TestRandomRotation:
    def test_one_dimensional(self):
        assert np.array_equal(random_rotation(1, seed=42), [[1.0]])

    def test_orthogonal_and_special(self):
        for seed in range(5):
            Q = random_rotation(3, seed=seed)
            assert np.max(np.abs(Q.T @ Q - np.eye(3))) <= 1e-8
            assert abs(np.linalg.det(Q) - 1.0) <= 1e-6

    def test_deterministic(self):
        assert np.array_equal(random_rotation(6, seed=9), random_rotation(6, seed=9))

    def test_preserves_norms(self):
        Q = random_rotation(8, seed=3)
        V = np.random.default_rng(5).standard_normal((10, 8))
        assert np.max(np.abs(np.linalg.norm(V @ Q.T, axis=1)
                             - np.linalg.norm(V, axis=1))) <= 1e-8

    def test_rejects_zero_dim(self):
        with pytest.raises(ContractViolation):
            random_rotation(0, seed=0)


class TestProjectFrobenius:
    def test_identity_fixed_point(self):
        assert np.allclose(project_frobenius(np.eye(3), m=3, n=3), np.eye(3))

    def test_scales_to_radius(self):
        P = project_frobenius([[2.0, 0.0], [0.0, 0.0]], m=2, n=2)
        assert np.allclose(P, [[np.sqrt(2.0), 0.0], [0.0, 0.0]])

    def test_zero_matrix_degenerate(self):
        with pytest.raises(DegenerateProjection):
            project_frobenius(np.zeros((2, 2)))

    def test_idempotent(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n, m = rng.integers(1, 9, size=2)
            P = rng.standard_normal((n, m))
            once = project_frobenius(P)
            twice = project_frobenius(once)
            assert np.max(np.abs(twice - once)) <= 1e-12
            assert abs(np.linalg.norm(once) - frobenius_radius(m, n)) <= 1e-10

    def test_direction_preserved(self):
        P = np.array([[1.0, 2.0], [3.0, 4.0]])
        proj = project_frobenius(P)
        assert np.allclose(proj / np.linalg.norm(proj), P / np.linalg.norm(P))

    def test_dim_mismatch(self):
        with pytest.raises(ContractViolation):
            project_frobenius(np.ones((2, 3)), m=2, n=3)
