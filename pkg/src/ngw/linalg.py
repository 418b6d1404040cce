"""Dense linear algebra primitives shared by every other module.

Symmetric eigendecomposition is done with cyclic Jacobi rotations: robust,
dependency-free, and exact enough at benchmark scale (d <= 1024). PSD square
roots and the Frobenius-sphere projection are built on top of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DegenerateProjection, NotPSDError
from .validation import check_square_symmetric

_JACOBI_REL_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 64


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted descending, eigenvector columns paired by rank."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


def sym_eigendecompose(S) -> EigenDecomposition:
    """Diagonalize a symmetric matrix with cyclic Jacobi rotations.

    Returns eigenvalues in descending order; ties keep the order in which
    the converged diagonal produced them, so repeated calls are identical.
    """
    A = check_square_symmetric(S, name="S").copy()
    d = A.shape[0]
    V = np.eye(d)
    if d == 1:
        return EigenDecomposition(A[0].copy(), V)

    norm = float(np.linalg.norm(A))
    if norm == 0.0:
        return EigenDecomposition(np.zeros(d), V)

    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= _JACOBI_REL_TOL * norm:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) if theta != 0.0 else 1.0
                t = t / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                rot_p = c * A[:, p] - s * A[:, q]
                rot_q = s * A[:, p] + c * A[:, q]
                A[:, p], A[:, q] = rot_p, rot_q
                rot_p = c * A[p, :] - s * A[q, :]
                rot_q = s * A[p, :] + c * A[q, :]
                A[p, :], A[q, :] = rot_p, rot_q
                rot_p = c * V[:, p] - s * V[:, q]
                rot_q = s * V[:, p] + c * V[:, q]
                V[:, p], V[:, q] = rot_p, rot_q

    eigenvalues = np.diag(A).copy()
    # stable argsort keeps input order among equal eigenvalues
    order = np.argsort(-eigenvalues, kind="stable")
    return EigenDecomposition(eigenvalues[order], V[:, order])


def psd_sqrt(S) -> np.ndarray:
    """Symmetric PSD square root; eigenvalues below -1e-10 are rejected."""
    eig = sym_eigendecompose(S)
    vals = eig.eigenvalues
    if np.any(vals < -1e-10):
        raise NotPSDError(
            f"matrix has eigenvalue {float(vals.min()):.3e} < -1e-10"
        )
    root = np.sqrt(np.clip(vals, 0.0, None))
    R = (eig.eigenvectors * root) @ eig.eigenvectors.T
    return 0.5 * (R + R.T)


def random_rotation(d: int, seed: int) -> np.ndarray:
    """Haar-distributed rotation (orthogonal, det +1), deterministic in seed."""
    d = int(d)
    if d < 1:
        raise ContractViolation(f"rotation dimension must be >= 1, got {d}")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0.0] = 1.0
    Q = Q * signs
    if np.linalg.det(Q) < 0.0:
        Q[:, -1] = -Q[:, -1]
    return Q


def frobenius_radius(m: int, n: int) -> float:
    """Radius of the constraint sphere for n-by-m cost matrices."""
    return float(np.sqrt(min(m, n)))


def project_frobenius(P, m: int | None = None, n: int | None = None) -> np.ndarray:
    """Rescale an n-by-m matrix onto the Frobenius sphere of radius min(sqrt(m), sqrt(n)).

    The zero matrix has no nearest point on the sphere and raises
    DegenerateProjection.
    """
    A = np.asarray(P, dtype=np.float64)
    if A.ndim != 2:
        raise ContractViolation(f"P must be 2-D, got shape {A.shape}")
    rows, cols = A.shape
    if n is not None and rows != n:
        raise ContractViolation(f"P has {rows} rows, expected n={n}")
    if m is not None and cols != m:
        raise ContractViolation(f"P has {cols} columns, expected m={m}")
    norm = float(np.linalg.norm(A))
    if norm == 0.0:
        raise DegenerateProjection("cannot project the zero matrix onto the sphere")
    return A * (frobenius_radius(cols, rows) / norm)
