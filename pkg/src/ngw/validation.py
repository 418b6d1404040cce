"""Input validation helpers used across the package.

All helpers coerce to float64 ndarrays and raise ContractViolation with a
message naming the offending argument, so estimator-level code can rely on
uniform error reporting.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation


def as_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array with finite entries."""
    A = np.asarray(X, dtype=np.float64)
    if A.ndim != 2:
        raise ContractViolation(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ContractViolation(f"{name} contains NaN or Inf entries")
    return A


def as_vector(x, name: str = "x") -> np.ndarray:
    """Coerce to a 1-D float64 array with finite entries."""
    v = np.asarray(x, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ContractViolation(f"{name} contains NaN or Inf entries")
    return v


def as_points(X, dim: int | None = None, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D sample array, optionally checking the column count."""
    A = as_matrix(X, name=name)
    if dim is not None and A.shape[1] != dim:
        raise ContractViolation(
            f"{name} must have {dim} columns, got {A.shape[1]}"
        )
    return A


def check_square_symmetric(S, tol: float = 1e-8, name: str = "S") -> np.ndarray:
    """Validate a square symmetric matrix to the given absolute tolerance."""
    A = as_matrix(S, name=name)
    if A.shape[0] != A.shape[1]:
        raise ContractViolation(f"{name} must be square, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    asym = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if asym > tol * scale:
        raise ContractViolation(
            f"{name} is not symmetric: max|S - S^T| = {asym:.3e}"
        )
    return A


def check_batch_pair(X, Z, names=("X", "Z")) -> tuple[np.ndarray, np.ndarray]:
    """Validate two batches with matching row counts."""
    A = as_matrix(X, name=names[0])
    B = as_matrix(Z, name=names[1])
    if A.shape[0] != B.shape[0]:
        raise ContractViolation(
            f"{names[0]} and {names[1]} must pair rows: "
            f"{A.shape[0]} != {B.shape[0]}"
        )
    return A, B


def check_probability_vector(a, size: int | None = None, name: str = "a") -> np.ndarray:
    """Validate a strictly positive weight vector summing to one."""
    v = as_vector(a, name=name)
    if size is not None and v.size != size:
        raise ContractViolation(f"{name} must have length {size}, got {v.size}")
    if np.any(v <= 0.0):
        raise ContractViolation(f"{name} must be strictly positive")
    if abs(float(v.sum()) - 1.0) > 1e-9:
        raise ContractViolation(f"{name} must sum to 1, got {v.sum()!r}")
    return v


def check_positive(value, name: str) -> float:
    v = float(value)
    if not np.isfinite(v) or v <= 0.0:
        raise ContractViolation(f"{name} must be positive, got {value!r}")
    return v


def check_count(value, name: str, minimum: int = 1) -> int:
    v = int(value)
    if v < minimum:
        raise ContractViolation(f"{name} must be >= {minimum}, got {value!r}")
    return v
