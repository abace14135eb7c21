"""Small dense linear-algebra helpers shared across the package."""

import numpy as np


def vec(mat: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization of a matrix."""
    return np.asarray(mat).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec` for a ``rows x cols`` matrix."""
    return np.asarray(v).reshape((rows, cols), order="F")


def psd_sqrt(mat: np.ndarray, *, tol: float = 1e-12, name: str = "matrix",
             require_pd: bool = False) -> np.ndarray:
    """Symmetric square root of a positive (semi)definite matrix.

    Uses an eigendecomposition; eigenvalues in ``[-tol, 0)`` are clamped to
    zero. Raises ``ValueError`` if the matrix is not symmetric, if an
    eigenvalue falls below ``-tol``, or (with ``require_pd``) if the smallest
    eigenvalue does not exceed ``tol``.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, rtol=0.0, atol=1e-10):
        raise ValueError(f"{name} must be symmetric")
    eigvals, eigvecs = np.linalg.eigh(mat)
    if require_pd:
        if eigvals.min() <= tol:
            raise ValueError(
                f"{name} must be positive definite "
                f"(smallest eigenvalue {eigvals.min():.3e})")
    elif eigvals.min() < -tol:
        raise ValueError(
            f"{name} must be positive semidefinite "
            f"(smallest eigenvalue {eigvals.min():.3e})")
    eigvals = np.clip(eigvals, 0.0, None)
    return (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
