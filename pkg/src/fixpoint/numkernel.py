"""Dense real linear algebra on small and medium problems.

Vectors and matrices are plain float64 numpy arrays; :func:`as_vector` and
:func:`as_matrix` are the validation gates every public entry point uses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonSquare, NumericError, UsageError

DEFAULT_RANK_TOL = 1e-10


def as_vector(x, name="x") -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise UsageError(f"{name} must be a non-empty 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise UsageError(f"{name} has non-finite entries")
    return v


def as_matrix(M, name="matrix", square=False) -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise UsageError(f"{name} must be a non-empty 2-d array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise UsageError(f"{name} has non-finite entries")
    if square and A.shape[0] != A.shape[1]:
        raise NonSquare(f"{name} must be square, got shape {A.shape}")
    return A


def check_dim(v: np.ndarray, dim: int, name="x"):
    if v.shape[0] != dim:
        raise UsageError(f"{name} has dimension {v.shape[0]}, expected {dim}")


def inner(u, v) -> float:
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    check_dim(v, u.shape[0], "v")
    return float(u @ v)


def norm(v) -> float:
    return float(np.linalg.norm(v))


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Orthonormal basis of a subspace of R^d, stored as rows of ``vectors``."""

    vectors: np.ndarray
    ambient_dim: int

    def __post_init__(self):
        V = np.asarray(self.vectors, dtype=float).reshape(-1, self.ambient_dim)
        V.setflags(write=False)
        object.__setattr__(self, "vectors", V)

    def __len__(self):
        return self.vectors.shape[0]

    @property
    def is_empty(self) -> bool:
        return len(self) == 0

    def project(self, x: np.ndarray) -> np.ndarray:
        if self.is_empty:
            return np.zeros(self.ambient_dim)
        return self.vectors.T @ (self.vectors @ x)

    def complement(self) -> "OrthonormalBasis":
        """Orthonormal basis of the orthogonal complement."""
        d = self.ambient_dim
        if self.is_empty:
            return OrthonormalBasis(np.eye(d), d)
        if len(self) == d:
            return OrthonormalBasis(np.empty((0, d)), d)
        # full QR of the basis columns; trailing columns span the complement
        Q, _ = np.linalg.qr(self.vectors.T, mode="complete")
        return OrthonormalBasis(Q[:, len(self):].T, d)


def _svd(M):
    try:
        return np.linalg.svd(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"singular value decomposition failed: {exc}") from exc


def spectral_norm(M, tol: float = 1e-12) -> float:
    """Largest singular value of ``M``.

    Computed from a full SVD, which is exact to working precision at the
    sizes this package targets; ``tol`` is accepted for interface
    compatibility and validated only.
    """
    if tol <= 0:
        raise UsageError("tol must be positive")
    A = as_matrix(M)
    s = _svd(A)[1]
    return float(s[0])


def null_space_basis(M, rank_tol: float = DEFAULT_RANK_TOL) -> OrthonormalBasis:
    """Orthonormal basis of the numerical kernel of a square matrix.

    A right singular vector belongs to the kernel when its singular value is
    at most ``rank_tol * (1 + ||M||)``.
    """
    if rank_tol <= 0:
        raise UsageError("rank_tol must be positive")
    A = as_matrix(M, square=True)
    _, s, Vt = _svd(A)
    cutoff = rank_tol * (1.0 + s[0])
    return OrthonormalBasis(Vt[s <= cutoff], A.shape[1])


def least_squares_min_norm(M, b, rank_tol: float = DEFAULT_RANK_TOL):
    """Minimum-norm least-squares solution of ``M x = b``.

    Returns
    -------
    solution : ndarray
    residual_norm : float
        ``||M @ solution - b||``; nonzero exactly when the system is inconsistent.
    """
    A = as_matrix(M)
    b = as_vector(b, "b")
    check_dim(b, A.shape[0], "b")
    try:
        sol = np.linalg.lstsq(A, b, rcond=rank_tol)[0]
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"least-squares solve failed: {exc}") from exc
    return sol, norm(A @ sol - b)
