"""Nonexpansive linear and affine operators and their relaxations.

A :class:`LinearOperator` wraps a square matrix R that has been certified
nonexpansive (spectral norm at most one) and caches an orthonormal basis of
its fixed-point subspace ker(Id - R). An :class:`AffineOperator` is
x -> Rx + b together with an anchor a satisfying (Id - R) a = b, so that the
affine iteration is the linear one shifted by a.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyFixedSet, ExpansiveOperator, UsageError, ValidationError
from .numkernel import (
    DEFAULT_RANK_TOL,
    OrthonormalBasis,
    as_matrix,
    as_vector,
    check_dim,
    least_squares_min_norm,
    norm,
    null_space_basis,
    spectral_norm,
)

DEFAULT_NONEXP_TOL = 1e-8
DEFAULT_AFFINE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LinearOperator:
    matrix: np.ndarray
    fix_basis: OrthonormalBasis
    nonexpansive_certificate: float
    rank_tol: float = DEFAULT_RANK_TOL

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def linear_part(self) -> "LinearOperator":
        return self

    @property
    def anchor(self) -> np.ndarray:
        return np.zeros(self.dim)

    def __call__(self, x):
        return self.matrix @ x

    def apply(self, x) -> np.ndarray:
        x = as_vector(x)
        check_dim(x, self.dim)
        return self.matrix @ x

    def project_fix(self, x) -> np.ndarray:
        return project_fix(self, x)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "rows": self.matrix.tolist()}


@dataclass(frozen=True, eq=False)
class AffineOperator:
    linear_part: LinearOperator
    offset: np.ndarray
    anchor: np.ndarray

    @property
    def dim(self) -> int:
        return self.linear_part.dim

    @property
    def matrix(self) -> np.ndarray:
        return self.linear_part.matrix

    def __call__(self, x):
        return self.linear_part.matrix @ x + self.offset

    def apply(self, x) -> np.ndarray:
        return affine_apply(self, x)

    def project_fix(self, x) -> np.ndarray:
        return project_fix_affine(self, x)

    def to_dict(self) -> dict:
        d = self.linear_part.to_dict()
        d["offset"] = self.offset.tolist()
        return d


def make_linear(
    matrix, nonexp_tol: float = DEFAULT_NONEXP_TOL, rank_tol: float = DEFAULT_RANK_TOL
) -> LinearOperator:
    """Certify ``matrix`` as nonexpansive and cache its fixed-point basis.

    Raises
    ------
    NonSquare
        If ``matrix`` is not square.
    ExpansiveOperator
        If its spectral norm exceeds ``1 + nonexp_tol``.
    """
    if nonexp_tol <= 0 or rank_tol <= 0:
        raise UsageError("tolerances must be positive")
    R = np.array(as_matrix(matrix, square=True))
    snorm = spectral_norm(R)
    if snorm > 1.0 + nonexp_tol:
        raise ExpansiveOperator(snorm, nonexp_tol)
    R.setflags(write=False)
    fix = null_space_basis(np.eye(R.shape[0]) - R, rank_tol)
    return LinearOperator(R, fix, snorm, rank_tol)


def relax_apply(R: LinearOperator, lam: float, x) -> np.ndarray:
    """Evaluate T_lam x = (1 - lam) x + lam R x. Any real ``lam`` is accepted."""
    x = as_vector(x)
    check_dim(x, R.dim)
    if lam == 0:
        return x.copy()
    Rx = R.matrix @ x
    if lam == 1:
        return Rx
    return (1.0 - lam) * x + lam * Rx


def make_affine(R: LinearOperator, b, tol: float = DEFAULT_AFFINE_TOL) -> AffineOperator:
    """Build x -> Rx + b, solving (Id - R) a = b for the minimum-norm anchor a.

    Raises :class:`EmptyFixedSet` when b is not in the range of Id - R.
    """
    b = np.array(as_vector(b, "offset"))
    check_dim(b, R.dim, "offset")
    M = np.eye(R.dim) - R.matrix
    a, res = least_squares_min_norm(M, b, R.rank_tol)
    if res > tol * (1.0 + norm(b)):
        raise EmptyFixedSet(res)
    b.setflags(write=False)
    a.setflags(write=False)
    return AffineOperator(R, b, a)


def affine_apply(S: AffineOperator, x) -> np.ndarray:
    x = as_vector(x)
    check_dim(x, S.dim)
    return S.linear_part.matrix @ x + S.offset


def affine_relax_apply(S: AffineOperator, lam: float, x) -> np.ndarray:
    x = as_vector(x)
    check_dim(x, S.dim)
    if lam == 0:
        return x.copy()
    Sx = S.linear_part.matrix @ x + S.offset
    if lam == 1:
        return Sx
    return (1.0 - lam) * x + lam * Sx


def project_fix(R: LinearOperator, x) -> np.ndarray:
    """Orthogonal projection of ``x`` onto Fix R."""
    x = as_vector(x)
    check_dim(x, R.dim)
    return R.fix_basis.project(x)


def project_fix_affine(S: AffineOperator, x) -> np.ndarray:
    x = as_vector(x)
    check_dim(x, S.dim)
    return S.anchor + S.linear_part.fix_basis.project(x - S.anchor)


def averaged_transform(R: LinearOperator, kappa: float) -> LinearOperator:
    """Return N = (R - (1 - kappa) Id) / kappa, re-certified nonexpansive.

    If R is kappa-averaged then N is nonexpansive with Fix N = Fix R, and
    relaxing N by lam equals relaxing R by lam / kappa. A kappa below the
    modulus of averagedness of R makes N expansive and raises
    :class:`ExpansiveOperator`.
    """
    if not 0 < kappa <= 1:
        raise UsageError(f"kappa must lie in ]0, 1], got {kappa}")
    N = (R.matrix - (1.0 - kappa) * np.eye(R.dim)) / kappa
    return make_linear(N, rank_tol=R.rank_tol)


def operator_from_dict(doc: dict, nonexp_tol=DEFAULT_NONEXP_TOL, rank_tol=DEFAULT_RANK_TOL):
    """Parse the operator JSON schema ``{"dim", "rows", "offset"?}``."""
    if not isinstance(doc, dict):
        raise ValidationError("operator document must be a JSON object")
    if "rows" not in doc:
        raise ValidationError("missing", "rows")
    try:
        rows = as_matrix(doc["rows"], "rows", square=True)
    except UsageError as exc:
        raise ValidationError(str(exc), "rows") from exc
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"not a numeric matrix ({exc})", "rows") from exc
    if "dim" in doc and doc["dim"] != rows.shape[0]:
        raise ValidationError(f"{doc['dim']!r} does not match rows ({rows.shape[0]})", "dim")
    R = make_linear(rows, nonexp_tol, rank_tol)
    offset = doc.get("offset")
    if offset is None:
        return R
    try:
        b = as_vector(offset, "offset")
        check_dim(b, R.dim, "offset")
    except UsageError as exc:
        raise ValidationError(str(exc), "offset") from exc
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"not a numeric vector ({exc})", "offset") from exc
    return make_affine(R, b)
