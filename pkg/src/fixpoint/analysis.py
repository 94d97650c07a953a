"""Diagnostics for linear nonexpansive operators.

Covers the quadratic profile lam -> ||T_lam x||^2, the infimal optimal
relaxation lambda_bar = inf <x, x - Rx> / ||x - Rx||^2 over non-fixed x, the
modulus of averagedness kappa = 1 / (2 lambda_bar), and numerical checks of
the commutation and product-domination properties of relaxations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import IdentityOperator, UsageError, YNotFixed
from .numkernel import as_vector, check_dim
from .operators import LinearOperator, relax_apply
from .schedules import DEFAULT_RESIDUAL_TOL, lambda_opt

EIGEN_EXACT_MAX_DIM = 64
DEFAULT_SAMPLE_COUNT = 100_000


class Method(str, enum.Enum):
    EIGEN_EXACT = "eigen_exact"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class NormProfile:
    lambdas: np.ndarray
    values: np.ndarray
    minimizer: float
    min_value: float


@dataclass(frozen=True)
class AveragednessReport:
    lambda_bar: float
    kappa: float
    method: Method
    sample_count: Optional[int] = None

    def to_dict(self) -> dict:
        d = {"lambda_bar": self.lambda_bar, "kappa": self.kappa, "method": self.method.value}
        if self.method is Method.SAMPLED:
            d["sample_count"] = self.sample_count
        return d


def norm_profile(R: LinearOperator, x, grid=None, residual_tol=DEFAULT_RESIDUAL_TOL) -> NormProfile:
    """Sample f(lam) = ||T_lam x||^2 on ``grid`` (default: 101 points on [0, 2 lambda_x])."""
    x = as_vector(x)
    check_dim(x, R.dim)
    Rx = R.matrix @ x
    lam_x = lambda_opt(x, Rx, residual_tol)
    grid = np.linspace(0.0, 2.0 * lam_x, 101) if grid is None else np.asarray(grid, dtype=float)
    d = Rx - x
    # T_lam x = x + lam (Rx - x) for every grid point at once
    pts = x[None, :] + grid[:, None] * d[None, :]
    values = np.einsum("ij,ij->i", pts, pts)
    dd = float(d @ d)
    min_value = float(x @ x) - float(x @ d) ** 2 / dd
    return NormProfile(grid, values, lam_x, min_value)


def _nonfixed_complement(R: LinearOperator):
    Q = R.fix_basis.complement().vectors.T  # d x m
    if Q.shape[1] == 0:
        raise IdentityOperator("R is the identity; every point is fixed")
    M = np.eye(R.dim) - R.matrix
    MQ = M @ Q
    if np.linalg.norm(MQ, 2) <= R.rank_tol * (1.0 + np.linalg.norm(M, 2)):
        raise IdentityOperator("Id - R vanishes to rank tolerance")
    return M, Q, MQ


def _lambda_bar_exact(R: LinearOperator) -> float:
    M, Q, MQ = _nonfixed_complement(R)
    Ms = 0.5 * (M + M.T)
    A = Q.T @ Ms @ Q
    B = MQ.T @ MQ
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)
    w = scipy.linalg.eigh(A, B, eigvals_only=True, subset_by_index=[0, 0])
    return float(w[0])


def _lambda_bar_sampled(R: LinearOperator, sample_count: int, seed: int) -> float:
    M, Q, _ = _nonfixed_complement(R)
    rng = np.random.default_rng(seed)
    best = np.inf
    cutoff = R.rank_tol * (1.0 + np.linalg.norm(M, 2))
    for start in range(0, sample_count, 8192):
        k = min(8192, sample_count - start)
        # random unit vectors, projected off Fix R by drawing in its complement
        Z = rng.standard_normal((k, Q.shape[1])) @ Q.T
        Z /= np.linalg.norm(Z, axis=1, keepdims=True)
        D = Z @ M.T
        dd = np.einsum("ij,ij->i", D, D)
        keep = np.sqrt(dd) > cutoff
        if np.any(keep):
            vals = np.einsum("ij,ij->i", Z[keep], D[keep]) / dd[keep]
            best = min(best, float(vals.min()))
    return best


def lambda_bar(
    R: LinearOperator,
    method=None,
    sample_count: int = DEFAULT_SAMPLE_COUNT,
    seed: int = 0,
) -> AveragednessReport:
    """Infimal optimal relaxation of ``R`` and its modulus of averagedness.

    ``method="eigen_exact"`` solves the generalized symmetric eigenproblem
    (sym(M), M^T M) on the orthogonal complement of Fix R, M = Id - R.
    ``method="sampled"`` minimizes lambda_x over random directions and so
    returns an upper bound. The default picks the exact method up to
    dimension 64.

    Raises :class:`IdentityOperator` when R is the identity.
    """
    if method is None:
        method = Method.EIGEN_EXACT if R.dim <= EIGEN_EXACT_MAX_DIM else Method.SAMPLED
    method = Method(method)
    if method is Method.EIGEN_EXACT:
        lb = _lambda_bar_exact(R)
        return AveragednessReport(lb, 1.0 / (2.0 * lb), method)
    if sample_count < 1:
        raise UsageError("sample_count must be >= 1")
    lb = _lambda_bar_sampled(R, sample_count, seed)
    return AveragednessReport(lb, 1.0 / (2.0 * lb), method, sample_count)


def is_averaged(report: AveragednessReport, tol: float = 1e-8) -> bool:
    return report.lambda_bar > 0.5 + tol


def commutation_defect(R: LinearOperator, lam: float, mu: float, x) -> float:
    """||T_lam T_mu x - T_mu T_lam x||, zero up to roundoff for linear R."""
    a = relax_apply(R, lam, relax_apply(R, mu, x))
    b = relax_apply(R, mu, relax_apply(R, lam, x))
    return float(np.linalg.norm(a - b))


def product_domination_check(R: LinearOperator, lambdas, mus, x0, y, tol: float = 1e-10) -> bool:
    """Compare ||T_{lam_n}...T_{lam_0} x0 - y|| with the same product over ``mus``.

    The caller guarantees ||T_{lam_n} .|| <= ||T_{mu_n} .|| for each n, e.g.
    mu_n = eps with lam_n in [eps, 2 lambda_bar - eps]. Returns whether the
    inequality holds at the final index within ``tol``.
    """
    y = as_vector(y, "y")
    check_dim(y, R.dim, "y")
    if np.linalg.norm(y - R.matrix @ y) > 1e-8 * (1.0 + np.linalg.norm(y)):
        raise YNotFixed("y is not a fixed point of R")
    if len(lambdas) != len(mus):
        raise UsageError("lambdas and mus must have equal length")
    u = as_vector(x0, "x0")
    v = u
    for lam, mu in zip(lambdas, mus):
        u = relax_apply(R, lam, u)
        v = relax_apply(R, mu, v)
    return bool(np.linalg.norm(u - y) <= np.linalg.norm(v - y) + tol)
