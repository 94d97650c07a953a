"""scikit-learn style wrappers.

Rows of ``X`` are starting points. ``fit`` certifies the operator, and
``transform`` maps each start to the fixed point it converges to, either by
running the relaxed iteration (:class:`KrasnoselskiiMann`) or by projecting
directly onto the fixed-point set (:class:`FixedSetProjector`). The two
agree on banded schedules, so either one can go in a
:class:`sklearn.pipeline.Pipeline`.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import analysis
from .errors import UsageError
from .iteration import StoppingRule, Termination, km_run
from .numkernel import DEFAULT_RANK_TOL
from .operators import (
    DEFAULT_NONEXP_TOL,
    AffineOperator,
    LinearOperator,
    make_affine,
    make_linear,
    operator_from_dict,
)
from .schedules import Adaptive, Constant, schedule_from_dict


def _build_operator(operator, offset, nonexp_tol, rank_tol):
    if isinstance(operator, (LinearOperator, AffineOperator)):
        op = operator
    elif isinstance(operator, dict):
        op = operator_from_dict(operator, nonexp_tol, rank_tol)
    else:
        op = make_linear(check_array(operator), nonexp_tol, rank_tol)
    if offset is not None:
        if isinstance(op, AffineOperator):
            raise UsageError("offset given twice")
        op = make_affine(op, offset)
    return op


def _build_schedule(schedule, epsilon):
    if schedule == "adaptive":
        return Adaptive(epsilon)
    if isinstance(schedule, dict):
        return schedule_from_dict(schedule)
    if isinstance(schedule, (int, float)):
        return Constant(float(schedule))
    return schedule


class _OperatorMixin:
    def _fit_operator(self, X):
        self.operator_ = _build_operator(self.operator, self.offset, self.nonexp_tol, self.rank_tol)
        self.n_features_in_ = self.operator_.dim
        if X is not None:
            self._check_X(X)
        return self

    def _check_X(self, X):
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but the operator acts on {self.n_features_in_}"
            )
        return X


class FixedSetProjector(_OperatorMixin, TransformerMixin, BaseEstimator):
    """Project rows of X onto the fixed-point set of a nonexpansive (affine) map."""

    def __init__(self, operator=None, offset=None, nonexp_tol=DEFAULT_NONEXP_TOL, rank_tol=DEFAULT_RANK_TOL):
        self.operator = operator
        self.offset = offset
        self.nonexp_tol = nonexp_tol
        self.rank_tol = rank_tol

    def fit(self, X=None, y=None):
        return self._fit_operator(X)

    def transform(self, X):
        check_is_fitted(self, "operator_")
        X = self._check_X(X)
        return np.array([self.operator_.project_fix(x) for x in X])


class KrasnoselskiiMann(_OperatorMixin, TransformerMixin, BaseEstimator):
    """Relaxed fixed-point iteration x <- (1 - lam_n) x + lam_n Op(x) per row of X.

    Parameters
    ----------
    operator : array-like of shape (d, d), dict, LinearOperator or AffineOperator
        The nonexpansive map, or its JSON document form.
    offset : array-like of shape (d,), optional
        Makes the map affine, x -> Rx + offset.
    schedule : "adaptive", float, dict or schedule object
        A float is a constant relaxation; "adaptive" uses ``epsilon``.
    epsilon : float
        Clip for the adaptive rule.
    stop_residual, stop_norm : float, optional
        Stop once ||x - Op x|| (resp. ||x||) drops below the value.
    max_iter : int

    Attributes
    ----------
    operator_ : certified operator
    n_iter_ : ndarray of shape (n_samples,)
        Iterations used by the last :meth:`transform`.
    terminations_ : list of Termination
    """

    def __init__(
        self,
        operator=None,
        offset=None,
        schedule="adaptive",
        epsilon=0.01,
        stop_residual=1e-10,
        stop_norm=None,
        max_iter=1_000_000,
        nonexp_tol=DEFAULT_NONEXP_TOL,
        rank_tol=DEFAULT_RANK_TOL,
    ):
        self.operator = operator
        self.offset = offset
        self.schedule = schedule
        self.epsilon = epsilon
        self.stop_residual = stop_residual
        self.stop_norm = stop_norm
        self.max_iter = max_iter
        self.nonexp_tol = nonexp_tol
        self.rank_tol = rank_tol

    def fit(self, X=None, y=None):
        self._fit_operator(X)
        self.schedule_ = _build_schedule(self.schedule, self.epsilon)
        return self

    def transform(self, X):
        check_is_fitted(self, "operator_")
        X = self._check_X(X)
        stop = StoppingRule(
            max_iter=self.max_iter,
            norm_threshold=self.stop_norm,
            residual_threshold=self.stop_residual,
        )
        out = np.empty_like(X)
        n_iter = np.empty(X.shape[0], dtype=np.int64)
        reasons = []
        for i, x0 in enumerate(X):
            res = km_run(self.operator_, self.schedule_, x0, stop)
            out[i] = res.final_point
            n_iter[i] = res.iterations
            reasons.append(res.termination)
        self.n_iter_ = n_iter
        self.terminations_ = reasons
        return out

    def converged(self) -> bool:
        check_is_fitted(self, "terminations_")
        return all(t is not Termination.MAX_ITER_EXCEEDED for t in self.terminations_)

    def averagedness(self, **kwargs) -> analysis.AveragednessReport:
        check_is_fitted(self, "operator_")
        return analysis.lambda_bar(self.operator_.linear_part, **kwargs)
