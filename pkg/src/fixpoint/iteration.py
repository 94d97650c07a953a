"""Krasnosel'skii-Mann driver: x_{n+1} = (1 - lam_n) x_n + lam_n Op(x_n)."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AtFixedPoint, MissingHistory, UsageError
from .numkernel import as_vector, check_dim
from .schedules import DEFAULT_RESIDUAL_TOL, Adaptive, at_fixed_point, next_lambda

DEFAULT_MAX_ITER = 1_000_000
DEFAULT_TRAJECTORY_CAP = 10_000


class Termination(str, enum.Enum):
    NORM_REACHED = "NormReached"
    RESIDUAL_REACHED = "ResidualReached"
    TARGET_REACHED = "TargetReached"
    AT_FIXED_POINT = "AtFixedPoint"
    MAX_ITER_EXCEEDED = "MaxIterExceeded"


@dataclass(frozen=True)
class StoppingRule:
    """When to stop. At least one of the optional criteria must be set."""

    max_iter: int = DEFAULT_MAX_ITER
    norm_threshold: Optional[float] = None
    residual_threshold: Optional[float] = None
    target: Optional[tuple] = None  # (point, tol)

    def __post_init__(self):
        if self.max_iter < 1:
            raise UsageError("max_iter must be >= 1")
        if self.norm_threshold is None and self.residual_threshold is None and self.target is None:
            raise UsageError("at least one stopping criterion is required")
        for name in ("norm_threshold", "residual_threshold"):
            t = getattr(self, name)
            if t is not None and not t > 0:
                raise UsageError(f"{name} must be positive")
        if self.target is not None:
            point, tol = self.target
            if not tol > 0:
                raise UsageError("target tolerance must be positive")
            object.__setattr__(self, "target", (as_vector(point, "target"), float(tol)))


@dataclass
class RunResult:
    final_point: np.ndarray
    iterations: int
    termination: Termination
    lambda_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    distance_history: Optional[list] = None
    monitor: Optional[np.ndarray] = None
    trajectory: Optional[list] = None

    @property
    def converged(self) -> bool:
        return self.termination is not Termination.MAX_ITER_EXCEEDED

    def to_dict(self, verbose=False) -> dict:
        d = {
            "final_point": self.final_point.tolist(),
            "iterations": self.iterations,
            "termination": self.termination.value,
        }
        if verbose:
            d["lambda_history"] = list(self.lambda_history)
            d["residual_history"] = list(self.residual_history)
            if self.distance_history is not None:
                d["distance_history"] = list(self.distance_history)
        return d


def residual(op, x) -> float:
    """||x - Op(x)||."""
    x = as_vector(x)
    check_dim(x, op.dim)
    return float(np.linalg.norm(x - op(x)))


def km_run(
    op,
    schedule,
    x0,
    stop: StoppingRule,
    monitor=None,
    record_trajectory: bool = False,
    trajectory_cap: int = DEFAULT_TRAJECTORY_CAP,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
) -> RunResult:
    """Run the relaxed fixed-point iteration of ``op`` from ``x0``.

    ``op`` is a :class:`~fixpoint.operators.LinearOperator` or
    :class:`~fixpoint.operators.AffineOperator`. Criteria are checked at x0
    and after every update, in the order AtFixedPoint (adaptive schedules
    only), target, norm, residual; ``iterations`` counts the updates made.
    Hitting ``stop.max_iter`` is a termination reason, not an error.

    With ``monitor`` set, ``distance_history[n] = ||x_n - monitor||``.
    """
    x = as_vector(x0, "x0").copy()
    check_dim(x, op.dim, "x0")
    if monitor is not None:
        monitor = as_vector(monitor, "monitor")
        check_dim(monitor, op.dim, "monitor")
    if stop.target is not None:
        check_dim(stop.target[0], op.dim, "target")

    anchor = op.anchor
    shifted = bool(np.any(anchor))
    adaptive = isinstance(schedule, Adaptive)
    target = stop.target
    norm_thr = stop.norm_threshold
    res_thr = stop.residual_threshold

    lambdas = []
    residuals = []
    distances = [] if monitor is not None else None
    trajectory = [] if record_trajectory else None

    def record(x, Ox):
        r = float(np.linalg.norm(x - Ox))
        residuals.append(r)
        if distances is not None:
            distances.append(float(np.linalg.norm(x - monitor)))
        if trajectory is not None and len(trajectory) < trajectory_cap:
            trajectory.append(x.copy())
        return r

    def check(x, Ox, r):
        if adaptive:
            xc, Oxc = (x - anchor, Ox - anchor) if shifted else (x, Ox)
            if at_fixed_point(xc, Oxc, residual_tol):
                return Termination.AT_FIXED_POINT
        if target is not None and np.linalg.norm(x - target[0]) < target[1]:
            return Termination.TARGET_REACHED
        if norm_thr is not None and np.linalg.norm(x) < norm_thr:
            return Termination.NORM_REACHED
        if res_thr is not None and r < res_thr:
            return Termination.RESIDUAL_REACHED
        return None

    Ox = op(x)
    reason = check(x, Ox, record(x, Ox))
    n = 0
    while reason is None:
        if n >= stop.max_iter:
            reason = Termination.MAX_ITER_EXCEEDED
            break
        # the adaptive rule sees the linear part: x - a and S x - a = R(x - a)
        xc, Oxc = (x - anchor, Ox - anchor) if adaptive and shifted else (x, Ox)
        try:
            lam = next_lambda(schedule, n, xc, Oxc, residual_tol)
        except AtFixedPoint:
            reason = Termination.AT_FIXED_POINT
            break
        x = (1.0 - lam) * x + lam * Ox
        lambdas.append(lam)
        n += 1
        Ox = op(x)
        reason = check(x, Ox, record(x, Ox))

    return RunResult(
        final_point=x,
        iterations=n,
        termination=reason,
        lambda_history=lambdas,
        residual_history=residuals,
        distance_history=distances,
        monitor=monitor,
        trajectory=trajectory,
    )


def fejer_check(result: RunResult, y=None, tol: float = 1e-10) -> bool:
    """True iff the recorded distances to ``y`` never grow by more than ``tol``.

    ``y`` defaults to the monitor the run was recorded with; it must be a
    fixed point, which the caller is responsible for.
    """
    if result.distance_history is None:
        raise MissingHistory("run was not recorded with a monitor point")
    if y is not None and not np.allclose(as_vector(y, "y"), result.monitor, rtol=0, atol=1e-14):
        raise MissingHistory("distances were recorded for a different monitor point")
    d = np.asarray(result.distance_history)
    return bool(np.all(np.diff(d) <= tol))
