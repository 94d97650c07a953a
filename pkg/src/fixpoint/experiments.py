"""Constant-relaxation sweeps against the adaptive rule over seeded random starts.

Every trial's start depends only on ``(seed, trial)``, so the constant runs
and the adaptive runs are paired by trial index and reports are
reproducible byte for byte.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ValidationError
from .iteration import DEFAULT_MAX_ITER, StoppingRule, km_run
from .operators import AffineOperator, LinearOperator
from .schedules import Adaptive

_SEED_MOD = 2**64


class StartDistribution(str, enum.Enum):
    UNIT_SPHERE = "unit_sphere"
    UNIT_BALL = "unit_ball"
    GAUSSIAN = "gaussian"


def default_grid(epsilon_clip: float, num: int = 101) -> np.ndarray:
    return np.linspace(epsilon_clip, 1.0 - epsilon_clip, num)


@dataclass
class ExperimentConfig:
    operator: object
    num_trials: int = 100
    seed: int = 0
    stop_threshold: float = 1e-6
    epsilon_clip: float = 1e-6
    lambda_grid: Optional[np.ndarray] = None
    max_iter: int = DEFAULT_MAX_ITER
    start_distribution: StartDistribution = StartDistribution.UNIT_SPHERE

    def __post_init__(self):
        if not isinstance(self.operator, (LinearOperator, AffineOperator)):
            raise ValidationError("must be a LinearOperator or AffineOperator", "operator")
        if self.num_trials < 1:
            raise ValidationError("must be >= 1", "num_trials")
        if not self.stop_threshold > 0:
            raise ValidationError("must be positive", "stop_threshold")
        if not 0 < self.epsilon_clip <= 0.5:
            raise ValidationError("must lie in ]0, 1/2]", "epsilon_clip")
        if self.max_iter < 1:
            raise ValidationError("must be >= 1", "max_iter")
        if self.lambda_grid is None:
            self.lambda_grid = default_grid(self.epsilon_clip)
        grid = np.asarray(self.lambda_grid, dtype=float).ravel()
        if grid.size == 0 or np.any(grid <= 0) or np.any(grid >= 1):
            raise ValidationError("values must lie strictly inside ]0, 1[", "lambda_grid")
        self.lambda_grid = grid
        self.start_distribution = StartDistribution(self.start_distribution)

    @property
    def uses_norm_criterion(self) -> bool:
        # ||x_n|| < threshold only makes sense when the limit is always 0
        return isinstance(self.operator, LinearOperator) and self.operator.fix_basis.is_empty

    def to_dict(self) -> dict:
        return {
            "operator": self.operator.to_dict(),
            "num_trials": self.num_trials,
            "seed": self.seed,
            "stop_threshold": self.stop_threshold,
            "epsilon_clip": self.epsilon_clip,
            "lambda_grid": self.lambda_grid.tolist(),
            "max_iter": self.max_iter,
            "start_distribution": self.start_distribution.value,
        }


@dataclass
class TrialStats:
    counts: np.ndarray
    converged: np.ndarray
    lam: Optional[float] = None

    @property
    def median(self) -> float:
        return float(np.median(self.counts))

    @property
    def mean(self) -> float:
        return float(np.mean(self.counts))

    @property
    def max(self) -> int:
        return int(np.max(self.counts))

    @property
    def failures(self) -> int:
        return int(np.count_nonzero(~self.converged))

    def to_dict(self) -> dict:
        d = {} if self.lam is None else {"lambda": self.lam}
        d.update(
            iteration_counts=self.counts.tolist(),
            median=self.median,
            mean=self.mean,
            max=self.max,
            failures=self.failures,
        )
        return d


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    per_lambda: list = field(default_factory=list)
    abbr: Optional[TrialStats] = None

    @property
    def lambda_opt_empirical(self) -> Optional[float]:
        """Grid point with the smallest median count; ties go to the smaller mean, then smaller lambda."""
        if not self.per_lambda:
            return None
        best = min(self.per_lambda, key=lambda s: (s.median, s.mean, s.lam))
        return best.lam

    def to_dict(self) -> dict:
        return {
            "per_lambda": [s.to_dict() for s in self.per_lambda],
            "abbr": None if self.abbr is None else self.abbr.to_dict(),
            "lambda_opt_empirical": self.lambda_opt_empirical,
            "config_echo": self.config.to_dict(),
        }

    def summary(self) -> dict:
        d = {"lambda_opt_empirical": self.lambda_opt_empirical}
        if self.per_lambda:
            best = min(self.per_lambda, key=lambda s: (s.median, s.mean, s.lam))
            d["bbr_best_median"] = best.median
            d["bbr_right_endpoint_median"] = self.per_lambda[-1].median
        if self.abbr is not None:
            d["abbr_median"] = self.abbr.median
        return d


def random_start(seed: int, trial: int, dim: int, distribution=StartDistribution.UNIT_SPHERE) -> np.ndarray:
    """Deterministic nonzero start for ``(seed, trial)``."""
    if dim < 1:
        raise ValidationError("must be >= 1", "dim")
    distribution = StartDistribution(distribution)
    rng = np.random.default_rng([seed % _SEED_MOD, trial])
    while True:
        g = rng.standard_normal(dim)
        gn = np.linalg.norm(g)
        if distribution is StartDistribution.GAUSSIAN:
            v = g
        elif gn == 0:
            continue
        elif distribution is StartDistribution.UNIT_SPHERE:
            v = g / gn
        else:
            v = g / gn * rng.uniform() ** (1.0 / dim)
        if np.linalg.norm(v) >= 1e-6:
            return v


def _starts(config: ExperimentConfig) -> list:
    return [
        random_start(config.seed, t, config.operator.dim, config.start_distribution)
        for t in range(config.num_trials)
    ]


def _powers(T: np.ndarray, k: int) -> np.ndarray:
    P = np.empty((k,) + T.shape)
    P[0] = T
    for i in range(1, k):
        P[i] = T @ P[i - 1]
    return P


def constant_counts(R: np.ndarray, lam: float, W0: np.ndarray, threshold: float, max_iter: int):
    """First n with ||T_lam^n w|| < threshold for each row w of ``W0``.

    Advances all trials together in chunks of k steps using the stacked
    powers T_lam, ..., T_lam^k, so the Python loop runs max_iter / k times.
    Returns ``(counts, converged, finals)``; unconverged rows report
    ``max_iter`` and the iterate reached there.
    """
    t, d = W0.shape
    T = (1.0 - lam) * np.eye(d) + lam * R
    k = int(max(8, min(256, 2**20 // (d * d))))
    P = _powers(T, k)
    counts = np.full(t, max_iter, dtype=np.int64)
    converged = np.zeros(t, dtype=bool)
    finals = W0.copy()

    hit0 = np.linalg.norm(W0, axis=1) < threshold
    counts[hit0] = 0
    converged[hit0] = True
    active = np.flatnonzero(~hit0)
    W = W0[active]
    base = 0
    while active.size and base < max_iter:
        span = min(k, max_iter - base)
        Y = np.matmul(P[:span], W.T).transpose(2, 0, 1)  # (trial, step, dim)
        hit = np.sqrt(np.einsum("tki,tki->tk", Y, Y)) < threshold
        any_hit = hit.any(axis=1)
        first = hit.argmax(axis=1)
        done = active[any_hit]
        counts[done] = base + first[any_hit] + 1
        converged[done] = True
        finals[done] = Y[any_hit, first[any_hit]]
        W = Y[~any_hit, span - 1]
        active = active[~any_hit]
        base += span
    finals[active] = W
    return counts, converged, finals


def run_bbr_sweep(config: ExperimentConfig, starts=None) -> list:
    """Constant-relaxation iteration counts for every grid lambda and trial."""
    op = config.operator
    R = op.linear_part
    starts = _starts(config) if starts is None else starts
    X0 = np.array(starts)
    # shifted coordinates: with z = x - a and p its limit, T_lam acts on z - p
    Z0 = X0 - op.anchor
    if not config.uses_norm_criterion:
        Z0 = Z0 - Z0 @ R.fix_basis.vectors.T @ R.fix_basis.vectors
    out = []
    for lam in config.lambda_grid:
        counts, conv, _ = constant_counts(R.matrix, float(lam), Z0, config.stop_threshold, config.max_iter)
        out.append(TrialStats(counts, conv, float(lam)))
    return out


def _stop_rule(config: ExperimentConfig, x0: np.ndarray) -> StoppingRule:
    if config.uses_norm_criterion:
        return StoppingRule(max_iter=config.max_iter, norm_threshold=config.stop_threshold)
    return StoppingRule(
        max_iter=config.max_iter, target=(config.operator.project_fix(x0), config.stop_threshold)
    )


def run_abbr(config: ExperimentConfig, starts=None) -> TrialStats:
    """Adaptive-relaxation iteration counts, one km_run per trial."""
    starts = _starts(config) if starts is None else starts
    schedule = Adaptive(config.epsilon_clip)
    counts = np.empty(len(starts), dtype=np.int64)
    conv = np.empty(len(starts), dtype=bool)
    for i, x0 in enumerate(starts):
        res = km_run(config.operator, schedule, x0, _stop_rule(config, x0))
        counts[i] = res.iterations
        conv[i] = res.converged
    return TrialStats(counts, conv)


def run_experiment(config: ExperimentConfig, sweep=True, abbr=True) -> ExperimentReport:
    starts = _starts(config)
    report = ExperimentReport(config)
    if sweep:
        report.per_lambda = run_bbr_sweep(config, starts)
    if abbr:
        report.abbr = run_abbr(config, starts)
    return report


def _format_lambda(lam: float) -> str:
    return np.format_float_positional(lam, trim="-")


def _rows(report: ExperimentReport):
    for s in report.per_lambda:
        lam = _format_lambda(s.lam)
        for trial, (c, ok) in enumerate(zip(s.counts, s.converged)):
            yield ["bbr", lam, trial, int(c), "true" if ok else "false"]
    if report.abbr is not None:
        for trial, (c, ok) in enumerate(zip(report.abbr.counts, report.abbr.converged)):
            yield ["abbr", "", trial, int(c), "true" if ok else "false"]


def emit_csv(report: ExperimentReport, destination) -> None:
    """Write ``kind,lambda,trial,iterations,converged`` rows (UTF-8, LF)."""
    if not report.per_lambda and report.abbr is None:
        raise ValidationError("report is empty")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["kind", "lambda", "trial", "iterations", "converged"])
    writer.writerows(_rows(report))
    text = buf.getvalue()
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        destination.write(text)


def emit_plot(report: ExperimentReport, destination) -> None:
    """Median constant-relaxation count against lambda, adaptive median as a line, as SVG."""
    if not report.per_lambda:
        raise ValidationError("report has no sweep results to plot")
    import matplotlib
    from matplotlib.figure import Figure

    lams = [s.lam for s in report.per_lambda]
    meds = [s.median for s in report.per_lambda]
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    ax.plot(lams, meds, marker=".", lw=1, label="BBR (constant $\\lambda$), median")
    if report.abbr is not None:
        ax.axhline(report.abbr.median, color="C3", ls="--", label="aBBR, median")
    ax.set_yscale("log")
    ax.set_xlabel("$\\lambda$")
    ax.set_ylabel(f"iterations to reach stop threshold {report.config.stop_threshold:g}")
    ax.legend()
    fig.tight_layout()
    with matplotlib.rc_context({"svg.hashsalt": "fixpoint"}):
        fig.savefig(destination, format="svg", metadata={"Date": None})


def report_to_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2)
