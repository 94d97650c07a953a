"""Relaxation schedules: where each lambda_n of the iteration comes from."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import AtFixedPoint, BandViolation, UsageError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_RESIDUAL_TOL = 1e-12
_BLOCK = 1024


@dataclass(frozen=True)
class Constant:
    lam: float

    @property
    def band(self):
        return (self.lam, self.lam)


@dataclass(frozen=True)
class Explicit:
    values: tuple = field(default=())
    fallback: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def band(self):
        vals = self.values + (self.fallback,)
        return (min(vals), max(vals))


@dataclass(frozen=True)
class BandedRandom:
    """Uniform draws from [epsilon, 1 - epsilon], reproducible per (seed, n)."""

    epsilon: float
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.epsilon <= 0.5:
            raise UsageError(f"epsilon must lie in ]0, 1/2], got {self.epsilon}")

    @property
    def band(self):
        return (self.epsilon, 1.0 - self.epsilon)


@dataclass(frozen=True)
class Adaptive:
    """Optimal relaxation min(lambda_x, 1 - epsilon) at the current iterate."""

    epsilon: float

    def __post_init__(self):
        if not 0 < self.epsilon <= 0.5:
            raise UsageError(f"epsilon must lie in ]0, 1/2], got {self.epsilon}")

    @property
    def band(self):
        return (0.5, 1.0 - self.epsilon)


RelaxationSchedule = Union[Constant, Explicit, BandedRandom, Adaptive]


def at_fixed_point(x: np.ndarray, Rx: np.ndarray, residual_tol=DEFAULT_RESIDUAL_TOL) -> bool:
    return np.linalg.norm(x - Rx) <= residual_tol * (1.0 + np.linalg.norm(x))


def lambda_opt(x: np.ndarray, Rx: np.ndarray, residual_tol: float = DEFAULT_RESIDUAL_TOL) -> float:
    """Minimizer over lam of ||T_lam x||^2, i.e. <x, x - Rx> / ||x - Rx||^2.

    For nonexpansive linear R this is at least 1/2. Raises
    :class:`AtFixedPoint` when x - Rx vanishes numerically.
    """
    d = x - Rx
    dd = float(d @ d)
    if np.sqrt(dd) <= residual_tol * (1.0 + np.linalg.norm(x)):
        raise AtFixedPoint("x is a fixed point to working tolerance; lambda_x is undefined")
    return float(x @ d) / dd


@lru_cache(maxsize=64)
def _banded_block(seed: int, block: int, epsilon: float) -> np.ndarray:
    rng = np.random.default_rng([seed, block])
    out = rng.uniform(epsilon, 1.0 - epsilon, size=_BLOCK)
    out.setflags(write=False)
    return out


def next_lambda(schedule, n: int, x=None, Rx=None, residual_tol=DEFAULT_RESIDUAL_TOL) -> float:
    """Relaxation parameter for step ``n``.

    ``x`` and ``Rx`` are only read by :class:`Adaptive`; for affine maps the
    caller passes the iterate and its image shifted by the anchor.
    """
    if isinstance(schedule, Constant):
        return schedule.lam
    if isinstance(schedule, Explicit):
        return schedule.values[n] if n < len(schedule.values) else schedule.fallback
    if isinstance(schedule, BandedRandom):
        return float(_banded_block(schedule.seed % 2**64, n // _BLOCK, schedule.epsilon)[n % _BLOCK])
    if isinstance(schedule, Adaptive):
        eps = schedule.epsilon
        lam = min(lambda_opt(x, Rx, residual_tol), 1.0 - eps)
        if lam < eps:
            logger.info("adaptive step %d: lambda_x=%.17g clamped up to epsilon", n, lam)
            lam = eps
        return lam
    raise UsageError(f"unknown schedule {schedule!r}")


def validate_band(schedule) -> float:
    """Largest epsilon with every emitted value in [epsilon, 1 - epsilon].

    Raises :class:`BandViolation` at the first value outside ]0, 1[.
    """
    if isinstance(schedule, (BandedRandom, Adaptive)):
        return schedule.epsilon
    if isinstance(schedule, Constant):
        indexed = [(None, schedule.lam)]
    elif isinstance(schedule, Explicit):
        indexed = list(enumerate(schedule.values)) + [(None, schedule.fallback)]
    else:
        raise UsageError(f"unknown schedule {schedule!r}")
    for i, v in indexed:
        if not 0 < v < 1:
            raise BandViolation(i, v)
    return min(min(v, 1.0 - v) for _, v in indexed)


def schedule_from_dict(doc: dict):
    if not isinstance(doc, dict):
        raise ValidationError("schedule document must be a JSON object")
    kind = doc.get("type")
    try:
        if kind == "constant":
            return Constant(float(doc["lambda"]))
        if kind == "explicit":
            return Explicit(tuple(doc["values"]), float(doc.get("fallback", 0.5)))
        if kind == "banded_random":
            return BandedRandom(float(doc["epsilon"]), int(doc.get("seed", 0)))
        if kind == "adaptive":
            return Adaptive(float(doc["epsilon"]))
    except KeyError as exc:
        raise ValidationError("missing", exc.args[0]) from exc
    except (TypeError, UsageError, ValueError) as exc:
        raise ValidationError(str(exc), kind) from exc
    raise ValidationError(f"unknown schedule type {kind!r}", "type")


def schedule_to_dict(schedule) -> dict:
    if isinstance(schedule, Constant):
        return {"type": "constant", "lambda": schedule.lam}
    if isinstance(schedule, Explicit):
        return {"type": "explicit", "values": list(schedule.values), "fallback": schedule.fallback}
    if isinstance(schedule, BandedRandom):
        return {"type": "banded_random", "epsilon": schedule.epsilon, "seed": schedule.seed}
    if isinstance(schedule, Adaptive):
        return {"type": "adaptive", "epsilon": schedule.epsilon}
    raise UsageError(f"unknown schedule {schedule!r}")
