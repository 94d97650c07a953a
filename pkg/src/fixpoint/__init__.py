"""Relaxed fixed-point iterations of nonexpansive linear and affine operators."""

from .analysis import (
    AveragednessReport,
    NormProfile,
    commutation_defect,
    is_averaged,
    lambda_bar,
    norm_profile,
    product_domination_check,
)
from .errors import (
    AtFixedPoint,
    BandViolation,
    EmptyFixedSet,
    ExpansiveOperator,
    FixpointError,
    IdentityOperator,
    MissingHistory,
    NonSquare,
    UsageError,
    ValidationError,
    YNotFixed,
)
from .estimators import FixedSetProjector, KrasnoselskiiMann
from .iteration import RunResult, StoppingRule, Termination, fejer_check, km_run, residual
from .operators import (
    AffineOperator,
    LinearOperator,
    affine_apply,
    affine_relax_apply,
    averaged_transform,
    make_affine,
    make_linear,
    project_fix,
    project_fix_affine,
    relax_apply,
)
from .schedules import (
    Adaptive,
    BandedRandom,
    Constant,
    Explicit,
    lambda_opt,
    next_lambda,
    validate_band,
)

__version__ = "0.1.0"
