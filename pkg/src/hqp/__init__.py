"""Convex QP solver with built-in infeasibility certificates.

Embeds a standard-form QP into a one-dimension-higher homogeneous program
that is always feasible, solves it with a long-step infeasible
interior-point method, and maps the result back to either an optimal
primal-dual point or a verifiable certificate that no feasible point
exists.
"""

from .embedding import (
    HqpKktPoint,
    HqpProblem,
    SolveOutcome,
    SolveStatus,
    ThetaMode,
    ThetaReport,
    check_reduced_hessian_pd,
    compute_theta,
    compute_theta_star,
    embed,
    hqp_kkt_residuals,
    recover,
)
from .errors import (
    AmbiguousStatus,
    DimensionMismatch,
    EmptyNullspace,
    FreeVariable,
    HqpError,
    NonPositiveAlpha,
    NotReducedPd,
    ProblemFormatError,
    RankDeficient,
    SingularGram,
    SingularKkt,
    SingularNewton,
    StepSearchFailed,
    TooLarge,
)
from .iipm import IipmConfig, IipmIterate, IterationLog
from .instances import (
    InstanceKind,
    InstanceSpec,
    OracleResult,
    active_set_oracle,
    generate,
    run_experiment,
)
from .pipeline import SolveResult, solve_qp
from .qp import (
    GeneralQp,
    InfeasCertificate,
    QpKktPoint,
    QpProblem,
    ValidatedProblem,
    check_certificate,
    qp_kkt_residuals,
    to_standard_form,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousStatus",
    "DimensionMismatch",
    "EmptyNullspace",
    "FreeVariable",
    "GeneralQp",
    "HqpError",
    "HqpKktPoint",
    "HqpProblem",
    "IipmConfig",
    "IipmIterate",
    "InfeasCertificate",
    "InstanceKind",
    "InstanceSpec",
    "IterationLog",
    "NonPositiveAlpha",
    "NotReducedPd",
    "OracleResult",
    "ProblemFormatError",
    "QpKktPoint",
    "QpProblem",
    "RankDeficient",
    "SingularGram",
    "SingularKkt",
    "SingularNewton",
    "SolveOutcome",
    "SolveResult",
    "SolveStatus",
    "StepSearchFailed",
    "ThetaMode",
    "ThetaReport",
    "TooLarge",
    "ValidatedProblem",
    "active_set_oracle",
    "check_certificate",
    "check_reduced_hessian_pd",
    "compute_theta",
    "compute_theta_star",
    "embed",
    "generate",
    "hqp_kkt_residuals",
    "qp_kkt_residuals",
    "recover",
    "run_experiment",
    "solve_qp",
    "to_standard_form",
    "validate",
]
