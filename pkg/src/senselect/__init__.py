"""Greedy sensor selection maximizing expected information gain.

Linear Gaussian Bayesian inverse problems on a weighted (mass-matrix)
inner-product space, with pointwise uncorrelated sensor noise.  The set
objective log det(I + Ht(S)) is twice the expected information gain of
the design S; it is strictly monotone and submodular, which gives the
greedy solver a certified (1 - 1/e) share of the optimum.
"""

__version__ = "0.1.0"

from .wspace import (
    Operator,
    SingularUpdateError,
    WeightedSpace,
    adjoint_forward,
    is_selfadjoint,
    rank1_det_factor,
    rank1_inverse_update,
    tensor,
)
from .model import (
    InverseProblem,
    Posterior,
    build_problem,
    hessian_misfit,
    hessian_preconditioned,
    posterior,
    validate_design,
)
from .objective import (
    Design,
    DesignState,
    design_state,
    eig_nats,
    extend,
    marginal_gain,
    marginal_gain_conditioned,
    overlap,
    phi_eig,
)
from .selection import (
    BoundViolationError,
    CapExceededError,
    Certificate,
    SelectionReport,
    certify_bound,
    exhaustive,
    greedy,
    lazy_greedy,
    random_baseline,
)
from .verify import (
    McEigEstimate,
    MonotoneReport,
    SubmodularReport,
    VerificationSummary,
    check_monotone,
    check_submodular,
    kl_gaussian,
    mc_eig,
    verification_run,
)
from .problems import ProblemSpec, gen_chain, gen_random, generate
from .fileio import (
    ProblemFormatError,
    ReportFile,
    read_problem,
    read_report,
    write_problem,
    write_report,
)

__all__ = [
    "__version__",
    "WeightedSpace", "Operator", "SingularUpdateError",
    "tensor", "adjoint_forward", "is_selfadjoint",
    "rank1_det_factor", "rank1_inverse_update",
    "InverseProblem", "Posterior", "build_problem", "validate_design",
    "hessian_misfit", "hessian_preconditioned", "posterior",
    "Design", "DesignState", "design_state", "phi_eig", "eig_nats",
    "overlap", "marginal_gain", "marginal_gain_conditioned", "extend",
    "SelectionReport", "Certificate", "greedy", "lazy_greedy",
    "exhaustive", "certify_bound", "random_baseline",
    "CapExceededError", "BoundViolationError",
    "McEigEstimate", "MonotoneReport", "SubmodularReport",
    "VerificationSummary", "kl_gaussian", "mc_eig",
    "check_monotone", "check_submodular", "verification_run",
    "ProblemSpec", "generate", "gen_random", "gen_chain",
    "ProblemFormatError", "ReportFile",
    "read_problem", "write_problem", "read_report", "write_report",
]
