"""Signal reconstruction from a subspace projection, guided by a second subspace."""

from .errors import (
    ConfigurationError,
    DegenerateSetWarning,
    DimensionError,
    DomainError,
    NumericalBreakdownError,
    PgmParseError,
)
from .krylov import CgParams, CgStats, cg_solve, count_solves
from .reconstruction import (
    ReconstructionProblem,
    ReconstructionSet,
    SubspaceBasis,
    alpha_combine,
    alpha_from_noise,
    alpha_to_rho,
    consistent_reconstruction,
    generalized_g1,
    generalized_g2,
    generalized_g3,
    minimax_regret,
    reconstruction_set,
    regularized_reconstruction,
    rho_alpha_convert,
    rho_to_alpha,
)
from .signal import (
    LinearOperator,
    ProjectorReport,
    Signal,
    complement_apply,
    inner_product,
    verify_projector,
)

__version__ = "0.1.0"
