"""Second-order IMEX time stepping for Caputo fractional ODEs with weakly singular solutions."""

from .corrections import (
    ExponentSequence,
    corrected_quadrature,
    exact_frac_integral_power,
    extrap_weights,
    starting_weights,
    taylor_weights,
)
from .errors import ConditioningError, ConfigError, DomainError, SingularMatrixError
from .harness import (
    ConvergenceRow,
    ReferencePolicy,
    compare_schemes,
    convergence_study,
    error_norms,
)
from .model import (
    BUILTIN_IDS,
    ExponentKind,
    Problem,
    build_example_multiterm,
    build_example_nonlinear,
    build_example_stiff,
    builtin_problem,
    default_exponents,
    load_problem,
)
from .schemes import BootstrapMode, Scheme, SchemeConfig, Status, Trajectory, solve
from .stability import ProbeResult, boundary_locus, probe_stability
from .weights import GenKind, flmm_weights, gamma, trap_weights

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_IDS",
    "BootstrapMode",
    "ConditioningError",
    "ConfigError",
    "ConvergenceRow",
    "DomainError",
    "ExponentKind",
    "ExponentSequence",
    "GenKind",
    "ProbeResult",
    "Problem",
    "ReferencePolicy",
    "Scheme",
    "SchemeConfig",
    "SingularMatrixError",
    "Status",
    "Trajectory",
    "boundary_locus",
    "build_example_multiterm",
    "build_example_nonlinear",
    "build_example_stiff",
    "builtin_problem",
    "compare_schemes",
    "convergence_study",
    "corrected_quadrature",
    "default_exponents",
    "error_norms",
    "exact_frac_integral_power",
    "extrap_weights",
    "flmm_weights",
    "gamma",
    "load_problem",
    "probe_stability",
    "solve",
    "starting_weights",
    "taylor_weights",
    "trap_weights",
]
