"""mu-norms of operators, omega correlation tables and quantum entropy stages."""
from .errors import (
    InconsistencyError,
    InvalidInputError,
    MuNormError,
    NoClosedFormError,
    SizeError,
    SupportError,
)
from .finite_space import (
    FiniteOperator,
    FiniteSpace,
    Partition,
    mu_norm_formula,
    mu_norm_infimum,
    mu_norm_sq,
)
from .koopman_entropy import Permutation, koopman, ks_entropy_stage, quantum_entropy_stage
from .regular import OmegaTable, omega_estimate, omega_exact
from .torus_dt import (
    ConvolutionOperator,
    FourierPolynomial,
    IntegerInterval,
    MultiplicationOperator,
    PeriodicOperator,
    QuadraticPhase,
    RotationPhase,
)

__version__ = "0.1.0"

__all__ = [
    "ConvolutionOperator", "FiniteOperator", "FiniteSpace", "FourierPolynomial",
    "InconsistencyError", "IntegerInterval", "InvalidInputError", "MuNormError",
    "MultiplicationOperator", "NoClosedFormError", "OmegaTable", "Partition",
    "PeriodicOperator", "Permutation", "QuadraticPhase", "RotationPhase", "SizeError",
    "SupportError", "koopman", "ks_entropy_stage", "mu_norm_formula", "mu_norm_infimum",
    "mu_norm_sq", "omega_estimate", "omega_exact", "quantum_entropy_stage",
]
