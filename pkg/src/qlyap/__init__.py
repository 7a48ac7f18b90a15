"""Numerical laboratory for Lyapunov exponents of operator-valued dynamics."""

from . import cpmaps, koopman
from .engine import (
    NEG_INF,
    AssumptionReport,
    EstimatorOptions,
    ExponentEstimate,
    check_assumptions,
    classical_lyapunov,
    iterated_tangent,
    ks_entropy_sum,
    lyapunov_param,
    lyapunov_q,
    lyapunov_q_derivation,
    lyapunov_q_state,
)
from .errors import (
    DegenerateState,
    DegreeExceeded,
    DomainEscape,
    InvalidCharacter,
    InvalidOperator,
    InvalidParam,
    InvalidState,
    NotHermitian,
    NotLinear,
    NumericalOverflow,
    QlyapError,
)
from .models import (
    DynamicalModel,
    MODEL_NAMES,
    build_model,
    classical_models,
    coherent_vector,
    contraction_model,
    diagonal_model,
    hartree_model,
    hyperbolic_model,
    kerr_kick_cnumber_model,
    kicked_kerr_model,
    logistic_model,
    quadratic_model,
    spin_field_operator,
    squeezed_light_model,
    two_level_field_model,
)
from .operators import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    FockConfig,
    QuadratureAngle,
    as_operator,
    fock_pair,
    hermitian_function,
    is_hermitian,
    quadratures,
    reduce_angle,
    spectral_norm,
    tensor,
    top_level_weight,
    validate_density_matrix,
)

__version__ = "0.1.0"
