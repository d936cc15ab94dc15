"""Discrete diffusion semigroups for classical, exceptional and Dunkl-Jacobi
orthonormal expansions, with empirical verification harnesses."""

from .core import (
    BandedGenerator,
    KernelTable,
    NumericalConsistencyError,
    SequenceData,
    SymbolSpec,
    cos_symbol,
    geometric_t_grid,
    zorder_indices,
    zposition,
)
from .jacobi import (
    JacobiParams,
    QuadratureRule,
    RecurrenceCoeffs,
    build_quadrature,
    eval_jacobi,
    eval_jacobi_derivative,
    jacobi_table,
    norm_constant,
    recurrence_coeffs,
)
from .exceptional import (
    ExceptionalSystem,
    ExceptionalWeight,
    eval_exceptional,
    exceptional_kernel,
    exceptional_table,
    make_system,
    partner_operator_coeffs,
    q_recurrence_coeffs,
    q_recurrence_matrix,
    worked_example_system,
)
from .dunkl import (
    BlockBandCoeffs,
    DunklSystem,
    dunkl_kernel,
    eval_psi,
    lambda_eigen_residual,
    six_term_residual,
)
from .semigroup import (
    BasisDescriptor,
    apply_semigroup,
    build_generator,
    build_kernel,
    compose_check,
    default_symbol,
    evolve_ivp,
    evolve_methods,
    limit_stencil,
    maximal_operator,
    symbol_row_limits,
)
from .analysis import (
    KernelEstimateReport,
    ProbeResult,
    WeightSeq,
    ap_constant,
    maximal_inequality_probe,
    power_weight,
    random_f_family,
    standard_kernel_check,
    weak_norm,
    weighted_norm,
)

__version__ = "0.1.0"
