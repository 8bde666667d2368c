"""Finite-dimensional non-commutative L1 calculus and zero-two law experiments."""

from .algebra import (
    AlgebraShape,
    HermitianElement,
    SpectralDecomposition,
    abs,
    extreme_point,
    pairing,
    spectral,
    sup_norm,
    trace,
    trace_norm,
)
from .bundle import (
    BundleAlgebra,
    CenterValue,
    FiniteMeasureSpace,
    GnsFiber,
    Section,
    SectionOperator,
    assemble,
    center_trace,
    disintegrate,
    gns,
    lift,
    operator_center_norm,
    order_limit_check,
    vector_norm,
)
from .channels import (
    commuting_family,
    convex,
    depolarizing,
    kraus,
    make_channel,
    permutation,
    schur,
    stochastic,
    swap_conjugation,
    unitary_conjugation,
)
from .errors import (
    CenterCommutationViolated,
    CommutationViolated,
    IdentityResidualExceeded,
    InvalidInput,
    InvalidTrace,
    NumericalFailure,
    PremiseViolated,
    SearchExhausted,
    TracePreservationViolated,
    ZeroTwoError,
)
from .laws import (
    ConstructionTrace,
    MultiIndex,
    ZeroTwoReport,
    corollary14_experiment,
    difference_norm_sequence,
    gamma_oracle,
    halving_defect,
    meet_classical,
    multi_power,
    q_sequence,
    theorem12_experiment,
    v_table,
    zaharopol_check,
    zn0_experiment,
)
from .superop import (
    NormEstimate,
    SuperOperator,
    adjoint,
    apply,
    compose,
    dominance_check,
    is_trace_preserving,
    is_unital_dual,
    norm_1to1,
    norm_positive,
    power,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_") and name != "abs"]
