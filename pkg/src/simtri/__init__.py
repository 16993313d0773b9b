"""Constructive simultaneous triangularization of complex matrix families."""

from .matcore import (
    DEFAULT_TOL,
    DimensionMismatch,
    InconsistencyError,
    NumericalWarning,
    Polynomial,
    SubspaceBasis,
    ToleranceContext,
    commutator,
    eigen_decomposition,
    generalized_eigenspace,
    kernel,
    minimal_polynomial,
    nilpotency_index,
    range_space,
)
from .commalg import (
    ConditionReport,
    OperatorFamily,
    check_conditions,
    family_report,
    iterated_commutators,
    l_nilpotency_length,
)
from .trieng import (
    MODES,
    NormalPairAnalysis,
    NumericalFailure,
    PreconditionError,
    ScalarDiagonalForm,
    TriangularizationCertificate,
    analyze_normal_pair,
    analyze_normal_pair_dual,
    find_common_invariant_subspace,
    recursion_metrics,
    scalar_diagonal_decomposition,
    shemesh_split,
    triangularize,
    triangularize_commuting,
    triangularize_l_nilpotent,
    triangularize_left_annihilated,
    triangularize_shemesh,
)
from .algstruct import (
    AlgebraStructure,
    generate_algebra,
    jacobson_radical,
    quotient_scalar_map,
    verify_quotient_commutative,
)
from .certify import (
    InstanceRecipe,
    VerificationReport,
    burnside_reducibility_oracle,
    generate_instance,
    verify_certificate,
)

__version__ = "0.1.0"
