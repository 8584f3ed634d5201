"""Equivariant bundles and Hodge-Dirac operators on compact homogeneous spaces.

Global, coordinate-free constructions over quotients G/K of compact
matrix groups: induced bundles with standard module frames, invariant
connections parameterized by their zero-order corrections, the Clifford
bundle of the tangent module, the Hodge-Dirac operator with its
self-adjointness criteria, exact isotypic spectral blocks, and the
metric lower-bound estimator built from Dirac commutators.
"""

from .groups import GroupElement, GroupModel, QuadratureRule, expm_skew
from .cliffordalg import CliffordAlgebra
from .reps import UnitaryRep, adjoint_rep, conjugation_intertwiner, direct_sum, spin_rep
from .sections import (
    AInner,
    BandwidthWarning,
    CliffordKRep,
    CliffordProduct,
    Codomain,
    Constant,
    DerivativeOrderError,
    EmbedTangent,
    EvalPoints,
    FundamentalField,
    GramSection,
    HarmonicSpinor,
    ImagPart,
    KAverage,
    MatrixCoefficient,
    MatrixKRep,
    OpApply,
    OperatorKRep,
    RankOne,
    RealPart,
    RestrictedKRep,
    Scale,
    Section,
    Sum,
    TangentKRep,
    Translate,
    TrivialKRep,
    a_inner,
    directional_deriv,
    equivariance_defect,
    equivariant_project,
    evaluate,
    l2_inner,
    lambda_deriv,
    translate,
)
from .bundles import (
    FrameField,
    InducedBundle,
    build_frame,
    frame_gram,
    module_map_values,
    monopole_bundle,
    projection_section,
    random_equivariant_section,
    rank_one_endo,
    tangent_bundle,
)
from .geometry import (
    ApplyConnection,
    Connection,
    apply_connection,
    canonical_connection,
    canonical_derivative,
    fundamental_field,
    levi_civita_connection,
    symmetric_space_check,
    tangent_frame,
    torsion,
    torsion_pair,
    torsion_trace,
)
from .dirac import (
    CriterionReport,
    SpectralBlock,
    block_closure,
    casimir_value,
    coefficient_family,
    commutator_defect,
    connection_test_matrix,
    criterion_check,
    geodesic_arc,
    gradient,
    grade_compressed_square,
    hodge_dirac,
    isotypic_basis,
    isotypic_coefficients,
    kernel_count,
    metric_estimate,
    minimal_violating_connection,
    orbit_vector,
    selfadjoint_defect,
    spectral_block,
    spinor_algebra,
)

__version__ = "0.1.0"
