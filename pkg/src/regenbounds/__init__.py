"""Exact storage/repair bounds for distributed-storage systems.

The package generates linear file-size bounds with machine-checkable
certificates, computes their piecewise-linear envelopes and the induced
storage/bandwidth tradeoff, and builds concrete binary codes with
verifiable recovery and repair.
"""

from .core import (
    ALPHA,
    BETA,
    CheckResult,
    CodeSpecError,
    FeasibilityError,
    InternalConsistencyError,
    LinearForm,
    MESSAGE,
    ParameterRangeError,
    Rational,
    RationalLike,
    RefinementError,
    RegenBoundsError,
    SystemParams,
    Variable,
    VarSet,
    VerificationReport,
    ZERO_FORM,
    bq,
    closure_contains,
    dependency_closure,
    functional_envelope_value,
    helper_product,
    line_minimum_envelope,
    make_report,
    node_set,
    universe,
    var_weight,
)
from .generators import (
    AS_STATED,
    ChainCertificate,
    ChainStep,
    Combination,
    CutSet,
    DERIVED,
    EnumerationLimits,
    EnumerationResult,
    LinearBound,
    MinimalConfiguration,
    PackingCertificate,
    Rectangle,
    combine_rs_p0,
    cutset_bounds,
    enumerate_bounds,
    p0_term,
    thm_lm_bound,
    thm_rs_bound,
    thm_rs_bound_unit,
    verify_certificate,
)
from .envelope import (
    BoundaryVertex,
    EnvelopeSegment,
    FAMILY_NAMES,
    GapReport,
    GapRow,
    PiecewiseLinearEnvelope,
    TradeoffBoundary,
    evaluate_best,
    family_members,
    gap_report,
    tradeoff_boundary,
    upper_envelope,
)
from .codes import (
    Gf2Matrix,
    RegeneratingCodeSpec,
    build_congruence_family,
    builtin_code_423,
    builtin_code_433,
    congruence_check_matrix,
    gf2_nullspace,
    gf2_rank,
    gf2_row_basis,
    gf2_rref,
    gf2_solve,
    verify_parity_structure,
    verify_recovery,
    verify_repair,
)
from .ops import RunConfig

__all__ = [
    "ALPHA",
    "AS_STATED",
    "BETA",
    "BoundaryVertex",
    "ChainCertificate",
    "ChainStep",
    "CheckResult",
    "CodeSpecError",
    "Combination",
    "CutSet",
    "DERIVED",
    "EnumerationLimits",
    "EnumerationResult",
    "EnvelopeSegment",
    "FAMILY_NAMES",
    "FeasibilityError",
    "GapReport",
    "GapRow",
    "Gf2Matrix",
    "InternalConsistencyError",
    "LinearBound",
    "LinearForm",
    "MESSAGE",
    "MinimalConfiguration",
    "PackingCertificate",
    "ParameterRangeError",
    "PiecewiseLinearEnvelope",
    "Rational",
    "RationalLike",
    "Rectangle",
    "RefinementError",
    "RegenBoundsError",
    "RegeneratingCodeSpec",
    "RunConfig",
    "SystemParams",
    "TradeoffBoundary",
    "VarSet",
    "Variable",
    "VerificationReport",
    "ZERO_FORM",
    "bq",
    "build_congruence_family",
    "builtin_code_423",
    "builtin_code_433",
    "closure_contains",
    "combine_rs_p0",
    "congruence_check_matrix",
    "cutset_bounds",
    "dependency_closure",
    "enumerate_bounds",
    "evaluate_best",
    "family_members",
    "functional_envelope_value",
    "gap_report",
    "gf2_nullspace",
    "gf2_rank",
    "gf2_row_basis",
    "gf2_rref",
    "gf2_solve",
    "helper_product",
    "line_minimum_envelope",
    "make_report",
    "node_set",
    "p0_term",
    "thm_lm_bound",
    "thm_rs_bound",
    "thm_rs_bound_unit",
    "tradeoff_boundary",
    "universe",
    "upper_envelope",
    "var_weight",
    "verify_certificate",
    "verify_parity_structure",
    "verify_recovery",
    "verify_repair",
]
