"""Numerical laboratory for recorded histories of finite closed quantum systems."""

from histlab.errors import (
    AlignmentIncomplete,
    AllBranchesNull,
    CompletenessViolation,
    DimensionGuard,
    DimensionMismatch,
    DomainRefusal,
    EigendecompositionFailure,
    HistlabError,
    IndexOutOfRange,
    InvalidPartition,
    ModelFileError,
    NotDecoherent,
    NotExclusive,
    NotExhaustive,
    NotHermitian,
    NotIdempotent,
    NotNormalized,
    NotRecorded,
    PacketOverflow,
    ParamOutOfRange,
    RecordTimeNotAfterHistories,
    ScheduleMismatch,
    TimesNotIncreasing,
    ValidationError,
    WrongKind,
    ZeroEvidence,
)
from histlab.hilbert import (
    DEFAULT_TOLERANCE,
    HermitianOperator,
    Projector,
    ProjectorFamily,
    StateVector,
    ToleranceConfig,
    basis_projector,
    evolve_projector,
    generator_of,
    make_state,
    projector_onto,
    unitary_of,
    conjugate,
    validate_family,
    validate_hermitian,
    validate_projector,
)
from histlab.histories import (
    CoarseHistorySet,
    HistorySet,
    Partition,
    ScheduledFamily,
    branch_vector,
    build_history_set,
    chain_operator,
    coarse_grain,
    split_composite_index,
    tensor_compose,
)
from histlab.measures import (
    Classification,
    MeasureMatrix,
    ProbabilityTable,
    RecordFamily,
    canonical_records,
    classify,
    coarse_grain_records,
    correlation_matrix,
    decoherence_matrix,
    extended_probabilities,
    history_probabilities,
    incompatible,
    is_medium_decoherent,
    is_recorded,
    make_records,
    check_records,
    product_fine_graining,
    record_probabilities,
    retrodict,
    strong_record_check,
    tensor_compose_records,
)
from histlab.models import (
    BUILTINS,
    ModelBundle,
    imaginary_overlap,
    qubit_trine,
    spin_environment,
    three_box,
    two_slit,
    verify,
)

__version__ = "0.1.0"
