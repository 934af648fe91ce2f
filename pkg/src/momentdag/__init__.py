"""Moment-based realizability tests, parameter recovery, and sink discovery
for linear non-Gaussian acyclic models."""

from .constraints import (
    ConstraintMatrix,
    NotPositiveDefiniteError,
    RankComputationError,
    RankReport,
    SpanCheck,
    VerificationReport,
    VertexCheck,
    build_generalized,
    build_mv,
    build_mv_reduced,
    build_source_matrix,
    build_trek_matrix,
    check_positive_definite,
    default_tolerance,
    last_row_in_span,
    numeric_rank,
    verify_graph,
)
from .discovery import (
    PeelStep,
    RocPoint,
    SinkBarCell,
    SinkScore,
    peel_steps,
    pick_sink,
    recover_order,
    roc_experiment,
    sink_bar_experiment,
    sink_matrix,
    sink_scores,
    threshold_sinks,
)
from .graph import CycleError, Dag, dag_from_json, dag_to_json, load_dag, parse_dag
from .identify import (
    IdentificationResult,
    MembershipDecision,
    compute_omega2,
    compute_omega3,
    membership_test,
    recover_lambda,
)
from .moments import (
    Cov,
    EdgeWeights,
    MomentPair,
    NoiseMoments,
    Tensor3,
    flatten,
    forward_moments,
    load_moments,
    moments_from_json,
    moments_to_json,
    r_block,
    save_moments,
    structural_inverse,
    submatrix,
)
from .simulate import (
    DegenerateDataWarning,
    GammaNoise,
    NoiseSpec,
    RademacherNoise,
    TwoPointNoise,
    UniformNoise,
    derive_rng,
    empirical_moments,
    make_rng,
    random_parameters,
    sample_lingam,
)

__version__ = "0.1.0"
