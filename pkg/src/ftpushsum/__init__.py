"""Finite-time privacy-preserving push-sum on digraphs.

Exact average consensus in finitely many rounds over directed graphs, a
gradient-descent outer loop built on it, and an executable privacy audit
that re-runs the protocol under observation-equivalent substitutions.
"""

from ._backend import BACKEND, HAVE_COMPILED
from .digraph import (
    DiGraph,
    NeighborSets,
    from_edge_list_text,
    is_strongly_connected,
    neighbor_sets,
    random_strongly_connected,
    to_edge_list_text,
)
from .errors import (
    DegenerateTrajectoryError,
    FtpushsumError,
    NotStronglyConnectedError,
    ProtocolError,
    ZeroDenominatorError,
)
from .hankel import (
    PolyCoefficients,
    Trajectory,
    difference_sequence,
    final_value,
    first_defect,
    hankel_matrix,
)
from .optimizer import (
    ConvergenceReport,
    LeastSquaresObjective,
    OptimizerState,
    RowStochasticMixer,
    gd_step,
    least_squares_instance,
    make_mixer,
    normal_equations_solution,
    stepsize_bound,
)
from .prftps import ExecutionRecord, PrftpsSession, prftps_step, run_recorded
from .privacy import (
    EAVESDROPPER,
    HONEST_BUT_CURIOUS,
    AdversaryModel,
    EquivalenceReport,
    EquivalentExecution,
    ObservationTrace,
    PrivacyVerdict,
    build_equivalent_execution,
    capture_trace,
    privacy_condition,
    verify_equivalence,
)
from .pushsum import (
    AgentConsensusState,
    BaselineState,
    WeightSet,
    baseline_push_sum_round,
    baseline_run,
    decompose_initial,
    decomposed_round,
    make_weights,
    stacked_matrix,
)
from .termination import (
    TerminationState,
    compute_dmax,
    first_stage_rounds,
    initial_termination_states,
    steady_stage_rounds,
    termination_round,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "HAVE_COMPILED",
    "DiGraph",
    "NeighborSets",
    "from_edge_list_text",
    "is_strongly_connected",
    "neighbor_sets",
    "random_strongly_connected",
    "to_edge_list_text",
    "FtpushsumError",
    "DegenerateTrajectoryError",
    "NotStronglyConnectedError",
    "ProtocolError",
    "ZeroDenominatorError",
    "PolyCoefficients",
    "Trajectory",
    "difference_sequence",
    "final_value",
    "first_defect",
    "hankel_matrix",
    "ConvergenceReport",
    "LeastSquaresObjective",
    "OptimizerState",
    "RowStochasticMixer",
    "gd_step",
    "least_squares_instance",
    "make_mixer",
    "normal_equations_solution",
    "stepsize_bound",
    "ExecutionRecord",
    "PrftpsSession",
    "prftps_step",
    "run_recorded",
    "AdversaryModel",
    "EquivalenceReport",
    "EquivalentExecution",
    "ObservationTrace",
    "PrivacyVerdict",
    "build_equivalent_execution",
    "capture_trace",
    "privacy_condition",
    "verify_equivalence",
    "EAVESDROPPER",
    "HONEST_BUT_CURIOUS",
    "AgentConsensusState",
    "BaselineState",
    "WeightSet",
    "baseline_push_sum_round",
    "baseline_run",
    "decompose_initial",
    "decomposed_round",
    "make_weights",
    "stacked_matrix",
    "TerminationState",
    "compute_dmax",
    "first_stage_rounds",
    "initial_termination_states",
    "steady_stage_rounds",
    "termination_round",
]
