"""Simulator for the two-lab extended Wigner's-friend protocol.

The package models the full round (coin, spin, two friends, two
superobservers, optional notebooks), tracks every agent's relational
description separately, and verifies sampled statistics against exact
branch enumeration.
"""

from .analysis import (
    DetectionReport,
    FrequencyTable,
    JointDistribution,
    detect_records,
    enumerate_exact,
    monte_carlo,
    z_scores,
)
from .measurement import (
    BasisError,
    Branch,
    InconsistentOutcomeError,
    MeasurementBasis,
    ResidualError,
    ResidualPolicy,
    SubspaceOutcome,
    branch_all,
    condition_on,
    outcome_probability,
    premeasure,
    record_copy,
    sample,
    validate_basis,
)
from .perspectives import (
    AgentModel,
    CertaintyVerdict,
    Given,
    PerspectiveLimit,
    agent_model_at,
    agent_state_at,
    apply_announcement,
    certainty_query,
    known_system_names,
    standard_predictions,
)
from .protocol import (
    ProtocolConfig,
    ProtocolVariant,
    RoundTranscript,
    RunReport,
    initial_state,
    round_rng,
    run_round,
    run_until_halt,
    state_after_preparation,
    step_t0,
    step_t1,
    step_t2,
    step_t3,
)
from .reference import ReferenceState, load_reference_states, reference_by_tag
from .tensor import (
    LayoutError,
    RegisterLayout,
    StateVector,
    SystemId,
    apply_unitary,
    equal_up_to_global_phase,
    inner,
    product_state,
    reorder,
)

__version__ = "0.1.0"
