"""Per-agent relational descriptions of the protocol.

Each agent models every system except itself (an agent's description of a
measurement of a lab containing itself would amount to a self-measurement,
which the formalism cannot express; see :class:`PerspectiveLimit`).  The
external observer ``C`` models all systems.

An agent's state evolves only through three kinds of events:

* unitary protocol steps (friend premeasurements, notebook copies, the
  superobservers' premeasurements of labs the agent is not part of),
* the agent's own sampled outcomes, which condition its model of the other
  systems,
* heard announcements, which condition the model on the announcer's memory.

Announcement conditioning applies in the original protocol
(``announce_wbar=True``), where outcomes are shared and agents accept
record-backed updates.  In the modified protocol the coin-lab outcome stays
secret and no agent revises its description on hearsay, so descriptions keep
the full superposition over unannounced records.

In cheat mode the coin friend's notebook exists physically but is unknown to
the other participants: their models omit it, while the external observer
and the true dynamics include it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .measurement import (
    MeasurementBasis,
    condition_on,
    outcome_probability,
    premeasure,
    record_copy,
)
from .protocol import (
    _COIN_SUPERPOSITION,
    _PREPARE_SPIN,
    ProtocolVariant,
    RoundTranscript,
)
from .systems import (
    BY_NAME,
    F,
    FBAR,
    N,
    NBAR,
    R,
    S,
    W,
    WBAR,
    canonical_layout,
    coin_basis,
    coin_lab_basis,
    level_basis,
    record_basis,
    spin_basis,
    spin_lab_basis,
)
from .tensor import RegisterLayout, StateVector, apply_unitary, product_state

AGENTS = ("Fbar", "F", "Wbar", "W", "C")

# First time step at which the agent's lab (containing the agent) is measured
# by someone else, ending the agent's ability to describe the experiment.
_LIMIT_TIME = {"Fbar": 2, "F": 3}

CERTAINTY_TOL = 1e-10


class PerspectiveLimit(Exception):
    """The requested description would require a self-measurement."""


@dataclass(frozen=True)
class Given:
    """The outcomes pinning down one branch of a round.

    ``r`` is the coin outcome seen by the coin friend (her own record),
    ``s`` the spin outcome seen by the spin friend, ``wbar``/``w`` the
    superobservers' lab outcomes and ``intrusion`` the direct spin reading
    of the intrusion variant.  Fields are None when not (yet) determined.
    """

    r: str | None = None
    s: str | None = None
    wbar: str | None = None
    w: str | None = None
    intrusion: str | None = None

    @classmethod
    def from_transcript(cls, transcript: RoundTranscript) -> "Given":
        return cls(
            wbar=transcript.wbar_outcome,
            w=transcript.w_outcome,
            intrusion=transcript.intrusion_outcome,
        )


@dataclass(frozen=True, eq=False)
class AgentModel:
    """Snapshot of one agent's description plus the events it rests on."""

    agent: str
    layout: RegisterLayout
    state: StateVector
    log: tuple[tuple[str, str, str], ...]


@dataclass(frozen=True)
class CertaintyVerdict:
    """Probability of a hypothetical outcome with a three-way classification."""

    probability: float
    classification: str

    @classmethod
    def from_probability(cls, p: float, tol: float = CERTAINTY_TOL) -> "CertaintyVerdict":
        if p >= 1.0 - tol:
            kind = "certain-yes"
        elif p <= tol:
            kind = "certain-no"
        else:
            kind = "uncertain"
        return cls(probability=p, classification=kind)


def known_system_names(agent: str, variant: ProtocolVariant) -> tuple[str, ...]:
    """Systems in the agent's model: all it knows about, minus itself."""
    if agent not in AGENTS:
        raise ValueError(f"unknown agent {agent!r}; expected one of {AGENTS}")
    names = set(variant.system_names())
    if agent != "C":
        names.discard(agent)
    if variant.cheat and agent in ("F", "Wbar", "W"):
        names.discard("Nbar")
    return tuple(sys.name for sys in canonical_layout(names).systems)


def agent_model_at(
    agent: str,
    time: int,
    given: Given | None = None,
    variant: ProtocolVariant = ProtocolVariant(),
) -> AgentModel:
    """The agent's description after the steps completed at ``time``.

    Raises :class:`PerspectiveLimit` when the step measures a lab containing
    the agent, and :class:`ValueError` when the transcript prefix does not
    pin an outcome the agent would know at that time.
    """
    if time not in (0, 1, 2, 3):
        raise ValueError(f"time must be one of 0..3, got {time}")
    given = given or Given()
    limit = _LIMIT_TIME.get(agent)
    if limit is not None and time >= limit:
        raise PerspectiveLimit(
            f"agent {agent!r} cannot describe the t={limit} measurement of "
            f"the lab containing itself"
        )

    names = known_system_names(agent, variant)
    layout = canonical_layout(names)
    log: list[tuple[str, str, str]] = []

    factors: dict[str, object] = {"R": _COIN_SUPERPOSITION, "S": "down"}
    for name in names:
        if name not in factors:
            factors[name] = "ready"
    state = product_state(layout, factors)

    # t = 0: coin measured by its friend, notebook copy, spin preparation.
    if agent == "Fbar":
        r = given.r or "t"
        state = condition_on(state, coin_basis(), r)
        log.append(("own", "R", r))
    else:
        state = record_copy(state, R, FBAR)
    if "Nbar" in layout:
        state = record_copy(state, R, NBAR)
    state = apply_unitary(state, ("R", "S"), _PREPARE_SPIN)

    if time >= 1:
        # t = 1: spin measured by its friend, notebook copy.
        if agent == "F":
            if given.s is None:
                raise ValueError("the spin friend's own outcome (s) is required at t>=1")
            state = condition_on(state, spin_basis(), given.s)
            log.append(("own", "S", given.s))
        else:
            state = record_copy(state, S, F)
        if "N" in layout:
            state = record_copy(state, S, N)

    if time >= 2:
        # t = 2: the coin lab is measured.
        if agent == "Wbar":
            if given.wbar is None:
                raise ValueError("the coin-lab observer's own outcome (wbar) is required at t>=2")
            state = condition_on(state, coin_lab_basis(), given.wbar)
            log.append(("own", "coin_lab", given.wbar))
            if variant.intrusion and given.wbar == "ok" and given.intrusion is not None:
                state = condition_on(state, spin_basis(), given.intrusion)
                log.append(("own", "S", given.intrusion))
        else:
            state = premeasure(state, coin_lab_basis(), WBAR)
            if variant.announce_wbar:
                if given.wbar is None:
                    raise ValueError(
                        "the announced coin-lab outcome (wbar) is required at t>=2 "
                        "in the announcing protocol"
                    )
                state = condition_on(state, record_basis(WBAR), given.wbar)
                log.append(("heard", "Wbar", given.wbar))

    if time >= 3:
        # t = 3: the spin lab is measured.
        if agent == "W":
            if given.w is None:
                raise ValueError("the spin-lab observer's own outcome (w) is required at t=3")
            state = condition_on(state, spin_lab_basis(), given.w)
            log.append(("own", "spin_lab", given.w))
        else:
            state = premeasure(state, spin_lab_basis(), W)
            if variant.announce_wbar:
                if given.w is None:
                    raise ValueError(
                        "the announced spin-lab outcome (w) is required at t=3 "
                        "in the announcing protocol"
                    )
                state = condition_on(state, record_basis(W), given.w)
                log.append(("heard", "W", given.w))

    return AgentModel(agent=agent, layout=layout, state=state, log=tuple(log))


def agent_state_at(
    agent: str,
    time: int,
    given: Given | None = None,
    variant: ProtocolVariant = ProtocolVariant(),
) -> StateVector:
    """State vector of :func:`agent_model_at`, in canonical system order."""
    return agent_model_at(agent, time, given, variant).state


def apply_announcement(model: AgentModel, announcer: str, label: str) -> AgentModel:
    """Condition the model on an announcement, via the announcer's memory.

    The announcer's memory must be part of the model's layout.  Announcing
    an outcome the model holds with zero probability raises
    :class:`InconsistentOutcomeError`; it is never silently renormalized.
    """
    if announcer not in BY_NAME:
        raise ValueError(f"unknown announcer {announcer!r}")
    memory = BY_NAME[announcer]
    if memory.name not in model.layout:
        raise ValueError(
            f"announcer {announcer!r} has no memory system in the model of {model.agent!r}"
        )
    state = condition_on(model.state, record_basis(memory), label)
    return AgentModel(
        agent=model.agent,
        layout=model.layout,
        state=state,
        log=model.log + (("heard", announcer, label),),
    )


def certainty_query(model: AgentModel, basis: MeasurementBasis, label: str) -> CertaintyVerdict:
    """Would the agent bet on this outcome?  Probability plus classification."""
    p = outcome_probability(model.state, basis, label)
    return CertaintyVerdict.from_probability(p)


def standard_predictions(model: AgentModel) -> dict[str, dict[str, float]]:
    """The agent's outcome probabilities for the standard measurements.

    Lab predictions use the ok/fail lab bases (valid before and after the
    lab measurement); coin, spin, memories and notebooks report level
    occupancies.  Only measurements whose targets lie inside the agent's
    layout appear, so the coin friend gets no coin-lab prediction.
    """
    names = set(model.layout.names)
    out: dict[str, dict[str, float]] = {}
    if "R" in names:
        basis = coin_basis()
        out["R"] = {lab: outcome_probability(model.state, basis, lab) for lab in basis.labels()}
    if "S" in names:
        basis = spin_basis()
        out["S"] = {lab: outcome_probability(model.state, basis, lab) for lab in basis.labels()}
    if {"R", "Fbar"} <= names:
        basis = coin_lab_basis()
        out["coin_lab"] = {
            lab: outcome_probability(model.state, basis, lab) for lab in basis.labels()
        }
    if {"S", "F"} <= names:
        basis = spin_lab_basis()
        out["spin_lab"] = {
            lab: outcome_probability(model.state, basis, lab) for lab in basis.labels()
        }
    for name in ("Fbar", "F", "Nbar", "N", "Wbar", "W"):
        if name in names:
            basis = level_basis(BY_NAME[name])
            out[name] = {
                lab: outcome_probability(model.state, basis, lab) for lab in basis.labels()
            }
    return out
