"""Projective measurements in labeled orthonormal bases on subsystem tuples.

A measurement basis assigns outcome labels to orthonormal subspaces of the
joint space of some target systems.  The basis need not be complete: the
residual policy decides whether probability landing outside the declared
subspaces is an error (``forbid``) or an extra labeled branch (``allow``).

Measurement comes in four flavours:

* :func:`branch_all` expands every outcome with its Born probability,
* :func:`sample` draws one outcome from a seeded generator,
* :func:`condition_on` projects on an outcome that is already known,
* :func:`premeasure` and :func:`record_copy` write an outcome label into a
  memory system unitarily, without collapsing anything.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .tensor import (
    LayoutError,
    StateVector,
    SystemId,
    _moved_matrix,
    _restore,
)

ORTHO_ATOL = 1e-12
ZERO_PROBABILITY_ATOL = 1e-12


class BasisError(ValueError):
    """The outcome vectors violate orthonormality or shape constraints."""


class ResidualError(RuntimeError):
    """A forbidden residual outcome carried non-negligible probability."""


class InconsistentOutcomeError(ValueError):
    """Conditioning on an outcome the state assigns (near-)zero probability."""


@dataclass(frozen=True, eq=False)
class SubspaceOutcome:
    """One labeled outcome: a set of orthonormal kets spanning its subspace."""

    label: str
    vectors: np.ndarray

    def __post_init__(self) -> None:
        vecs = np.atleast_2d(np.array(self.vectors, dtype=np.complex128))
        vecs.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)

    @property
    def subspace_dimension(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class ResidualPolicy:
    """What to do with probability outside the declared outcome subspaces."""

    kind: str
    tol: float = 1e-9
    label: str | None = None

    @classmethod
    def forbid(cls, tol: float = 1e-9) -> "ResidualPolicy":
        return cls(kind="forbid", tol=tol)

    @classmethod
    def allow(cls, label: str) -> "ResidualPolicy":
        return cls(kind="allow", label=label)

    def __post_init__(self) -> None:
        if self.kind not in ("forbid", "allow"):
            raise ValueError(f"unknown residual policy {self.kind!r}")
        if self.kind == "allow" and not self.label:
            raise ValueError("allow policy needs a residual label")


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """Labeled orthonormal outcome subspaces on an ordered tuple of systems."""

    targets: tuple[SystemId, ...]
    outcomes: tuple[SubspaceOutcome, ...]
    residual: ResidualPolicy = field(default_factory=ResidualPolicy.forbid)

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if not self.targets:
            raise BasisError("basis needs at least one target system")
        if not self.outcomes:
            raise BasisError("basis needs at least one outcome")
        labels = [o.label for o in self.outcomes]
        if len(set(labels)) != len(labels):
            raise BasisError(f"duplicate outcome labels: {labels}")
        d = self.target_dimension
        for outcome in self.outcomes:
            if outcome.vectors.shape[1] != d:
                raise BasisError(
                    f"outcome {outcome.label!r} has vectors of dimension "
                    f"{outcome.vectors.shape[1]}, target space has {d}"
                )

    @property
    def target_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.targets)

    @property
    def target_dimension(self) -> int:
        return int(np.prod([s.dimension for s in self.targets]))

    def labels(self) -> tuple[str, ...]:
        return tuple(o.label for o in self.outcomes)

    def outcome(self, label: str) -> SubspaceOutcome:
        for o in self.outcomes:
            if o.label == label:
                return o
        raise KeyError(f"basis has no outcome labeled {label!r}")


@dataclass(frozen=True)
class BasisReport:
    """Result of validating a basis: dimensions of its parts."""

    labels: tuple[str, ...]
    target_dimension: int
    outcome_dimension: int
    residual_dimension: int


@dataclass(frozen=True, eq=False)
class Branch:
    """One measurement outcome with its probability and collapsed state."""

    label: str
    probability: float
    post_state: StateVector


def validate_basis(basis: MeasurementBasis, atol: float = ORTHO_ATOL) -> BasisReport:
    """Check orthonormality within and across outcomes.

    Raises :class:`BasisError` if any vector is not normalized or any pair of
    vectors (within one outcome or across outcomes) is not orthogonal.
    Returns the dimension of the residual complement.
    """
    stacked = np.vstack([o.vectors for o in basis.outcomes])
    gram = stacked.conj() @ stacked.T
    diag = np.abs(np.diag(gram) - 1.0)
    if np.any(diag > atol):
        bad = int(np.argmax(diag))
        raise BasisError(f"outcome vector {bad} is not normalized")
    off = np.abs(gram - np.eye(gram.shape[0]))
    if np.any(off > atol):
        i, j = np.unravel_index(int(np.argmax(off)), off.shape)
        raise BasisError(f"outcome vectors {i} and {j} are not orthogonal")
    outcome_dim = stacked.shape[0]
    report = BasisReport(
        labels=basis.labels(),
        target_dimension=basis.target_dimension,
        outcome_dimension=outcome_dim,
        residual_dimension=basis.target_dimension - outcome_dim,
    )
    object.__setattr__(basis, "_validated", True)
    return report


def _ensure_valid(basis: MeasurementBasis) -> None:
    if not getattr(basis, "_validated", False):
        validate_basis(basis)


def _target_matrix(state: StateVector, basis: MeasurementBasis) -> tuple[np.ndarray, list[int]]:
    layout = state.layout
    for system in basis.targets:
        if system.name not in layout:
            raise LayoutError(f"basis target {system.name!r} not in state layout")
        if layout.system(system.name) != system:
            raise LayoutError(f"system {system.name!r} differs from the basis target")
    return _moved_matrix(state, basis.target_names)


def branch_all(state: StateVector, basis: MeasurementBasis) -> list[Branch]:
    """Expand the measurement into one branch per outcome.

    Each branch carries the Born probability (squared norm of the projection)
    and the normalized post-measurement state.  Under an ``allow`` residual
    policy a final branch collects any probability outside the declared
    outcomes; under ``forbid`` such probability raises :class:`ResidualError`.
    """
    _ensure_valid(basis)
    mat, perm = _target_matrix(state, basis)
    layout = state.layout

    branches: list[Branch] = []
    projected_total = np.zeros_like(mat)
    for outcome in basis.outcomes:
        coeffs = outcome.vectors.conj() @ mat
        probability = float(np.sum(np.abs(coeffs) ** 2))
        projected = outcome.vectors.T @ coeffs
        projected_total += projected
        if probability > ZERO_PROBABILITY_ATOL:
            post = StateVector(layout, _restore(projected / np.sqrt(probability), layout, perm))
        else:
            probability = max(probability, 0.0)
            post = state  # placeholder, never a physical branch
        branches.append(Branch(outcome.label, probability, post))

    residual_mat = mat - projected_total
    residual_probability = float(np.sum(np.abs(residual_mat) ** 2))
    if basis.residual.kind == "forbid":
        if residual_probability >= basis.residual.tol:
            raise ResidualError(
                f"residual outcome on {basis.target_names} has probability "
                f"{residual_probability:.3e} under a forbid policy"
            )
    elif residual_probability > ZERO_PROBABILITY_ATOL:
        post = StateVector(
            layout,
            _restore(residual_mat / np.sqrt(residual_probability), layout, perm),
        )
        branches.append(Branch(basis.residual.label, residual_probability, post))
    return branches


def pick_index(probabilities: Sequence[float], u: float) -> int:
    """Index of the branch containing ``u`` in the cumulative distribution.

    The cumulative sums are accumulated left to right in plain float
    arithmetic; callers that cache probabilities and replay this function get
    bit-identical choices to a direct :func:`sample` call.
    """
    cumulative = 0.0
    for i, p in enumerate(probabilities):
        cumulative += p
        if u < cumulative:
            return i
    # u landed in roundoff slack at the top; take the last real branch.
    for i in range(len(probabilities) - 1, -1, -1):
        if probabilities[i] > ZERO_PROBABILITY_ATOL:
            return i
    raise ValueError("all branch probabilities vanish")


def sample(
    state: StateVector,
    basis: MeasurementBasis,
    rng: np.random.Generator,
) -> tuple[str, StateVector]:
    """Draw one outcome with the Born probabilities of :func:`branch_all`.

    Consumes exactly one uniform variate from ``rng``, so outcome sequences
    are reproducible from the generator state alone.
    """
    branches = branch_all(state, basis)
    chosen = branches[pick_index([b.probability for b in branches], float(rng.random()))]
    return chosen.label, chosen.post_state


def condition_on(state: StateVector, basis: MeasurementBasis, label: str) -> StateVector:
    """Project on the labeled outcome and renormalize.

    Raises :class:`InconsistentOutcomeError` when the outcome has
    (near-)zero probability, which signals information inconsistent with the
    state rather than a numerical accident.
    """
    _ensure_valid(basis)
    outcome = basis.outcome(label)
    mat, perm = _target_matrix(state, basis)
    coeffs = outcome.vectors.conj() @ mat
    probability = float(np.sum(np.abs(coeffs) ** 2))
    if probability <= ZERO_PROBABILITY_ATOL:
        raise InconsistentOutcomeError(
            f"outcome {label!r} on {basis.target_names} has probability "
            f"{probability:.3e}; conditioning on it is inconsistent"
        )
    projected = outcome.vectors.T @ coeffs / np.sqrt(probability)
    return StateVector(state.layout, _restore(projected, state.layout, perm))


def outcome_probability(state: StateVector, basis: MeasurementBasis, label: str) -> float:
    """Born probability of one labeled outcome, without collapsing."""
    _ensure_valid(basis)
    outcome = basis.outcome(label)
    mat, _ = _target_matrix(state, basis)
    coeffs = outcome.vectors.conj() @ mat
    return float(np.sum(np.abs(coeffs) ** 2))


def _memory_swap(memory: SystemId, ready: str, label: str) -> np.ndarray:
    swap = np.eye(memory.dimension, dtype=np.complex128)
    i, j = memory.level_index(ready), memory.level_index(label)
    swap[[i, j]] = swap[[j, i]]
    return swap


def premeasure(
    state: StateVector,
    basis: MeasurementBasis,
    memory: SystemId,
    ready: str = "ready",
) -> StateVector:
    """Unitarily write the basis outcome into a memory system.

    Implements the entangling unitary ``sum_o P_o (x) SWAP(ready, o) +
    P_residual (x) 1`` on (targets, memory): each outcome component gets the
    outcome's label written into the memory, without collapse.  The memory
    must hold a level named after every outcome label and must start in its
    ready level on all populated amplitudes.
    """
    _ensure_valid(basis)
    layout = state.layout
    if memory.name not in layout:
        raise LayoutError(f"memory system {memory.name!r} not in state layout")
    if memory.name in basis.target_names:
        raise LayoutError("memory system cannot be part of the measured targets")
    for outcome in basis.outcomes:
        if outcome.label not in memory.levels:
            raise BasisError(
                f"memory {memory.name!r} has no level for outcome {outcome.label!r}"
            )

    names = list(basis.target_names) + [memory.name]
    mat, perm = _moved_matrix(state, names)
    d_t = basis.target_dimension
    d_m = memory.dimension
    cube = mat.reshape(d_t, d_m, -1)

    ready_idx = memory.level_index(ready)
    off_ready = float(np.sum(np.abs(np.delete(cube, ready_idx, axis=1)) ** 2))
    if off_ready > ZERO_PROBABILITY_ATOL:
        raise ValueError(
            f"memory {memory.name!r} is not in its ready state "
            f"(off-ready probability {off_ready:.3e})"
        )

    residual = cube.copy()
    result = np.zeros_like(cube)
    for outcome in basis.outcomes:
        coeffs = np.einsum("kt,tmr->kmr", outcome.vectors.conj(), cube)
        projected = np.einsum("tk,kmr->tmr", outcome.vectors.T, coeffs)
        residual -= projected
        swap = _memory_swap(memory, ready, outcome.label)
        result += np.einsum("nm,tmr->tnr", swap, projected)
    result += residual

    return StateVector(layout, _restore(result.reshape(d_t * d_m, -1), layout, perm))


def record_copy(
    state: StateVector,
    source: SystemId,
    target: SystemId,
    basis: MeasurementBasis | None = None,
    ready: str = "ready",
) -> StateVector:
    """Copy the source system's basis label into a ready target system.

    The designated source basis must be complete (its outcomes span the
    source); by default it is the source's own level basis.  Each component
    ``|x>|ready>`` maps to ``|x>|x>``, so the copy is unitary and preserves
    superpositions between different source labels.
    """
    if basis is None:
        basis = MeasurementBasis(
            targets=(source,),
            outcomes=tuple(
                SubspaceOutcome(label, source.ket(label)) for label in source.levels
            ),
        )
    if basis.target_names != (source.name,):
        raise BasisError("record_copy basis must target exactly the source system")
    report = validate_basis(basis)
    if report.residual_dimension != 0:
        raise BasisError(
            f"source basis is incomplete: residual dimension {report.residual_dimension}"
        )
    return premeasure(state, basis, target, ready=ready)
