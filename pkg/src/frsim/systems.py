"""The systems and standard bases of the two-lab protocol.

Systems:

* ``R``     quantum coin with levels ``t`` (tail) and ``h`` (head)
* ``S``     spin-1/2 particle with levels ``up`` and ``down``
* ``Fbar``  friend operating the coin lab; memory levels ``ready``/``t``/``h``
* ``F``     friend operating the spin lab; memory levels ``ready``/``up``/``down``
* ``Wbar``  superobserver measuring the coin lab; records ``ok``/``fail``
* ``W``     superobserver measuring the spin lab; records ``ok``/``fail``
* ``Nbar``  notebook holding a copy of the coin outcome
* ``N``     notebook holding a copy of the spin outcome

The coin lab is the pair ``(R, Fbar)``; the spin lab is ``(S, F)``.  Every
observer memory and notebook starts in a distinguished ``ready`` level and is
written exactly once by a basis-copy unitary.

All states are stored in one canonical system order so fixtures and
cross-agent comparisons are unambiguous.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .measurement import MeasurementBasis, ResidualPolicy, SubspaceOutcome
from .tensor import RegisterLayout, SystemId

READY = "ready"

R = SystemId("R", ("t", "h"))
S = SystemId("S", ("up", "down"))
FBAR = SystemId("Fbar", (READY, "t", "h"))
F = SystemId("F", (READY, "up", "down"))
WBAR = SystemId("Wbar", (READY, "ok", "fail"))
W = SystemId("W", (READY, "ok", "fail"))
NBAR = SystemId("Nbar", (READY, "t", "h"))
N = SystemId("N", (READY, "up", "down"))

CANONICAL_ORDER: tuple[SystemId, ...] = (NBAR, R, FBAR, N, S, F, WBAR, W)
BY_NAME: dict[str, SystemId] = {sys.name: sys for sys in CANONICAL_ORDER}

COIN_LAB: tuple[str, str] = ("R", "Fbar")
SPIN_LAB: tuple[str, str] = ("S", "F")

# Residual tolerance for the lab bases: the ok/fail vectors span only part of
# the lab space, but no reachable protocol state leaves that span.
LAB_RESIDUAL_TOL = 1e-9


def canonical_layout(names: Iterable[str]) -> RegisterLayout:
    """Layout over the given systems, ordered canonically."""
    wanted = set(names)
    unknown = wanted - set(BY_NAME)
    if unknown:
        raise KeyError(f"unknown system names: {sorted(unknown)}")
    return RegisterLayout(tuple(sys for sys in CANONICAL_ORDER if sys.name in wanted))


def coin_basis() -> MeasurementBasis:
    """Complete ``{t, h}`` basis on the coin."""
    return MeasurementBasis(
        targets=(R,),
        outcomes=(SubspaceOutcome("t", R.ket("t")), SubspaceOutcome("h", R.ket("h"))),
    )


def spin_basis() -> MeasurementBasis:
    """Complete ``{up, down}`` basis on the spin."""
    return MeasurementBasis(
        targets=(S,),
        outcomes=(SubspaceOutcome("up", S.ket("up")), SubspaceOutcome("down", S.ket("down"))),
    )


def _lab_vectors(first: SystemId, second: SystemId, pairs: tuple[tuple[str, str], ...],
                 signs: tuple[float, ...]) -> np.ndarray:
    vec = np.zeros(first.dimension * second.dimension, dtype=np.complex128)
    for (a, b), sign in zip(pairs, signs):
        vec += sign * np.kron(first.ket(a), second.ket(b))
    return vec / np.sqrt(2.0)


def coin_lab_basis() -> MeasurementBasis:
    """``ok``/``fail`` basis on the coin lab ``(R, Fbar)``.

    ``ok`` is the odd combination ``(|h,h> - |t,t>)/sqrt(2)``, ``fail`` the
    even one; the rest of the lab space is a forbidden residual.
    """
    pairs = (("h", "h"), ("t", "t"))
    return MeasurementBasis(
        targets=(R, FBAR),
        outcomes=(
            SubspaceOutcome("ok", _lab_vectors(R, FBAR, pairs, (1.0, -1.0))),
            SubspaceOutcome("fail", _lab_vectors(R, FBAR, pairs, (1.0, 1.0))),
        ),
        residual=ResidualPolicy.forbid(LAB_RESIDUAL_TOL),
    )


def spin_lab_basis() -> MeasurementBasis:
    """``ok``/``fail`` basis on the spin lab ``(S, F)``."""
    pairs = (("down", "down"), ("up", "up"))
    return MeasurementBasis(
        targets=(S, F),
        outcomes=(
            SubspaceOutcome("ok", _lab_vectors(S, F, pairs, (1.0, -1.0))),
            SubspaceOutcome("fail", _lab_vectors(S, F, pairs, (1.0, 1.0))),
        ),
        residual=ResidualPolicy.forbid(LAB_RESIDUAL_TOL),
    )


def record_basis(memory: SystemId) -> MeasurementBasis:
    """Basis over a memory's written levels; the unwritten ready level is forbidden."""
    outcomes = tuple(
        SubspaceOutcome(label, memory.ket(label))
        for label in memory.levels
        if label != READY
    )
    return MeasurementBasis(
        targets=(memory,),
        outcomes=outcomes,
        residual=ResidualPolicy.forbid(LAB_RESIDUAL_TOL),
    )


def level_basis(system: SystemId) -> MeasurementBasis:
    """Complete basis over all levels of one system."""
    return MeasurementBasis(
        targets=(system,),
        outcomes=tuple(SubspaceOutcome(label, system.ket(label)) for label in system.levels),
    )
