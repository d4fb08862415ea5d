"""Named quantum registers and dense state vectors over their tensor product.

A register layout is an ordered tuple of named systems, each with labeled
basis levels.  Amplitudes are stored as a flat complex array indexed
row-major over the declared system order, so the amplitude of the basis
state ``|a>|b>|c>`` for a three-system layout sits at index
``(a * dim_b + b) * dim_c + c``.

All values are immutable after construction and all operations are pure
functions, so states can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

NORM_ATOL = 1e-12


class LayoutError(ValueError):
    """Operands disagree about the register layout."""


@dataclass(frozen=True)
class SystemId:
    """A named system with an ordered tuple of basis level labels."""

    name: str
    levels: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("system name must be non-empty")
        if len(self.levels) < 2:
            raise ValueError(f"system {self.name!r} needs at least 2 levels")
        if len(set(self.levels)) != len(self.levels):
            raise ValueError(f"system {self.name!r} has duplicate level labels")

    @property
    def dimension(self) -> int:
        return len(self.levels)

    def level_index(self, label: str) -> int:
        try:
            return self.levels.index(label)
        except ValueError:
            raise KeyError(f"system {self.name!r} has no level {label!r}") from None

    def ket(self, label: str) -> np.ndarray:
        """Basis ket for one level, as a dense complex array."""
        vec = np.zeros(self.dimension, dtype=np.complex128)
        vec[self.level_index(label)] = 1.0
        return vec


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered collection of distinct systems defining the amplitude indexing."""

    systems: tuple[SystemId, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "systems", tuple(self.systems))
        names = [s.name for s in self.systems]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate system names in layout: {names}")
        if not self.systems:
            raise ValueError("layout must contain at least one system")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dimension for s in self.systems)

    @property
    def total_dimension(self) -> int:
        return int(np.prod(self.dims))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.systems)

    def axis(self, name: str) -> int:
        for i, s in enumerate(self.systems):
            if s.name == name:
                return i
        raise KeyError(f"layout has no system named {name!r}")

    def system(self, name: str) -> SystemId:
        return self.systems[self.axis(name)]

    def __contains__(self, name: object) -> bool:
        return any(s.name == name for s in self.systems)

    def basis_label(self, index: int) -> tuple[str, ...]:
        """Level labels of the product basis state at a flat amplitude index."""
        labels = []
        for dim, sys in zip(self.dims[::-1], self.systems[::-1]):
            index, rem = divmod(index, dim)
            labels.append(sys.levels[rem])
        return tuple(labels[::-1])


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized amplitudes over a layout's product basis."""

    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != self.layout.total_dimension:
            raise LayoutError(
                f"amplitude count {amps.size} does not match layout dimension "
                f"{self.layout.total_dimension}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per system (read-only view)."""
        return self.amplitudes.reshape(self.layout.dims)

    def nonzero_terms(self, tol: float = 1e-12) -> list[tuple[tuple[str, ...], complex]]:
        """(basis labels, amplitude) pairs with magnitude above ``tol``."""
        out = []
        for idx in np.flatnonzero(np.abs(self.amplitudes) > tol):
            out.append((self.layout.basis_label(int(idx)), complex(self.amplitudes[idx])))
        return out


def _as_ket(system: SystemId, factor: np.ndarray | Sequence[complex] | str) -> np.ndarray:
    if isinstance(factor, str):
        return system.ket(factor)
    vec = np.asarray(factor, dtype=np.complex128).reshape(-1)
    if vec.size != system.dimension:
        raise LayoutError(
            f"factor for system {system.name!r} has dimension {vec.size}, "
            f"expected {system.dimension}"
        )
    return vec


def product_state(
    layout: RegisterLayout,
    factors: Mapping[str, np.ndarray | Sequence[complex] | str],
) -> StateVector:
    """Tensor product of one normalized ket per system, in layout order.

    Factors may be given as dense kets or as level labels.  Each factor must
    be normalized; the result then has norm 1 up to roundoff.
    """
    missing = set(layout.names) - set(factors)
    if missing:
        raise LayoutError(f"missing factors for systems: {sorted(missing)}")
    extra = set(factors) - set(layout.names)
    if extra:
        raise LayoutError(f"factors for systems not in layout: {sorted(extra)}")

    amps = np.ones(1, dtype=np.complex128)
    for system in layout.systems:
        ket = _as_ket(system, factors[system.name])
        if abs(np.linalg.norm(ket) - 1.0) > 1e-9:
            raise ValueError(f"factor for system {system.name!r} is not normalized")
        amps = np.kron(amps, ket)
    return StateVector(layout, amps)


def reorder(state: StateVector, target: RegisterLayout) -> StateVector:
    """Permute amplitudes so the same physical state is expressed in ``target``.

    ``target`` must contain exactly the systems of the state's layout.
    """
    source = state.layout
    if sorted(source.names) != sorted(target.names):
        raise LayoutError(
            f"target layout {target.names} is not a permutation of {source.names}"
        )
    for name in source.names:
        if source.system(name) != target.system(name):
            raise LayoutError(f"system {name!r} differs between source and target layout")
    if target.names == source.names:
        return state
    perm = [source.axis(name) for name in target.names]
    amps = state.tensor().transpose(perm).reshape(-1)
    return StateVector(target, amps)


def inner(a: StateVector, b: StateVector) -> complex:
    """Inner product, conjugate-linear in the first argument."""
    if a.layout != b.layout:
        raise LayoutError("inner product requires identical layouts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def equal_up_to_global_phase(a: StateVector, b: StateVector, tol: float = 1e-10) -> bool:
    """True when the states differ by at most a global phase.

    Both states must be normalized within ``tol``; the comparison is
    ``|<a|b>| >= 1 - tol``, so a leading sign or any overall phase is ignored.
    """
    if a.layout != b.layout:
        raise LayoutError("comparison requires identical layouts")
    for side, state in (("first", a), ("second", b)):
        if abs(state.norm - 1.0) > max(tol, NORM_ATOL):
            raise ValueError(f"{side} state is not normalized (norm {state.norm})")
    return bool(abs(inner(a, b)) >= 1.0 - tol)


def _moved_matrix(state: StateVector, target_names: Sequence[str]) -> tuple[np.ndarray, list[int]]:
    """Amplitudes as a (target_dim, rest_dim) matrix with target axes leading."""
    layout = state.layout
    axes = [layout.axis(name) for name in target_names]
    rest = [i for i in range(len(layout.systems)) if i not in axes]
    perm = axes + rest
    dims = layout.dims
    d_t = int(np.prod([dims[i] for i in axes])) if axes else 1
    mat = state.tensor().transpose(perm).reshape(d_t, -1)
    return mat, perm


def _restore(matrix: np.ndarray, layout: RegisterLayout, perm: list[int]) -> np.ndarray:
    dims = layout.dims
    shaped = matrix.reshape([dims[i] for i in perm])
    inv = np.argsort(perm)
    return shaped.transpose(inv).reshape(-1)


def apply_unitary(
    state: StateVector,
    target_names: Sequence[str],
    matrix: np.ndarray,
) -> StateVector:
    """Apply a unitary acting on the joint space of the named systems.

    The matrix is indexed row-major over ``target_names`` in the given order;
    all other systems are untouched.
    """
    layout = state.layout
    mat, perm = _moved_matrix(state, target_names)
    u = np.asarray(matrix, dtype=np.complex128)
    if u.shape != (mat.shape[0], mat.shape[0]):
        raise LayoutError(
            f"unitary shape {u.shape} does not match target dimension {mat.shape[0]}"
        )
    amps = _restore(u @ mat, layout, perm)
    return StateVector(layout, amps)
