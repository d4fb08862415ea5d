"""The two-lab protocol as an executable, seeded stochastic process.

One round runs four steps:

* t=0  the coin is measured by its friend (unitary premeasurement), the spin
       is prepared conditionally on the coin, enabled notebooks are written;
* t=1  the spin is measured by its friend (+ notebook copy);
* t=2  the coin-lab superobserver measures the coin lab in the ok/fail basis
       (sampled collapse recorded into its memory);
* t=3  the spin-lab superobserver does the same for the spin lab.

The round halts the experiment when both superobservers record ``ok``.  In
the intrusion variant, an ``ok`` at t=2 is followed by a direct spin
measurement and the round is aborted instead of continuing to t=3.

Randomness contract: one master seed; round ``k`` draws from an independent
substream derived from ``(seed, k)``; each sampled measurement consumes
exactly one uniform variate.  Rounds are therefore reproducible and safe to
execute in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import sqrt

import numpy as np

from .measurement import branch_all, pick_index, premeasure, record_copy, sample
from .systems import (
    F,
    FBAR,
    N,
    NBAR,
    R,
    S,
    W,
    WBAR,
    canonical_layout,
    coin_lab_basis,
    record_basis,
    spin_basis,
    spin_lab_basis,
)
from .tensor import StateVector, apply_unitary, product_state

FRIENDS_WITH_NOTEBOOKS = ("Fbar", "F")

# (coin-lab outcome, spin-lab outcome, intrusion outcome); entries are None
# where the round did not produce that outcome.
OutcomeKey = tuple[str | None, str | None, str | None]


@dataclass(frozen=True)
class ProtocolVariant:
    """Which optional features of the protocol are switched on.

    ``announce_wbar`` toggles the original protocol (the coin-lab
    superobserver announces at t=2, and agents condition on heard
    announcements) versus the modified one where that outcome stays secret
    and no announcement-based updates occur.  ``notebooks`` lists the friends
    who keep a written record.  ``cheat`` marks the coin friend's notebook as
    secret: it still exists physically but other agents do not model it.
    ``intrusion`` makes the coin-lab superobserver measure the spin directly
    after recording ``ok`` at t=2.
    """

    announce_wbar: bool = True
    notebooks: frozenset[str] = frozenset()
    cheat: bool = False
    intrusion: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "notebooks", frozenset(self.notebooks))
        unknown = self.notebooks - set(FRIENDS_WITH_NOTEBOOKS)
        if unknown:
            raise ValueError(f"notebooks must be a subset of {FRIENDS_WITH_NOTEBOOKS}, "
                             f"got extra {sorted(unknown)}")
        if self.cheat and "Fbar" not in self.notebooks:
            raise ValueError("cheat mode requires the coin friend's notebook")

    def system_names(self) -> tuple[str, ...]:
        names = ["R", "Fbar", "S", "F", "Wbar", "W"]
        if "Fbar" in self.notebooks:
            names.append("Nbar")
        if "F" in self.notebooks:
            names.append("N")
        return tuple(sys.name for sys in canonical_layout(names).systems)

    def layout(self):
        return canonical_layout(self.system_names())


@dataclass(frozen=True)
class ProtocolConfig:
    """A variant plus the seeding and bounds of a stochastic run."""

    variant: ProtocolVariant
    seed: int = 0
    max_rounds: int = 10000

    def __post_init__(self) -> None:
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")


@dataclass(frozen=True)
class RoundTranscript:
    """Sampled outcomes and announcements of one protocol round."""

    round_index: int
    wbar_outcome: str | None
    w_outcome: str | None
    intrusion_outcome: str | None
    announcements: tuple[tuple[int, str, str], ...]
    halted: bool

    def key(self) -> OutcomeKey:
        return (self.wbar_outcome, self.w_outcome, self.intrusion_outcome)


@dataclass(frozen=True)
class RunReport:
    """Transcripts and empirical statistics of a repeated-round run."""

    config: ProtocolConfig
    transcripts: tuple[RoundTranscript, ...]
    halted: bool
    halting_round: int | None
    outcome_counts: dict[OutcomeKey, int]

    @property
    def rounds_executed(self) -> int:
        return len(self.transcripts)

    def frequencies(self) -> dict[OutcomeKey, tuple[int, float, float]]:
        """Per outcome: (count, relative frequency, binomial standard error)."""
        n = self.rounds_executed
        out = {}
        for key, count in sorted(self.outcome_counts.items(), key=str):
            p = count / n
            out[key] = (count, p, sqrt(p * (1.0 - p) / n))
        return out


def round_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent substream for one round, addressable by (seed, *key)."""
    entropy = (int(seed),) + tuple(int(k) for k in key)
    return np.random.default_rng(np.random.SeedSequence(entropy=entropy))


_COIN_SUPERPOSITION = np.array([sqrt(2.0 / 3.0), sqrt(1.0 / 3.0)], dtype=np.complex128)

# Spin preparation, acting on (R, S): tail rotates the resting spin into
# (|up> + |down>)/sqrt(2), head leaves it in |down>.
_TAIL_ROTATION = np.array([[1.0, 1.0], [-1.0, 1.0]], dtype=np.complex128) / sqrt(2.0)
_PREPARE_SPIN = np.block([
    [_TAIL_ROTATION, np.zeros((2, 2))],
    [np.zeros((2, 2)), np.eye(2)],
]).astype(np.complex128)


def initial_state(variant: ProtocolVariant) -> StateVector:
    """Fresh-round state: coin superposed, everything else ready.

    The coin starts in ``sqrt(2/3)|t> + sqrt(1/3)|h>``; the spin rests in
    ``down`` until prepared; memories and enabled notebooks are ready.
    """
    layout = variant.layout()
    factors: dict[str, object] = {"R": _COIN_SUPERPOSITION, "S": "down"}
    for name in layout.names:
        if name not in factors:
            factors[name] = "ready"
    return product_state(layout, factors)


def step_t0(state: StateVector, variant: ProtocolVariant) -> StateVector:
    """Coin measured by its friend, notebook written, spin prepared."""
    state = record_copy(state, R, FBAR)
    if "Fbar" in variant.notebooks:
        state = record_copy(state, R, NBAR)
    return apply_unitary(state, ("R", "S"), _PREPARE_SPIN)


def step_t1(state: StateVector, variant: ProtocolVariant) -> StateVector:
    """Spin measured by its friend (+ notebook copy)."""
    state = record_copy(state, S, F)
    if "F" in variant.notebooks:
        state = record_copy(state, S, N)
    return state


def step_t2(
    state: StateVector,
    variant: ProtocolVariant,
    rng: np.random.Generator,
) -> tuple[StateVector, str, str | None]:
    """Coin lab measured and recorded; optional intrusion on ``ok``.

    Returns the post-measurement state, the sampled coin-lab outcome, and
    the intrusion outcome (None unless the intrusion variant fired).
    """
    state = premeasure(state, coin_lab_basis(), WBAR)
    label, state = sample(state, record_basis(WBAR), rng)
    intrusion_outcome = None
    if variant.intrusion and label == "ok":
        intrusion_outcome, state = sample(state, spin_basis(), rng)
    return state, label, intrusion_outcome


def step_t3(state: StateVector, rng: np.random.Generator) -> tuple[StateVector, str]:
    """Spin lab measured and recorded."""
    state = premeasure(state, spin_lab_basis(), W)
    label, state = sample(state, record_basis(W), rng)
    return state, label


def state_after_preparation(variant: ProtocolVariant) -> StateVector:
    """Deterministic state after t=1, before any sampled measurement."""
    return step_t1(step_t0(initial_state(variant), variant), variant)


def _transcript(
    variant: ProtocolVariant,
    round_index: int,
    wbar: str,
    w: str | None,
    intrusion: str | None,
) -> RoundTranscript:
    announcements: list[tuple[int, str, str]] = []
    if variant.announce_wbar:
        announcements.append((2, "Wbar", wbar))
    if w is not None:
        announcements.append((3, "W", w))
    halted = wbar == "ok" and w == "ok"
    return RoundTranscript(
        round_index=round_index,
        wbar_outcome=wbar,
        w_outcome=w,
        intrusion_outcome=intrusion,
        announcements=tuple(announcements),
        halted=halted,
    )


def run_round(
    variant: ProtocolVariant,
    rng: np.random.Generator,
    round_index: int = 0,
) -> RoundTranscript:
    """Execute one full round on a fresh set of systems (reference path)."""
    state = state_after_preparation(variant)
    state, wbar, intrusion = step_t2(state, variant, rng)
    if intrusion is not None:
        return _transcript(variant, round_index, wbar, None, intrusion)
    state, w = step_t3(state, rng)
    return _transcript(variant, round_index, wbar, w, intrusion)


class RoundSampler:
    """Precomputed branch tree of one round's sampled measurements.

    The unitary prefix of a round is deterministic, so repeated rounds only
    differ in the sampled collapses.  This caches the exact branch
    probabilities (computed with the same operations as the reference path)
    and replays the sampling logic, draw for draw, without touching state
    vectors again.  ``draw`` consumes uniforms in the same order and against
    the same cumulative sums as :func:`run_round`, so both paths produce
    identical transcripts for identical generator states.
    """

    def __init__(self, variant: ProtocolVariant):
        self.variant = variant
        prepared = premeasure(state_after_preparation(variant), coin_lab_basis(), WBAR)
        self._wbar_probs: list[float] = []
        self._wbar_labels: list[str] = []
        self._leaves: list[tuple[str, list[str], list[float]]] = []
        for branch in branch_all(prepared, record_basis(WBAR)):
            self._wbar_labels.append(branch.label)
            self._wbar_probs.append(branch.probability)
            if branch.probability <= 0.0:
                self._leaves.append(("none", [], []))
                continue
            if variant.intrusion and branch.label == "ok":
                spin = branch_all(branch.post_state, spin_basis())
                self._leaves.append(
                    ("intrusion", [b.label for b in spin], [b.probability for b in spin])
                )
            else:
                lab = premeasure(branch.post_state, spin_lab_basis(), W)
                wb = branch_all(lab, record_basis(W))
                self._leaves.append(("w", [b.label for b in wb], [b.probability for b in wb]))

    def draw(self, rng: np.random.Generator, round_index: int = 0) -> RoundTranscript:
        i = pick_index(self._wbar_probs, float(rng.random()))
        wbar = self._wbar_labels[i]
        kind, labels, probs = self._leaves[i]
        j = pick_index(probs, float(rng.random()))
        if kind == "intrusion":
            return _transcript(self.variant, round_index, wbar, None, labels[j])
        return _transcript(self.variant, round_index, wbar, labels[j], None)


@lru_cache(maxsize=None)
def compiled_round(variant: ProtocolVariant) -> RoundSampler:
    """Shared per-variant branch tree; samplers are immutable after build."""
    return RoundSampler(variant)


def run_until_halt(config: ProtocolConfig, stream: tuple[int, ...] = ()) -> RunReport:
    """Repeat rounds until the halting condition or ``max_rounds``.

    ``stream`` prefixes the per-round substream key, so independent
    repetitions of the whole run can share one master seed.
    """
    sampler = compiled_round(config.variant)
    transcripts: list[RoundTranscript] = []
    counts: dict[OutcomeKey, int] = {}
    halted = False
    halting_round = None
    for k in range(config.max_rounds):
        transcript = sampler.draw(round_rng(config.seed, *stream, k), k)
        transcripts.append(transcript)
        key = transcript.key()
        counts[key] = counts.get(key, 0) + 1
        if transcript.halted:
            halted = True
            halting_round = k
            break
    return RunReport(
        config=config,
        transcripts=tuple(transcripts),
        halted=halted,
        halting_round=halting_round,
        outcome_counts=counts,
    )
