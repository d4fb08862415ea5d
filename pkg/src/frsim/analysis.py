"""Exact branch enumeration, Monte Carlo statistics, and record detection.

:func:`enumerate_exact` expands the full amplitude tree of one round and is
the verification oracle for every sampled statistic.  :func:`monte_carlo`
produces empirical frequency tables from independent seeded rounds.
:func:`detect_records` runs the interaction-free detection experiment: it
post-selects rounds where the coin lab reported ``ok``, measures the spin
directly, and decides from the up-fraction whether a hidden record of the
coin outcome exists inside the coin lab.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

from scipy import stats

from .measurement import branch_all, premeasure
from .protocol import (
    OutcomeKey,
    ProtocolConfig,
    ProtocolVariant,
    compiled_round,
    round_rng,
    state_after_preparation,
)
from .systems import W, WBAR, coin_lab_basis, record_basis, spin_basis, spin_lab_basis

PROBABILITY_ATOL = 1e-10


@dataclass(frozen=True)
class JointDistribution:
    """Exact probabilities over round outcome keys."""

    entries: dict[OutcomeKey, float]

    def __post_init__(self) -> None:
        for key, p in self.entries.items():
            if p < -PROBABILITY_ATOL:
                raise ValueError(f"negative probability {p} for {key}")
        total = sum(self.entries.values())
        if abs(total - 1.0) > PROBABILITY_ATOL:
            raise ValueError(f"probabilities sum to {total}, not 1")

    def probability(self, key: OutcomeKey) -> float:
        return self.entries.get(key, 0.0)

    def marginal_wbar(self, label: str) -> float:
        return sum(p for key, p in self.entries.items() if key[0] == label)

    def joint_wbar_w(self, wbar: str, w: str) -> float:
        return sum(p for key, p in self.entries.items() if key[0] == wbar and key[1] == w)

    def conditional_w(self, w: str, given_wbar: str) -> float:
        return self.joint_wbar_w(given_wbar, w) / self.marginal_wbar(given_wbar)

    def conditional_intrusion(self, outcome: str, given_wbar: str = "ok") -> float:
        joint = sum(
            p for key, p in self.entries.items()
            if key[0] == given_wbar and key[2] == outcome
        )
        return joint / self.marginal_wbar(given_wbar)


@dataclass(frozen=True)
class FrequencyTable:
    """Empirical counts over round outcome keys."""

    counts: dict[OutcomeKey, int]
    total: int

    def __post_init__(self) -> None:
        if sum(self.counts.values()) != self.total:
            raise ValueError("counts do not sum to the round total")

    def frequency(self, key: OutcomeKey) -> float:
        return self.counts.get(key, 0) / self.total

    def std_error(self, key: OutcomeKey) -> float:
        p = self.frequency(key)
        return sqrt(p * (1.0 - p) / self.total)

    def keys(self) -> list[OutcomeKey]:
        return sorted(self.counts, key=str)


@dataclass(frozen=True)
class DetectionReport:
    """Outcome of the interaction-free record-detection experiment.

    ``threshold`` is the one-sided upper confidence bound on the probability
    of seeing the spin up given an ``ok`` coin-lab outcome.  Without any
    record that probability is exactly 1, so a bound strictly below 1 means a
    record must exist inside the coin lab.
    """

    rounds: int
    ok_rounds: int
    up_count: int
    observed_up_fraction: float | None
    predicted_up_fraction_no_record: float
    threshold: float | None
    confidence: float
    min_ok_rounds: int
    decision: str


def enumerate_exact(variant: ProtocolVariant) -> JointDistribution:
    """Exhaustive amplitude tree over the round's sampled measurements.

    Walks every coin-lab branch and, per branch, every spin-lab (or
    intrusion) branch, multiplying exact Born probabilities.  No randomness
    is involved.
    """
    prepared = premeasure(state_after_preparation(variant), coin_lab_basis(), WBAR)
    entries: dict[OutcomeKey, float] = {}
    for branch in branch_all(prepared, record_basis(WBAR)):
        if branch.probability <= 0.0:
            continue
        if variant.intrusion and branch.label == "ok":
            for spin in branch_all(branch.post_state, spin_basis()):
                if spin.probability <= 0.0:
                    continue
                entries[(branch.label, None, spin.label)] = branch.probability * spin.probability
        else:
            lab = premeasure(branch.post_state, spin_lab_basis(), W)
            for wb in branch_all(lab, record_basis(W)):
                if wb.probability <= 0.0:
                    continue
                entries[(branch.label, wb.label, None)] = branch.probability * wb.probability
    return JointDistribution(entries)


def monte_carlo(
    config: ProtocolConfig,
    rounds: int,
    stream: tuple[int, ...] = (),
) -> FrequencyTable:
    """Frequencies over ``rounds`` independent rounds (no halting).

    Round ``k`` uses the substream keyed by ``(seed, *stream, k)``, so the
    table is deterministic per seed and rounds can be partitioned across
    workers without changing the result.
    """
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    sampler = compiled_round(config.variant)
    counts: dict[OutcomeKey, int] = {}
    for k in range(rounds):
        transcript = sampler.draw(round_rng(config.seed, *stream, k), k)
        key = transcript.key()
        counts[key] = counts.get(key, 0) + 1
    return FrequencyTable(counts=counts, total=rounds)


def z_scores(table: FrequencyTable, exact: JointDistribution) -> dict[OutcomeKey, float]:
    """Standardized deviations of empirical frequencies from exact values."""
    out: dict[OutcomeKey, float] = {}
    keys = set(table.counts) | set(exact.entries)
    for key in sorted(keys, key=str):
        p = exact.probability(key)
        se = sqrt(p * (1.0 - p) / table.total)
        diff = table.frequency(key) - p
        out[key] = diff / se if se > 0 else (0.0 if diff == 0 else float("inf"))
    return out


def binomial_upper_bound(successes: int, trials: int, confidence: float = 0.99) -> float:
    """One-sided Clopper-Pearson upper confidence bound for a proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if successes >= trials:
        return 1.0
    return float(stats.beta.ppf(confidence, successes + 1, trials - successes))


def detect_records(
    config: ProtocolConfig,
    rounds: int,
    confidence: float = 0.99,
    min_ok_rounds: int = 30,
) -> DetectionReport:
    """Run the detection experiment and decide whether a record exists.

    Requires the intrusion variant.  Among rounds whose coin-lab outcome was
    ``ok``, the spin is found up with probability 1 when no coin record
    exists and with probability 1/3 when one does, so any observed ``down``
    is decisive; the confidence bound quantifies it.
    """
    if not config.variant.intrusion:
        raise ValueError("record detection requires the intrusion variant")
    table = monte_carlo(config, rounds)
    ok_rounds = sum(
        count for key, count in table.counts.items() if key[0] == "ok" and key[2] is not None
    )
    up_count = sum(
        count
        for key, count in table.counts.items()
        if key[0] == "ok" and key[2] == "up"
    )
    if ok_rounds < min_ok_rounds:
        return DetectionReport(
            rounds=rounds,
            ok_rounds=ok_rounds,
            up_count=up_count,
            observed_up_fraction=None,
            predicted_up_fraction_no_record=1.0,
            threshold=None,
            confidence=confidence,
            min_ok_rounds=min_ok_rounds,
            decision="inconclusive",
        )
    fraction = up_count / ok_rounds
    bound = binomial_upper_bound(up_count, ok_rounds, confidence)
    decision = "record-detected" if bound < 1.0 else "no-record"
    return DetectionReport(
        rounds=rounds,
        ok_rounds=ok_rounds,
        up_count=up_count,
        observed_up_fraction=fraction,
        predicted_up_fraction_no_record=1.0,
        threshold=bound,
        confidence=confidence,
        min_ok_rounds=min_ok_rounds,
        decision=decision,
    )
