"""Detect a hidden notebook in one lab by measuring only the other lab.

The participants agreed to keep no records, but the coin friend secretly
writes her outcome into a hidden notebook.  The coin-lab observer, trusting
the record-free analysis, expects the spin to be up with certainty whenever
his lab reads ok.  Sampling the actual rounds shows 'up' only a third of the
time: the statistics betray the existence of the record, although nothing
ever interacted with it.
"""

from frsim import ProtocolConfig, ProtocolVariant, detect_records

ROUNDS = 20000
SEED = 11

print(f"Running {ROUNDS} intrusion rounds per scenario (seed {SEED})")
print()

for label, cheating in (("everyone honest", False), ("secret coin notebook", True)):
    variant = ProtocolVariant(
        announce_wbar=False,
        notebooks=frozenset({"Fbar"}) if cheating else frozenset(),
        cheat=cheating,
        intrusion=True,
    )
    report = detect_records(ProtocolConfig(variant=variant, seed=SEED), ROUNDS)
    print(f"scenario: {label}")
    print(f"  post-selected ok rounds : {report.ok_rounds}")
    print(f"  spin found up           : {report.up_count}")
    print(f"  observed up fraction    : {report.observed_up_fraction:.4f}")
    print(f"  no-record prediction    : {report.predicted_up_fraction_no_record:.4f}")
    print(f"  99% upper bound on P(up): {report.threshold:.4f}")
    print(f"  decision                : {report.decision}")
    print()

print("A single 'down' already settles the question in principle, since the")
print("record-free protocol makes 'down' impossible after an ok; the")
print("confidence bound just quantifies how decisively the data rule it out.")
