"""Written records change the statistics, even when nothing reads them.

A notebook is an extra system that receives a basis copy of a friend's
outcome and is never touched again.  Its mere presence in the round changes
the exact outcome distribution of the later lab measurements, because the
record prevents amplitude cancellation inside the measured lab.
"""

from frsim import ProtocolVariant, enumerate_exact

SUBSETS = (
    ("no notebooks", frozenset()),
    ("coin notebook only", frozenset({"Fbar"})),
    ("spin notebook only", frozenset({"F"})),
    ("both notebooks", frozenset({"Fbar", "F"})),
)

print("Exact per-round statistics across notebook configurations")
print()
header = f"{'configuration':22} {'P(coin ok)':>12} {'P(both ok)':>12} {'P(up | coin ok)':>16}"
print(header)
print("-" * len(header))

for label, notebooks in SUBSETS:
    plain = enumerate_exact(ProtocolVariant(announce_wbar=False, notebooks=notebooks))
    probing = enumerate_exact(
        ProtocolVariant(announce_wbar=False, notebooks=notebooks, intrusion=True)
    )
    print(
        f"{label:22} {plain.marginal_wbar('ok'):>12.6f} "
        f"{plain.joint_wbar_w('ok', 'ok'):>12.6f} "
        f"{probing.conditional_intrusion('up'):>16.6f}"
    )

print()
print("Reading the table:")
print(" * Without records the halting condition (both ok) happens in 1/12")
print("   of the rounds and an ok coin lab guarantees the spin is up.")
print(" * The coin notebook alone triples the coin-lab ok rate (1/6 -> 1/2)")
print("   and drops the guaranteed 'up' to one third.")
print(" * The spin notebook alone changes neither: its entry is identical")
print("   in the branches that interfere, so the cancellation survives.")
print(" * With both notebooks the halting condition fires in 1/4 of the")
print("   rounds, three times as often as without records.")
