"""Hand-expanded amplitude trees, independent of the package under test.

Everything here is plain Python floats and dicts: the round state after both
friends have measured is written out term by term, and lab outcomes are
computed by explicit substitution of the ok/fail combinations.  Used as the
independent oracle for the exact enumeration results.
"""

from math import sqrt

# Decomposition of a perfectly correlated pair in the ok/fail lab basis:
# |t,t> = (|fail> - |ok>)/sqrt(2),  |h,h> = (|fail> + |ok>)/sqrt(2)
# and identically for (up,up)/(down,down) on the spin lab.
_PAIR_TO_LAB = {
    ("t", "t"): {"fail": 1.0 / sqrt(2.0), "ok": -1.0 / sqrt(2.0)},
    ("h", "h"): {"fail": 1.0 / sqrt(2.0), "ok": 1.0 / sqrt(2.0)},
    ("up", "up"): {"fail": 1.0 / sqrt(2.0), "ok": -1.0 / sqrt(2.0)},
    ("down", "down"): {"fail": 1.0 / sqrt(2.0), "ok": 1.0 / sqrt(2.0)},
}


def plain_round_terms():
    """State after t=1, no notebooks: keys (r, fbar, s, f)."""
    a = 1.0 / sqrt(3.0)
    return {
        ("t", "t", "up", "up"): a,
        ("t", "t", "down", "down"): a,
        ("h", "h", "down", "down"): a,
    }


def notebook_round_terms(coin_notebook: bool, spin_notebook: bool):
    """State after t=1 with notebooks: keys (nbar, r, fbar, n, s, f).

    Disabled notebooks are pinned to the placeholder level "ready".
    """
    a = 1.0 / sqrt(3.0)
    terms = {}
    for r, s_pairs in (("t", (("up", "up"), ("down", "down"))), ("h", (("down", "down"),))):
        for s, f in s_pairs:
            nbar = r if coin_notebook else "ready"
            n = s if spin_notebook else "ready"
            terms[(nbar, r, r, n, s, f)] = a
    return terms


def _project_coin_lab(terms, label):
    """Project on one coin-lab outcome; keys drop (r, fbar), keep the rest."""
    out = {}
    for key, amp in terms.items():
        *prefix, r, fbar, n, s, f = _normalize(key)
        coeffs = _PAIR_TO_LAB.get((r, fbar))
        assert coeffs is not None, f"term {key} lies outside the ok/fail span"
        new_key = tuple(prefix) + (n, s, f)
        out[new_key] = out.get(new_key, 0.0) + amp * coeffs[label]
    return {k: v for k, v in out.items() if abs(v) > 1e-15}


def _normalize(key):
    # Plain rounds carry no notebook slots; pad them for uniform handling.
    if len(key) == 4:
        r, fbar, s, f = key
        return ("ready", r, fbar, "ready", s, f)
    return key


def _weight(terms):
    return sum(abs(a) ** 2 for a in terms.values())


def coin_lab_probability(terms, label):
    return _weight(_project_coin_lab(terms, label))


def joint_probability(terms, coin_label, spin_label):
    """P(coin lab outcome and spin lab outcome) by full substitution."""
    projected = _project_coin_lab(terms, coin_label)
    out = {}
    for (nbar, n, s, f), amp in projected.items():
        coeffs = _PAIR_TO_LAB.get((s, f))
        assert coeffs is not None, f"spin term ({s},{f}) lies outside the ok/fail span"
        # Interference happens within identical record keys only.
        new_key = (nbar, n)
        out[new_key] = out.get(new_key, 0.0) + amp * coeffs[spin_label]
    return sum(abs(v) ** 2 for v in out.values())


def spin_up_probability_given_coin(terms, coin_label="ok"):
    """P(spin up | coin lab outcome), reading the spin level directly."""
    projected = _project_coin_lab(terms, coin_label)
    weight = _weight(projected)
    up = sum(abs(a) ** 2 for (nbar, n, s, f), a in projected.items() if s == "up")
    return up / weight
