"""Seeded random small populations for the cross-check suites."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from popdyn.errors import DuplicateTemper, IntegerTemper
from popdyn.model import UtilityLine, validate_population


def _random_rational(rng, lo: int, hi: int, max_den: int = 8) -> Fraction:
    den = int(rng.integers(1, max_den + 1))
    num = int(rng.integers(lo * den, hi * den + 1))
    return Fraction(num, den)


def _lines_crossing_at(rng, tau: Fraction, kind: str) -> tuple[UtilityLine, UtilityLine]:
    # slope gap sign decides the kind: negative for anticoordinating
    while True:
        s_c = _random_rational(rng, -6, 6)
        s_d = _random_rational(rng, -6, 6)
        gap = s_c - s_d
        if gap == 0:
            continue
        if (kind == "anticoordinating") == (gap < 0):
            break
    i_d = _random_rational(rng, -10, 10)
    i_c = i_d + tau * (s_d - s_c)
    return UtilityLine(s_c, i_c), UtilityLine(s_d, i_d)


def random_population(rng: np.random.Generator, max_agents: int = 14, max_types: int = 3):
    """One random heterogeneous population; may raise on unlucky draws."""
    while True:
        b = int(rng.integers(0, max_types + 1))
        bp = int(rng.integers(0 if b else 1, max_types - b + 1))
        if 1 <= b + bp <= max_types:
            break
    types = {"anticoordinating": [], "coordinating": []}
    total = 0
    n_types = b + bp
    for pos in range(n_types):
        kind = "anticoordinating" if pos < b else "coordinating"
        best = int(rng.integers(1, 4))
        imit = int(rng.integers(0, 4)) if rng.random() < 0.7 else 0
        types[kind].append({"bestResponders": best, "imitators": imit})
        total += best + imit
    if total > max_agents:
        raise ValueError("too many agents")
    n = total
    for kind in ("anticoordinating", "coordinating"):
        for t in types[kind]:
            tau_num = int(rng.integers(-4 * 2, (n + 4) * 2)) * 2 + 1  # odd => non-integer
            tau = Fraction(tau_num, 2) if rng.random() < 0.7 else _random_rational(rng, -3, n + 3)
            if tau.denominator == 1:
                tau += Fraction(1, 2)
            coop, defect = _lines_crossing_at(rng, tau, kind)
            t["uC"] = coop
            t["uD"] = defect
    return validate_population(types)


def sample_populations(seed: int, count: int, max_agents: int = 14, max_types: int = 3):
    """Yield exactly `count` valid populations, deterministically from the seed."""
    rng = np.random.default_rng(seed)
    produced = 0
    while produced < count:
        try:
            pop = random_population(rng, max_agents, max_types)
        except (ValueError, DuplicateTemper, IntegerTemper):
            continue
        produced += 1
        yield pop
