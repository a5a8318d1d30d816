from __future__ import annotations

import pytest

from popdyn.fixtures import FIXTURE_NAMES, fixture_population
from popdyn.oracle import build_transition_digraph

BIG_GUARD = 20_000_000


@pytest.fixture(scope="session")
def pops():
    return {name: fixture_population(name) for name in FIXTURE_NAMES}


@pytest.fixture(scope="session")
def graphs(pops):
    """Lazy per-fixture oracle digraphs, built once and shared."""
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = build_transition_digraph(pops[name], max_states=BIG_GUARD)
        return cache[name]

    return get
