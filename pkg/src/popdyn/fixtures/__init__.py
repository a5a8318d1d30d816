"""Bundled example populations, loadable by name."""

from __future__ import annotations

import json
from importlib import resources

FIXTURE_NAMES = ("ex1", "ex2", "ex3", "ex7_1", "ex7_2", "ex7_3", "ex7_4")


def fixture_config(name: str) -> dict:
    """Raw JSON dict of a bundled fixture."""
    if name not in FIXTURE_NAMES:
        raise KeyError(f"unknown fixture {name!r}; have {FIXTURE_NAMES}")
    text = resources.files(__package__).joinpath(f"{name}.json").read_text()
    return json.loads(text)


def fixture_population(name: str):
    from ..model import validate_population

    return validate_population(fixture_config(name))
