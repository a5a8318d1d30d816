"""Analytic-vs-oracle cross-checks shared by the CLI --verify flag and the tests.

Each verifier returns a list of problem strings; an empty list means every
cross-check agreed. Checks that would exceed the state guard are reported as
skips, not failures.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from . import equilibria as eq
from . import invariants as inv
from . import stochastic as st
from .errors import AssumptionViolated, StateSpaceTooLarge
from .model import PopulationSpec, State
from .oracle import (
    TransitionDigraph,
    is_equilibrium_oracle,
    is_stable_oracle,
    minimal_invariant_sets,
)

DEFAULT_S_GUARD = 200_000


def iter_pooled_states(pop: PopulationSpec):
    ranges = [range(pop.m + 1)]
    ranges += [range(pop.n_a(i) + 1) for i in range(1, pop.b + 1)]
    ranges += [range(pop.n_c(i) + 1) for i in range(1, pop.bp + 1)]
    for values in product(*ranges):
        yield State(values[0], values[1 : 1 + pop.b], values[1 + pop.b :])


def _sample_pooled_states(pop: PopulationSpec, count: int, seed: int) -> list[State]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        xI = int(rng.integers(pop.m + 1))
        xa = tuple(int(rng.integers(pop.n_a(i) + 1)) for i in range(1, pop.b + 1))
        xc = tuple(int(rng.integers(pop.n_c(i) + 1)) for i in range(1, pop.bp + 1))
        out.append(State(xI, xa, xc))
    return out


def verify_equilibria(pop: PopulationSpec, graph: TransitionDigraph,
                      sample: int = 200, seed: int = 0) -> list[str]:
    """Analytic enumeration vs oracle sinks, stability lemmas vs reachability,
    and the cooperation-preserving-group equivalence."""
    problems: list[str] = []
    records = eq.enumerate_equilibria(pop)
    analytic = {r.state for r in records}
    sinks = minimal_invariant_sets(graph)
    oracle_eqs = {next(iter(s.states)) for s in sinks if s.is_singleton}
    if analytic != oracle_eqs:
        problems.append(
            f"equilibrium sets differ: analytic {sorted(s.to_tuple() for s in analytic)} "
            f"vs oracle {sorted(s.to_tuple() for s in oracle_eqs)}"
        )

    for rec in records:
        try:
            verdict = eq.classify_stability(pop, rec)
        except AssumptionViolated:
            continue
        if verdict.is_stable is None:
            continue
        oracle_stable = is_stable_oracle(graph, rec.state)
        if oracle_stable != verdict.is_stable:
            problems.append(
                f"stability disagrees at {rec.state.to_tuple()}: "
                f"analytic {verdict.status}, oracle {'stable' if oracle_stable else 'unstable'}"
            )

    pooled_count = pop.m + 1
    for i in range(1, pop.b + 1):
        pooled_count *= pop.n_a(i) + 1
    for i in range(1, pop.bp + 1):
        pooled_count *= pop.n_c(i) + 1
    if pooled_count <= 5000:
        candidates = list(iter_pooled_states(pop))
    else:
        candidates = list(analytic) + _sample_pooled_states(pop, sample, seed)
    for state in candidates:
        lhs = eq.is_exclusive_cooperation_preserving(pop, state)
        rhs = is_equilibrium_oracle(graph, state)
        if lhs != rhs:
            problems.append(
                f"cooperation-preserving mismatch at {state.to_tuple()}: "
                f"analytic {lhs}, oracle {rhs}"
            )
    return problems


def _closure_violations(graph: TransitionDigraph, masks: list[np.ndarray]) -> list[bool]:
    """For each mask: does any one-step transition leave the masked set?"""
    violated = [False] * len(masks)
    for src, dst in graph.iter_edge_blocks():
        for pos, mask in enumerate(masks):
            if not violated[pos] and bool((mask[src] & ~mask[dst]).any()):
                violated[pos] = True
    return violated


def verify_invariants(pop: PopulationSpec, graph: TransitionDigraph,
                      s_guard: int = DEFAULT_S_GUARD) -> tuple[list[str], list[str]]:
    """Closed-form invariance verdicts vs exhaustive one-step closure, plus the
    necessary-condition checklist on every oracle minimal invariant set.

    Returns (problems, skipped)."""
    problems: list[str] = []
    skipped: list[str] = []

    sinks = minimal_invariant_sets(graph)
    indices = list(inv.all_benchmark_indices(pop))
    x_masks = [inv.x_membership_mask(graph, idx) for idx in indices]
    x_closed = _closure_violations(graph, x_masks)
    for idx, violated, mask in zip(indices, x_closed, x_masks):
        analytic = inv.is_invariant_X(pop, idx)
        oracle = not violated and bool(mask.any())
        if bool(mask.any()) and analytic != oracle:
            problems.append(f"X invariance disagrees at {idx}: analytic {analytic}, oracle {oracle}")
        if analytic and not any(mask[res.indices].all() for res in sinks):
            problems.append(f"invariant X at {idx} holds no minimal invariant set")
        del mask

    s_indices, s_masks, s_analytic = [], [], []
    for idx in indices:
        lo, hi = inv.s_cooperator_range(pop, idx)
        if lo > hi:
            continue
        try:
            verdict = inv.is_invariant_S(pop, idx, guard=s_guard)
        except StateSpaceTooLarge:
            skipped.append(f"S check at {idx} exceeds the enumeration guard {s_guard}")
            continue
        s_indices.append(idx)
        s_analytic.append(verdict)
        s_masks.append(inv.s_membership_mask(graph, idx))
    s_closed = _closure_violations(graph, s_masks)
    for idx, violated, analytic, mask in zip(s_indices, s_closed, s_analytic, s_masks):
        if not bool(mask.any()):
            continue
        oracle = not violated
        if analytic != oracle:
            problems.append(f"S invariance disagrees at {idx}: analytic {analytic}, oracle {oracle}")

    for inv_set in minimal_invariant_sets(graph):
        if inv_set.is_singleton:
            continue
        report = inv.verify_necessary_conditions(pop, inv_set, graph)
        if not report["all_pass"]:
            problems.append(
                f"necessary conditions fail on the invariant set with bounds "
                f"{inv_set.cooperator_bounds}: {report}"
            )
    return problems, skipped


def verify_oracle(graph: TransitionDigraph, sample: int = 20, seed: int = 0) -> list[str]:
    """Structural sanity of the oracle digraph and its minimal invariant sets."""
    problems: list[str] = []
    sinks = minimal_invariant_sets(graph)
    if not sinks:
        problems.append("no minimal invariant set found; finite dynamics must have one")

    for res in sinks:
        members = set(int(i) for i in res.indices)
        adj = {i: [j for j in graph.successors(i) if j in members] for i in members}
        start = next(iter(members))
        seen = {start}
        frontier = [start]
        while frontier:
            u = frontier.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    frontier.append(v)
        if seen != members:
            problems.append(f"minimal invariant set {res.cooperator_bounds} is not strongly reachable")
        # sink property: no successor leaves the set
        for i in members:
            if any(j not in members for j in graph.switch_successors(i)):
                problems.append(f"state {i} escapes its minimal invariant set")
                break

    all_sink_states: set[int] = set()
    for res in sinks:
        overlap = all_sink_states & set(int(i) for i in res.indices)
        if overlap:
            problems.append("minimal invariant sets are not pairwise disjoint")
        all_sink_states |= set(int(i) for i in res.indices)

    rng = np.random.default_rng(seed)
    n = graph.n_states
    picks = range(n) if n <= 2000 else (int(rng.integers(n)) for _ in range(sample))
    for i in picks:
        mask = graph.reachable_mask([i])
        mask[i] = True
        if not any(mask[j] for j in all_sink_states):
            problems.append(f"state {i} cannot reach any minimal invariant set")
            break
    return problems


def verify_stochastic(bpop: st.BinaryTypePopulation,
                      epsilons: Sequence = (Fraction(1, 100), Fraction(1, 1000), Fraction(1, 10000)),
                      graph: TransitionDigraph | None = None) -> list[str]:
    """Full stochastic-stability cross-check battery on a binary-type population."""
    problems: list[str] = []
    chain0 = st.build_chain(bpop, 0)
    classes = st.recurrent_classes(chain0)

    if graph is not None:
        oracle_sets = {
            frozenset(int(i) for i in res.indices) for res in minimal_invariant_sets(graph)
        }
        chain_sets = {
            frozenset(
                graph.space.index_of(_bstate_to_cells(graph, chain0.states[i])) for i in cls
            )
            for cls in classes
        }
        if oracle_sets != chain_sets:
            problems.append("recurrent classes disagree with oracle minimal invariant sets")

    for eps in epsilons:
        chain = st.build_chain(bpop, eps)
        for i, row in enumerate(chain.rows):
            if sum(row.values()) != 1:
                problems.append(f"row {i} of the eps={eps} chain does not sum to 1")
                break
        for i in range(chain.n_states):
            if not chain0.support0[i] <= chain.support_eps[i]:
                problems.append("support of the unperturbed chain escapes the perturbed support")
                break
        # one-step mistake costs against the numeric transition rows
        for i in range(chain.n_states):
            positive0 = {j for j, p in chain0.rows[i].items() if p > 0}
            positive_eps = {j for j, p in chain.rows[i].items() if p > 0}
            for j in positive_eps | positive0:
                c_val = chain0.one_step_cost(i, j)
                want = 0 if j in positive0 else 1 if j in positive_eps else math.inf
                if c_val != want:
                    problems.append(f"one-step cost mismatch at ({i},{j}): {c_val} vs {want}")
                    break
        labels = st._scc_labels(chain.n_states, chain.support_eps)
        if len(set(labels)) != 1:
            problems.append(f"perturbed chain at eps={eps} is not irreducible")
        if not any(i in chain.support_eps[i] for i in range(chain.n_states)):
            problems.append(f"perturbed chain at eps={eps} has no positive self-loop")

    cg = st.build_class_graph(chain0)
    for i in range(cg.k):
        if st._gamma_brute(cg, i) != st.gamma_arborescence(cg, i):
            problems.append(f"gamma brute force and arborescence disagree at class {i}")

    # cost vs modified cost dominance over every (state, class) pair
    for t, cls in enumerate(classes):
        cls_set = set(cls)
        for i in range(chain0.n_states):
            if i in cls_set:
                continue
            c_val = st.cost(chain0, [i], cls)
            c_star = st.modified_cost(chain0, i, cls)
            if not c_val >= c_star:
                problems.append(
                    f"modified cost exceeds plain cost from state {i} to class {t}: "
                    f"{c_star} > {c_val}"
                )

    result = st.stochastically_stable_set(bpop, chain0)
    mus = {}
    for eps in epsilons:
        chain = st.build_chain(bpop, eps)
        mu = st.stationary_distribution(chain)
        if st.stationary_residual(chain, mu) > Fraction(1, 10**12):
            problems.append(f"stationary residual too large at eps={eps}")
        mus[eps] = mu
    ordered = sorted(epsilons, key=Fraction, reverse=True)  # decreasing eps
    masses = []
    for eps in ordered:
        mass = sum((mus[eps][chain0.index[s]] for s in result.stable_states), Fraction(0))
        masses.append(mass)
    if not all(a < b for a, b in zip(masses, masses[1:])):
        problems.append(f"stable-set stationary mass not increasing as eps decreases: {masses}")

    # class-level argmax of the smallest-eps distribution vs gamma-minimal classes
    mu_small = mus[ordered[-1]]
    class_mass = [
        sum((mu_small[i] for i in cls), Fraction(0)) for cls in cg.classes
    ]
    top = max(class_mass)
    argmax_ids = {i for i, v in enumerate(class_mass) if v == top}
    # compare by dominant order of magnitude: gamma-minimal classes hold the mass
    if not argmax_ids <= set(result.stable_class_ids):
        problems.append(
            f"stationary mass concentrates on classes {sorted(argmax_ids)} "
            f"but gamma selects {sorted(result.stable_class_ids)}"
        )

    # persistence corroboration: strictly sub-radius states lose mass as eps shrinks
    for t, cls in enumerate(classes):
        r = result.radii[t]
        for i in range(chain0.n_states):
            if i in set(cls):
                continue
            if isinstance(r, int) and r > st.cost(chain0, [i], cls):
                series = [mus[eps][i] for eps in ordered]
                if not all(a > b for a, b in zip(series, series[1:])):
                    problems.append(
                        f"state {i} dominated by class {t} but its mass is not vanishing"
                    )
                    break

    verdict = st.check_extreme_theorem(bpop)
    if verdict.conclusion_status == "violated":
        problems.append("extreme-equilibrium conclusion violated despite its hypothesis")
    return problems


def _bstate_to_cells(graph: TransitionDigraph, s: st.BState) -> tuple[int, ...]:
    """Map a binary-type state onto the oracle's cell order (imitators first)."""
    space = graph.space
    coords = [0] * len(space.cells)
    for k, cell in enumerate(space.cells):
        if cell.role == "imitator":
            coords[k] = s.x1I if cell.kind == "anticoordinating" else s.x2I
        else:
            coords[k] = s.xa if cell.kind == "anticoordinating" else s.xc
    return tuple(coords)
