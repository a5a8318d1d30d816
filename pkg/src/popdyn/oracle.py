"""Brute-force ground truth: the full one-step transition digraph.

States are refined per (role, type) cell (see `cells`), successors are
materialized exhaustively with exact integer arithmetic, and minimal
positively invariant sets fall out as sink strongly-connected components.
Construction is vectorized and chunked so desk-scale spaces (about 10^7
states) stay within a few hundred MB.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .cells import BEST_RESPONDER, IMITATOR, CellSpace
from .errors import NotAnEquilibrium, StateSpaceTooLarge
from .model import ANTICOORDINATING, COORDINATING, PopulationSpec, State

DEFAULT_MAX_STATES = 10**6
MAX_STATES_ENV = "POPDYN_MAX_STATES"

_CHUNK = 1 << 19
_NEG = np.int64(-(2**62))


def resolve_max_states(max_states: int | None = None) -> int:
    if max_states is not None:
        return int(max_states)
    env = os.environ.get(MAX_STATES_ENV)
    if env:
        return int(env)
    return DEFAULT_MAX_STATES


@dataclass(frozen=True)
class InvariantSetResult:
    """A minimal positively invariant set (sink SCC of the oracle digraph)."""

    indices: np.ndarray
    states: frozenset[State]
    is_singleton: bool
    cooperator_bounds: tuple[int, int]

    @property
    def min_cooperators(self) -> int:
        return self.cooperator_bounds[0]

    @property
    def max_cooperators(self) -> int:
        return self.cooperator_bounds[1]


class ReachableSet:
    """Forward closure of a state; supports membership tests without materializing."""

    def __init__(self, graph: "TransitionDigraph", mask: np.ndarray):
        self.graph = graph
        self.mask = mask

    def __contains__(self, state) -> bool:
        if isinstance(state, State):
            return any(self.mask[i] for i in self.graph.indices_of_pooled(state))
        return bool(self.mask[self.graph.space.index_of(self.graph.space.refine(state))])

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def pooled_states(self) -> frozenset[State]:
        return self.graph.pooled_states_of(self.indices)

    def __len__(self) -> int:
        return int(self.mask.sum())


class TransitionDigraph:
    """Exhaustive successor relation; edges are agent switches, kept in CSR form.

    Self-loops (some agent keeps her strategy) are tracked in a separate
    boolean array; they do not affect SCC structure.
    """

    def __init__(self, pop: PopulationSpec, space: CellSpace, matrix: csr_matrix, self_loop: np.ndarray):
        self.pop = pop
        self.space = space
        self.matrix = matrix
        self.self_loop = self_loop
        self.n_states = space.n_states
        self._labels: np.ndarray | None = None
        self._sink_results: list[InvariantSetResult] | None = None

    # -- basic access -------------------------------------------------------

    def switch_successors(self, index: int) -> np.ndarray:
        lo, hi = self.matrix.indptr[index], self.matrix.indptr[index + 1]
        return self.matrix.indices[lo:hi]

    def successors(self, index: int) -> list[int]:
        succ = set(int(j) for j in self.switch_successors(index))
        if self.self_loop[index]:
            succ.add(int(index))
        return sorted(succ)

    def out_degree(self, index: int) -> int:
        return int(self.matrix.indptr[index + 1] - self.matrix.indptr[index])

    def indices_of_pooled(self, state: State) -> list[int]:
        return [self.space.index_of(c) for c in self.space.splits_of_pooled(state)]

    def pooled_states_of(self, indices: Iterable[int]) -> frozenset[State]:
        return frozenset(self.space.pooled(self.space.coords_of(int(i))) for i in indices)

    def iter_edge_blocks(self, rows_per_block: int = _CHUNK) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Yield (src, dst) arrays block by block; memory stays bounded."""
        indptr, indices = self.matrix.indptr, self.matrix.indices
        for lo in range(0, self.n_states, rows_per_block):
            hi = min(lo + rows_per_block, self.n_states)
            e_lo, e_hi = indptr[lo], indptr[hi]
            if e_lo == e_hi:
                continue
            counts = np.diff(indptr[lo : hi + 1]).astype(np.int64)
            src = np.repeat(np.arange(lo, hi, dtype=np.int64), counts)
            yield src, indices[e_lo:e_hi].astype(np.int64, copy=False)

    # -- reachability ---------------------------------------------------------

    def reachable_mask(self, starts: Sequence[int]) -> np.ndarray:
        """Boolean mask of states reachable from any start (starts included)."""
        starts = np.asarray(list(starts), dtype=np.int64)
        if starts.size == 0:
            return np.zeros(self.n_states, dtype=bool)
        if starts.size == 1:
            order = breadth_first_order(
                self.matrix, int(starts[0]), directed=True, return_predecessors=False
            )
            mask = np.zeros(self.n_states, dtype=bool)
            mask[order] = True
            return mask
        # virtual source row pointing at all starts
        n = self.n_states
        indptr = np.concatenate(
            [self.matrix.indptr.astype(np.int64), [self.matrix.indptr[-1] + starts.size]]
        )
        indices = np.concatenate([self.matrix.indices.astype(np.int64), starts])
        data = np.ones(len(indices), dtype=np.int8)
        aug = csr_matrix((data, indices, indptr), shape=(n + 1, n + 1))
        order = breadth_first_order(aug, n, directed=True, return_predecessors=False)
        mask = np.zeros(n + 1, dtype=bool)
        mask[order] = True
        return mask[:n]

    # -- condensation ----------------------------------------------------------

    def scc_labels(self) -> np.ndarray:
        if self._labels is None:
            _, labels = connected_components(self.matrix, directed=True, connection="strong")
            self._labels = labels
        return self._labels


def build_transition_digraph(pop: PopulationSpec, max_states: int | None = None) -> TransitionDigraph:
    """Materialize the multivalued one-step dynamics of the population."""
    space = CellSpace(pop)
    guard = resolve_max_states(max_states)
    if space.n_states > guard:
        raise StateSpaceTooLarge(
            f"{space.n_states} refined states exceed the guard of {guard}; "
            f"raise max_states or {MAX_STATES_ENV}"
        )

    n = space.n_states
    caps = space.caps
    strides = space.strides
    scaled = space.scaled
    cells = space.cells

    index_dtype = np.int32 if n < 2**31 else np.int64
    self_loop = np.zeros(n, dtype=bool)
    degrees = np.zeros(n, dtype=np.int32)
    dst_blocks: list[np.ndarray] = []

    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        idx = np.arange(lo, hi, dtype=np.int64)
        coords = [(idx // strides[k]) % (caps[k] + 1) for k in range(len(cells))]
        n_c = coords[0].copy()
        for arr in coords[1:]:
            n_c += arr

        # per-type presence and line values
        coop_present: dict[tuple[str, int], np.ndarray] = {}
        def_present: dict[tuple[str, int], np.ndarray] = {}
        for key, positions in space.cells_of_type.items():
            cp = coords[positions[0]] > 0
            dp = coords[positions[0]] < caps[positions[0]]
            for k in positions[1:]:
                cp = cp | (coords[k] > 0)
                dp = dp | (coords[k] < caps[k])
            coop_present[key] = cp
            def_present[key] = dp

        sup_c = np.full(hi - lo, _NEG, dtype=np.int64)
        sup_d = np.full(hi - lo, _NEG, dtype=np.int64)
        for key in space.types:
            ac, bc, ad, bd = scaled.lines[key]
            val_c = ac * n_c + bc
            np.maximum(sup_c, np.where(coop_present[key], val_c, _NEG), out=sup_c)
            val_d = ad * n_c + bd
            np.maximum(sup_d, np.where(def_present[key], val_d, _NEG), out=sup_d)
        imit_wants_c = sup_c > sup_d
        imit_wants_d = sup_d > sup_c

        # per-type best-response tendencies (strict; ties keep)
        br_wants_c: dict[tuple[str, int], np.ndarray] = {}
        br_wants_d: dict[tuple[str, int], np.ndarray] = {}
        for key in space.types:
            tn, td = scaled.tempers[key]
            above = n_c * td > tn
            below = n_c * td < tn
            if key[0] == COORDINATING:
                br_wants_c[key], br_wants_d[key] = above, below
            else:
                br_wants_c[key], br_wants_d[key] = below, above

        chunk_src: list[np.ndarray] = []
        chunk_dst: list[np.ndarray] = []
        keeps = np.zeros(hi - lo, dtype=bool)
        for k, cell in enumerate(cells):
            key = (cell.kind, cell.type_index)
            if cell.role == BEST_RESPONDER:
                wants_c, wants_d = br_wants_c[key], br_wants_d[key]
            else:
                wants_c, wants_d = imit_wants_c, imit_wants_d
            has_coop = coords[k] > 0
            has_def = coords[k] < caps[k]
            switch_down = has_coop & wants_d
            switch_up = has_def & wants_c
            keeps |= has_coop & ~wants_d
            keeps |= has_def & ~wants_c
            if switch_down.any():
                src = idx[switch_down]
                chunk_src.append(src)
                chunk_dst.append(src - strides[k])
            if switch_up.any():
                src = idx[switch_up]
                chunk_src.append(src)
                chunk_dst.append(src + strides[k])

        self_loop[lo:hi] = keeps
        if chunk_src:
            src_all = np.concatenate(chunk_src)
            dst_all = np.concatenate(chunk_dst)
            order = np.argsort(src_all, kind="stable")
            dst_blocks.append(dst_all[order].astype(index_dtype))
            degrees[lo:hi] += np.bincount(
                (src_all - lo).astype(np.int64), minlength=hi - lo
            ).astype(np.int32)

    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degrees, out=indptr[1:])
    indices = (
        np.concatenate(dst_blocks) if dst_blocks else np.zeros(0, dtype=index_dtype)
    )
    data = np.ones(len(indices), dtype=np.int8)
    matrix = csr_matrix((data, indices, indptr), shape=(n, n))
    return TransitionDigraph(pop, space, matrix, self_loop)


def minimal_invariant_sets(graph: TransitionDigraph) -> list[InvariantSetResult]:
    """Sink SCCs of the successor digraph, in deterministic order."""
    if graph._sink_results is not None:
        return graph._sink_results
    labels = graph.scc_labels()
    n_comp = int(labels.max()) + 1 if graph.n_states else 0
    is_sink = np.ones(n_comp, dtype=bool)
    for src, dst in graph.iter_edge_blocks():
        cross = labels[src] != labels[dst]
        if cross.any():
            is_sink[labels[src[cross]]] = False
    sink_labels = np.flatnonzero(is_sink)
    member_mask = is_sink[labels]
    members = np.flatnonzero(member_mask)
    member_labels = labels[members]

    results: list[InvariantSetResult] = []
    space = graph.space
    for lab in sink_labels:
        idxs = members[member_labels == lab]
        coords = np.stack(
            [(idxs // space.strides[k]) % (space.caps[k] + 1) for k in range(len(space.cells))],
            axis=1,
        )
        n_cs = coords.sum(axis=1)
        results.append(
            InvariantSetResult(
                indices=np.sort(idxs),
                states=graph.pooled_states_of(idxs),
                is_singleton=len(idxs) == 1,
                cooperator_bounds=(int(n_cs.min()), int(n_cs.max())),
            )
        )
    results.sort(key=lambda r: int(r.indices[0]))
    graph._sink_results = results
    return results


def is_equilibrium_oracle(graph: TransitionDigraph, state) -> bool:
    """True iff every refined representative has itself as only successor."""
    if isinstance(state, State):
        indices = graph.indices_of_pooled(state)
    else:
        indices = [graph.space.index_of(graph.space.refine(state))]
    return all(graph.out_degree(i) == 0 for i in indices)


def _pooled_distance_mask(graph: TransitionDigraph, eq: State, radius: int) -> np.ndarray:
    """Mask of refined states within pooled L1 distance `radius` of eq."""
    space = graph.space
    n = graph.n_states
    dist = np.zeros(n, dtype=np.int64)
    idx = np.arange(n, dtype=np.int64)
    imit_total = np.zeros(n, dtype=np.int64)
    for k, cell in enumerate(space.cells):
        coord = (idx // space.strides[k]) % (space.caps[k] + 1)
        if cell.role == IMITATOR:
            imit_total += coord
        else:
            target = (
                eq.xa[cell.type_index - 1]
                if cell.kind == ANTICOORDINATING
                else eq.xc[cell.type_index - 1]
            )
            dist += np.abs(coord - target)
    dist += np.abs(imit_total - eq.xI)
    return dist <= radius


def is_stable_oracle(graph: TransitionDigraph, eq: State) -> bool:
    """Discrete stability: no trajectory from pooled distance 1 ever exceeds it."""
    if not is_equilibrium_oracle(graph, eq):
        raise NotAnEquilibrium(f"{eq} is not an equilibrium")
    ball = _pooled_distance_mask(graph, eq, 1)
    eq_mask = _pooled_distance_mask(graph, eq, 0)
    starts = np.flatnonzero(ball & ~eq_mask)
    if starts.size == 0:
        return True
    reached = graph.reachable_mask(starts)
    return not bool((reached & ~ball).any())


def reachable_set(graph: TransitionDigraph, from_state) -> ReachableSet:
    """Forward closure (including the start states themselves)."""
    if isinstance(from_state, State):
        starts = graph.indices_of_pooled(from_state)
    else:
        starts = [graph.space.index_of(graph.space.refine(from_state))]
    mask = graph.reachable_mask(starts)
    mask[np.asarray(starts, dtype=np.int64)] = True
    return ReachableSet(graph, mask)


def export_adjacency(graph: TransitionDigraph, stream) -> None:
    """Write `index: succ1 succ2 ...` lines (self-loop listed when present)."""
    for i in range(graph.n_states):
        succ = graph.successors(i)
        stream.write(f"{i}: {' '.join(str(s) for s in succ)}\n")
