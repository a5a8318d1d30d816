"""Command-line front end: config ingestion, analysis orchestration, exports.

Commands: simulate | equilibria | invariants | oracle | stochastic.
Exit codes: 0 success, 2 configuration error, 3 state-space guard exceeded,
4 verification failure. The env var POPDYN_MAX_STATES overrides the default
state guard; an explicit --max-states flag overrides both.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import dynamics, equilibria, invariants, oracle, stochastic, verify
from .errors import PopdynError, StateSpaceTooLarge
from .model import PopulationSpec, State, parse_rational, validate_population

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_VERIFY = 4


def _load_population(path: str) -> PopulationSpec:
    with open(path) as fh:
        return validate_population(json.load(fh))


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w"), True


def _emit(payload: dict, path: str | None) -> None:
    stream, close = _open_out(path)
    try:
        json.dump(payload, stream, indent=2, sort_keys=True)
        stream.write("\n")
    finally:
        if close:
            stream.close()


def _parse_initial(pop: PopulationSpec, text: str | None) -> State:
    if text is None:
        return State(0, (0,) * pop.b, (0,) * pop.bp)
    values = [int(v) for v in text.replace(" ", "").split(",")]
    return pop.state(*values)


def _parse_script(path: str) -> dynamics.Scripted:
    refs = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            role, kind, index, strategy = (p.strip() for p in line.split(","))
            refs.append(dynamics.AgentRef(role, kind, int(index), strategy))
    return dynamics.Scripted(tuple(refs))


def cmd_simulate(args) -> int:
    pop = _load_population(args.config)
    initial = _parse_initial(pop, args.initial)
    if args.script:
        policy: dynamics.ActivationPolicy = _parse_script(args.script)
    else:
        if args.seed is None:
            print("simulate: --seed is required for random activation", file=sys.stderr)
            return EXIT_CONFIG
        policy = dynamics.UniformRandom(seed=args.seed)
    trajectory = dynamics.simulate(pop, initial, policy, args.steps)
    stream, close = _open_out(args.csv)
    try:
        trajectory.to_csv(stream)
    finally:
        if close:
            stream.close()
    return EXIT_OK


def _oracle_graph(pop: PopulationSpec, args) -> oracle.TransitionDigraph:
    return oracle.build_transition_digraph(pop, max_states=args.max_states)


def cmd_equilibria(args) -> int:
    pop = _load_population(args.config)
    records = equilibria.enumerate_equilibria(pop)
    report = equilibria.equilibria_report(pop, records)
    problems: list[str] = []
    if args.verify or args.oracle:
        graph = _oracle_graph(pop, args)
        for entry, rec in zip(report["equilibria"], records):
            entry["oracle_stable"] = oracle.is_stable_oracle(graph, rec.state)
        if args.verify:
            problems = verify.verify_equilibria(pop, graph)
            report["verification"] = {"passed": not problems, "problems": problems}
    _emit(report, args.json)
    return EXIT_VERIFY if problems else EXIT_OK


def cmd_invariants(args) -> int:
    pop = _load_population(args.config)
    report = invariants.invariance_report(pop, guard=args.max_states)
    problems: list[str] = []
    if args.verify:
        graph = _oracle_graph(pop, args)
        problems, skipped = verify.verify_invariants(pop, graph)
        report["verification"] = {
            "passed": not problems,
            "problems": problems,
            "skipped": skipped,
        }
        report["oracle_minimal_invariant_sets"] = [
            {
                "states": sorted(list(s.to_tuple()) for s in res.states),
                "singleton": res.is_singleton,
                "cooperator_bounds": list(res.cooperator_bounds),
            }
            for res in oracle.minimal_invariant_sets(graph)
        ]
    _emit(report, args.json)
    return EXIT_VERIFY if problems else EXIT_OK


def cmd_oracle(args) -> int:
    pop = _load_population(args.config)
    graph = _oracle_graph(pop, args)
    sets_ = oracle.minimal_invariant_sets(graph)
    report = {
        "states": graph.n_states,
        "transitions": int(graph.matrix.nnz),
        "minimal_invariant_sets": [
            {
                "size": int(len(res.indices)),
                "states": sorted(list(s.to_tuple()) for s in res.states),
                "singleton": res.is_singleton,
                "cooperator_bounds": list(res.cooperator_bounds),
            }
            for res in sets_
        ],
    }
    problems: list[str] = []
    if args.verify:
        problems = verify.verify_oracle(graph)
        report["verification"] = {"passed": not problems, "problems": problems}
    if args.adjacency:
        with open(args.adjacency, "w") as fh:
            oracle.export_adjacency(graph, fh)
    _emit(report, args.json)
    return EXIT_VERIFY if problems else EXIT_OK


def cmd_stochastic(args) -> int:
    pop = _load_population(args.config)
    bpop = stochastic.BinaryTypePopulation.from_population_spec(pop)
    epsilons = [parse_rational(e) for e in (args.epsilon or [])]
    report = stochastic.stochastic_report(bpop, epsilons)
    problems: list[str] = []
    if args.verify:
        graph = oracle.build_transition_digraph(pop, max_states=args.max_states)
        eps_grid = epsilons or [Fraction(1, 100), Fraction(1, 1000), Fraction(1, 10000)]
        problems = verify.verify_stochastic(bpop, eps_grid, graph=graph)
        report["verification"] = {"passed": not problems, "problems": problems}
    if args.dot:
        with open(args.dot, "w") as fh:
            stochastic.export_class_digraph_dot(bpop, fh)
    _emit(report, args.json)
    return EXIT_VERIFY if problems else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="popdyn",
        description="Exact analysis of asynchronous best-response/imitation population dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, verify_flag: bool = True):
        p.add_argument("--config", required=True, help="population spec JSON")
        p.add_argument("--max-states", type=int, default=None,
                       help="state-space guard (default 10^6 or POPDYN_MAX_STATES)")
        p.add_argument("--threads", type=int, default=1,
                       help="reserved; analyses run single-process")
        p.add_argument("--json", default=None, help="report path (default stdout)")
        if verify_flag:
            p.add_argument("--verify", action="store_true",
                           help="run analytic-vs-oracle cross-checks; exit 4 on disagreement")

    p = sub.add_parser("simulate", help="run one seeded trajectory, emit CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--initial", default=None,
                   help="comma-separated state (xI, xa_1.., xc_b'..); default all-defect")
    p.add_argument("--script", default=None,
                   help="scripted activation file: role,kind,index,strategy per line")
    p.add_argument("--csv", default=None, help="trajectory path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("equilibria", help="enumerate equilibria and classify stability")
    common(p)
    p.add_argument("--oracle", action="store_true",
                   help="attach oracle stability verdicts to the report")
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("invariants", help="invariant-set analysis over benchmark indices")
    common(p)
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("oracle", help="exhaustive transition digraph and its sinks")
    common(p)
    p.add_argument("--adjacency", default=None, help="write adjacency-list text export")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("stochastic", help="perturbed-chain analysis of a binary-type population")
    common(p)
    p.add_argument("--epsilon", action="append", default=None,
                   help="tremble rate (repeatable), e.g. 1e-4 or 1/10000")
    p.add_argument("--dot", default=None, help="DOT export of the class cost digraph")
    p.set_defaults(func=cmd_stochastic)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except StateSpaceTooLarge as exc:
        print(f"state-space guard exceeded: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (PopdynError, FileNotFoundError, json.JSONDecodeError, ValueError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
