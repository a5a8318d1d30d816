"""One population, two fates: settle at an equilibrium or fluctuate forever.

The 69-agent population `ex2` mixes 14 imitators (4 of them carrying the
first nonconformist type's payoffs), 29 nonconformists, and 26 conformists.
Starting from universal defection, the activation order alone decides whether
the dynamics freeze at the mixed equilibrium (14,9,0,0,0,0) or keep swinging
between 26 and 27 cooperators.
"""

from collections import Counter

from popdyn.dynamics import UniformRandom, simulate
from popdyn.fixtures import fixture_population
from popdyn.model import State

pop = fixture_population("ex2")
all_defect = State(0, (0,) * pop.b, (0,) * pop.bp)

for seed in (0, 3):
    trajectory = simulate(pop, all_defect, UniformRandom(seed=seed), steps=6000)
    tail = trajectory.records[-1000:]
    counts = Counter(r.n_c for r in tail)
    print(f"seed {seed}: final state {trajectory.final_state.to_tuple()}")
    print(f"  cooperator counts over the last 1000 steps: {dict(sorted(counts.items()))}")
    if len(counts) == 1:
        print("  -> settled: every agent is content with her strategy\n")
    else:
        print("  -> perpetual fluctuation: imitators and type-1 nonconformists keep flipping\n")
