"""Walk through one schedule, step by step, on a five-instance matrix.

The selector finds the query's nearest training instances, picks the smallest
solver subset covering them, splits the time window proportionally to solved
instances (the backup solver covers what nobody solves), and orders slots by
average neighborhood runtime.
"""

import numpy as np

from portsched import (
    Engine,
    allocate_and_order,
    backup_solver,
    fit_trained_state,
    knn,
    make_schedule,
    select_subset_exhaustive,
    select_subset_greedy,
    simulate_schedule,
)
from portsched.scenario import Scenario

TAU = 1800.0
T = TAU  # shorthand in the matrix below

# runtime[i][a]; timeout T means unsolved.
runtime = np.array([
    #  A1     A2     A3     A4
    [  T,     T,     T,     T  ],   # x1: hopeless
    [  T,   593.0,   T,     T  ],   # x2: only A2
    [ 3.0,    T,   36.0,    T  ],   # x3: A1 fast, A3 slower
    [  T,     T,  1452.0, 122.0],   # x4: A4 much faster
    [278.0,   T,     T,   60.0 ],   # x5: A4 faster
])
solved = runtime < T
scenario = Scenario(
    name="walkthrough",
    instance_ids=("x1", "x2", "x3", "x4", "x5"),
    algorithm_ids=("A1", "A2", "A3", "A4"),
    runtime=runtime,
    solved=solved,
    features=np.arange(5.0)[:, None],
    feature_names=("f0",),
    timeout=TAU,
)

state = fit_trained_state(
    scenario, scenario.instance_ids, (0,), k=5,
    engine=Engine.EXHAUSTIVE, backup="A3",
)

query = np.array([2.0])
nb = knn(state.scaling.transform(query[None, :])[0], state.train_scaled, 5)
print("neighborhood (all five instances, k=5):",
      [scenario.instance_ids[i] for i in nb.indices])

solved_nb = state.solved[list(nb.indices)]
runtime_nb = state.runtime[list(nb.indices)]

exhaustive = select_subset_exhaustive(solved_nb, runtime_nb, scenario.algorithm_ids)
greedy = select_subset_greedy(solved_nb, runtime_nb, scenario.algorithm_ids, 3)
print(f"exhaustive selection: {exhaustive}  (smallest max-coverage set, fastest)")
print(f"greedy selection:     {greedy}  (marginal coverage, one solver at a time)")

backup = backup_solver(state.solved, state.runtime, scenario.algorithm_ids, TAU)
print(f"computed backup would be {backup}; this walkthrough pins A3")

schedule = allocate_and_order(
    exhaustive, solved_nb, runtime_nb, scenario.algorithm_ids, TAU, "A3"
)
print("\nallocation: A1 and A4 each solve two neighbors, A2 one, and x1 is")
print("covered by the backup -> 2+2+1+1 = 6 slots of 300s, ordered by mean runtime:")
for algo, seconds in schedule.slots:
    print(f"  {algo}: {seconds:.0f}s")

assert schedule.slots == make_schedule(query, state).slots

print("\nreplaying that schedule against the recorded runtimes:")
for inst in scenario.instance_ids:
    out = simulate_schedule(schedule, scenario, inst)
    if out.solved:
        print(f"  {inst}: solved by {out.solving_algorithm} "
              f"at {out.effective_time:.0f}s")
    else:
        print(f"  {inst}: unsolved ({out.failure_kind.value})")
