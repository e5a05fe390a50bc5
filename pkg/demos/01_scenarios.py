"""Build, persist and reload a scenario; look at what preprocessing does.

A scenario is an instances x algorithms performance matrix plus an
instances x features matrix under one solving timeout. Here we plant one: four
clusters of instances, each owned by one algorithm, with noisy distractor
features mixed in.
"""

import tempfile
from pathlib import Path

import numpy as np

from portsched import (
    discard_unsolvable,
    generate_synthetic_scenario,
    load_scenario,
    preprocess_features,
    write_scenario_dir,
)

scenario = generate_synthetic_scenario(
    n_instances=80,
    n_algorithms=4,
    n_features=3,
    timeout=1200.0,
    seed=7,
    n_noise_features=5,
    dominance=0.9,
    unsolvable_fraction=0.05,
)

print(f"scenario {scenario.name}:")
print(f"  {scenario.n_instances} instances x {scenario.n_algorithms} algorithms,"
      f" timeout {scenario.timeout:.0f}s")
print(f"  features: {', '.join(scenario.feature_names)}")

solved_counts = scenario.solved.sum(axis=0)
for algo, count in zip(scenario.algorithm_ids, solved_counts):
    print(f"  {algo} solves {count} instances")

solvable = discard_unsolvable(scenario, scenario.instance_ids)
print(f"\n{len(scenario.instance_ids) - len(solvable)} instances are unsolvable "
      f"by everyone and would be dropped before training")

# Round-trip through the on-disk layout: description.txt + three ARFF files.
with tempfile.TemporaryDirectory() as tmp:
    directory = write_scenario_dir(scenario, Path(tmp) / "demo")
    print(f"\nwrote {sorted(p.name for p in directory.iterdir())}")
    again = load_scenario(directory)
    assert np.array_equal(again.runtime, scenario.runtime)
    assert again.feature_names == scenario.feature_names
    print("reloaded scenario is identical to the generated one")

# Preprocessing: fit on a training subset only. Constant features are dropped,
# missing values get the fitting-set median, everything else lands in [-1, 1].
train = solvable[:50]
scaling = preprocess_features(scenario, train)
scaled = scaling.transform(scenario.features[scenario.rows(train)])
print(f"\nfitted scaling keeps {len(scaling.kept_columns)} of "
      f"{len(scenario.feature_names)} features")
print(f"scaled training range: [{scaled.min():.3f}, {scaled.max():.3f}]")

query = scaling.transform(scenario.features[scenario.rows(solvable[50:55])])
print(f"unseen rows may leave the unit box: [{query.min():.3f}, {query.max():.3f}]")
