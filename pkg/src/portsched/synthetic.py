"""Desk-scale synthetic scenarios with planted feature-space clusters.

Each cluster is dominated by one algorithm that solves its instances fast,
while the other algorithms mostly time out. By construction the oracle
selector is far ahead of the best single algorithm, so a working
nearest-neighbor selector has measurable headroom. Informative features are
named ``sig_*``, distractors ``noise_*``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .arff import Attribute, NOMINAL, NUMERIC, RelationTable, TEXT, dump_arff
from .scenario import Scenario

CENTER_SPACING = 3.0
CLUSTER_STD = 1.0
# Dominant runtimes take most of the window: a solver only finishes when it
# owns the majority of the slot shares, so schedules built from impure
# neighborhoods fail with under-sized slots instead of being rescued.
DOMINANT_RUNTIME_RANGE = (0.55, 0.95)
SECONDARY_RUNTIME_RANGE = (0.25, 0.90)


def generate_synthetic_scenario(
    n_instances: int,
    n_algorithms: int,
    n_features: int,
    timeout: float,
    seed: int,
    *,
    n_noise_features: int = 0,
    dominance: float = 0.9,
    secondary_solve_prob: float = 0.05,
    unsolvable_fraction: float = 0.0,
    with_feature_cost: bool = False,
    name: str | None = None,
) -> Scenario:
    """Build a deterministic planted-cluster scenario.

    ``n_features`` informative features place every instance near its
    cluster's center (one cluster per algorithm, centers separated in every
    informative dimension); ``n_noise_features`` uniform distractors drown
    the signal when a selector keeps all features. The cluster's algorithm
    solves each of its instances with probability ``dominance``; any other
    algorithm solves with probability ``secondary_solve_prob``.
    ``unsolvable_fraction`` of the instances are made unsolvable by everyone.
    Fixed seeds give byte-identical scenarios.
    """
    if n_instances < 1 or n_features < 1:
        raise ValueError("counts must be at least 1")
    if n_algorithms < 2:
        raise ValueError("need at least two algorithms")
    if not 0.0 <= dominance <= 1.0:
        raise ValueError("dominance must be in [0, 1]")

    rng = np.random.default_rng(seed)
    n, k = n_instances, n_algorithms

    cluster = np.array([i % k for i in range(n)], dtype=int)
    rng.shuffle(cluster)

    # Distinct center per (cluster, feature); the shift varies which clusters
    # are adjacent per dimension, so separating them cleanly takes a few
    # informative features together.
    centers = np.array(
        [[CENTER_SPACING * ((c + f) % k) for f in range(n_features)] for c in range(k)]
    )
    signal = centers[cluster] + rng.normal(0.0, CLUSTER_STD, (n, n_features))
    half_span = CENTER_SPACING * k / 2.0
    noise = rng.uniform(-half_span, half_span, (n, n_noise_features))
    features = np.hstack([signal, noise]) if n_noise_features else signal

    dom_roll = rng.random(n)
    dom_runtime = rng.uniform(
        timeout * DOMINANT_RUNTIME_RANGE[0], timeout * DOMINANT_RUNTIME_RANGE[1], n
    )
    sec_roll = rng.random((n, k))
    sec_runtime = rng.uniform(
        timeout * SECONDARY_RUNTIME_RANGE[0], timeout * SECONDARY_RUNTIME_RANGE[1], (n, k)
    )
    cost = rng.uniform(0.0, timeout / 100.0, n) if with_feature_cost else None

    solved = sec_roll < secondary_solve_prob
    runtime = np.where(solved, sec_runtime, timeout)
    rows = np.arange(n)
    dom_ok = dom_roll < dominance
    solved[rows, cluster] = dom_ok
    runtime[rows, cluster] = np.where(dom_ok, dom_runtime, timeout)

    n_unsolvable = int(round(unsolvable_fraction * n))
    if n_unsolvable:
        doomed = rng.choice(n, size=n_unsolvable, replace=False)
        solved[doomed, :] = False
        runtime[doomed, :] = timeout

    width = max(2, len(str(max(n - 1, k - 1))))
    feature_names = tuple(f"sig_{j:02d}" for j in range(n_features)) + tuple(
        f"noise_{j:02d}" for j in range(n_noise_features)
    )
    return Scenario(
        name=name or f"synthetic-{seed}",
        instance_ids=tuple(f"inst_{i:0{width}d}" for i in range(n)),
        algorithm_ids=tuple(f"algo_{a:02d}" for a in range(k)),
        runtime=runtime,
        solved=solved,
        features=features,
        feature_names=feature_names,
        timeout=float(timeout),
        feature_cost=cost,
    )


def informative_feature_names(scenario: Scenario) -> tuple[str, ...]:
    """Names of the planted informative features of a generated scenario."""
    return tuple(f for f in scenario.feature_names if f.startswith("sig_"))


def write_scenario_dir(scenario: Scenario, directory: str | Path) -> Path:
    """Write a scenario as an ASlib-style directory loadable by load_scenario."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    (directory / "description.txt").write_text(
        f"scenario_id: {scenario.name}\n"
        f"performance_measures: runtime\n"
        f"maximize: false\n"
        f"algorithm_cutoff_time: {scenario.timeout!r}\n"
    )

    run_attrs = (
        Attribute("instance_id", TEXT),
        Attribute("repetition", NUMERIC),
        Attribute("algorithm", TEXT),
        Attribute("runtime", NUMERIC),
        Attribute("runstatus", NOMINAL, ("ok", "timeout")),
    )
    run_rows = []
    for i, inst in enumerate(scenario.instance_ids):
        for a, algo in enumerate(scenario.algorithm_ids):
            ok = bool(scenario.solved[i, a])
            run_rows.append(
                (inst, 1.0, algo, float(scenario.runtime[i, a]), "ok" if ok else "timeout")
            )
    runs = RelationTable("ALGORITHM_RUNS", run_attrs, tuple(run_rows))
    (directory / "algorithm_runs.arff").write_text(dump_arff(runs))

    feat_attrs = (
        Attribute("instance_id", TEXT),
        Attribute("repetition", NUMERIC),
    ) + tuple(Attribute(name, NUMERIC) for name in scenario.feature_names)
    feat_rows = []
    for i, inst in enumerate(scenario.instance_ids):
        cells: list = [inst, 1.0]
        for value in scenario.features[i]:
            cells.append(None if np.isnan(value) else float(value))
        feat_rows.append(tuple(cells))
    feats = RelationTable("FEATURE_VALUES", feat_attrs, tuple(feat_rows))
    (directory / "feature_values.arff").write_text(dump_arff(feats))

    if scenario.feature_cost is not None:
        cost_attrs = (
            Attribute("instance_id", TEXT),
            Attribute("repetition", NUMERIC),
            Attribute("all_features", NUMERIC),
        )
        cost_rows = tuple(
            (inst, 1.0, float(scenario.feature_cost[i]))
            for i, inst in enumerate(scenario.instance_ids)
        )
        costs = RelationTable("FEATURE_COSTS", cost_attrs, cost_rows)
        (directory / "feature_costs.arff").write_text(dump_arff(costs))

    return directory
