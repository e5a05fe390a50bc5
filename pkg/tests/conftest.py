"""Shared fixtures: a small worked scenario with hand-checkable numbers and a
few synthetic scenarios."""

from __future__ import annotations

import numpy as np
import pytest

from portsched import Scenario, generate_synthetic_scenario

TAU = 1800.0

# Runtimes of four solvers on five instances; None = not solved (timeout).
# Column minima: x1 none, x2 A2@593, x3 A1@3, x4 A4@122, x5 A4@60.
TOY_RUNTIMES = {
    "A1": [None, None, 3.0, None, 278.0],
    "A2": [None, 593.0, None, None, None],
    "A3": [None, None, 36.0, 1452.0, None],
    "A4": [None, None, None, 122.0, 60.0],
}
TOY_INSTANCES = ("x1", "x2", "x3", "x4", "x5")


def build_scenario(
    runtimes: dict[str, list[float | None]],
    instance_ids: tuple[str, ...],
    timeout: float,
    features: np.ndarray | None = None,
    feature_names: tuple[str, ...] | None = None,
    feature_cost: np.ndarray | None = None,
    name: str = "toy",
) -> Scenario:
    algorithms = tuple(sorted(runtimes))
    n, m = len(instance_ids), len(algorithms)
    runtime = np.full((n, m), timeout)
    solved = np.zeros((n, m), dtype=bool)
    for a, algo in enumerate(algorithms):
        for i, value in enumerate(runtimes[algo]):
            if value is not None:
                runtime[i, a] = value
                solved[i, a] = True
    if features is None:
        features = np.arange(n, dtype=float)[:, None]
    if feature_names is None:
        feature_names = tuple(f"f{j}" for j in range(features.shape[1]))
    return Scenario(
        name=name,
        instance_ids=instance_ids,
        algorithm_ids=algorithms,
        runtime=runtime,
        solved=solved,
        features=np.asarray(features, dtype=float),
        feature_names=feature_names,
        timeout=timeout,
        feature_cost=feature_cost,
    )


@pytest.fixture
def toy() -> Scenario:
    return build_scenario(TOY_RUNTIMES, TOY_INSTANCES, TAU)


@pytest.fixture
def planted() -> Scenario:
    """Clustered scenario with noise features; headroom for a real selector."""
    return generate_synthetic_scenario(
        120, 4, 3, 1200.0, seed=7, n_noise_features=6, dominance=0.95,
        secondary_solve_prob=0.05,
    )


@pytest.fixture
def pure_clusters() -> Scenario:
    """Fully separable scenario: every feature subset isolates the clusters
    and each cluster's solver solves all of it."""
    return generate_synthetic_scenario(
        60, 3, 3, 600.0, seed=11, dominance=1.0, secondary_solve_prob=0.0,
    )
