"""Diagnostics: neighborhood agreement between feature and performance space,
unsolved-instance taxonomy, schedule-size statistics and runtime-distribution
export."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .metrics import DEFAULT_PENALTY, FailureKind, SimulationOutcome, sbs
from .scenario import Scenario
from .scheduling import Schedule, TrainedState, knn


@dataclass(frozen=True)
class JaccardReport:
    """Per-instance overlap between the feature-space and performance-space
    k-neighborhoods, with its mean."""

    per_instance: dict[str, float]
    mean: float


def jaccard_grand_mean(reports: Sequence[JaccardReport]) -> tuple[tuple[float, ...], float]:
    """Aggregate one neighborhood-agreement report per repetition into the
    per-repetition means and their grand mean."""
    if not reports:
        raise ValueError("no reports")
    means = tuple(r.mean for r in reports)
    return means, float(np.mean(means))


def _neighbor_ids(
    query: np.ndarray,
    candidates: np.ndarray,
    candidate_ids: Sequence[str],
    k: int,
    exclude: str | None,
) -> frozenset[str]:
    keep = [i for i, cid in enumerate(candidate_ids) if cid != exclude]
    nb = knn(query, candidates[keep], k)
    return frozenset(candidate_ids[keep[i]] for i in nb.indices)


def jaccard_neighborhoods(
    scenario: Scenario,
    state: TrainedState,
    instance_ids: Sequence[str],
    k: int | None = None,
) -> JaccardReport:
    """Compare each instance's k nearest training instances under the model's
    scaled features against its k nearest under raw performance vectors
    (effective runtimes, timeout where unsolved). An instance present in the
    training set is excluded from its own neighborhoods.
    """
    k = state.params.k if k is None else k
    if k > len(state.instance_ids):
        raise ValueError("k exceeds the training-set size")
    train_ids = state.instance_ids
    perf_train = state.runtime

    per_instance: dict[str, float] = {}
    for inst in instance_ids:
        row = scenario.instance_index(inst)
        feat_q = state.scaling.transform(scenario.features[row][None, :])[0]
        feat_nb = _neighbor_ids(feat_q, state.train_scaled, train_ids, k, inst)
        perf_q = scenario.runtime[row]
        perf_nb = _neighbor_ids(perf_q, perf_train, train_ids, k, inst)
        union = feat_nb | perf_nb
        per_instance[inst] = len(feat_nb & perf_nb) / len(union) if union else 1.0
    mean = float(np.mean(list(per_instance.values()))) if per_instance else 0.0
    return JaccardReport(per_instance=per_instance, mean=mean)


@dataclass(frozen=True)
class UnsolvedBreakdown:
    n_solved: int
    n_unsolved: int
    counts: dict[str, int]
    fractions: dict[str, float]


def classify_unsolved(outcomes: Sequence[SimulationOutcome]) -> UnsolvedBreakdown:
    """Tally unsolved outcomes by failure kind; fractions are over the
    unsolved instances only."""
    counts = {kind.value: 0 for kind in FailureKind}
    n_solved = 0
    for o in outcomes:
        if o.solved:
            n_solved += 1
        else:
            counts[o.failure_kind.value] += 1
    n_unsolved = len(outcomes) - n_solved
    fractions = {
        kind: (n / n_unsolved if n_unsolved else 0.0) for kind, n in counts.items()
    }
    return UnsolvedBreakdown(
        n_solved=n_solved,
        n_unsolved=n_unsolved,
        counts=counts,
        fractions=fractions,
    )


def schedule_size_stats(schedules: Sequence[Schedule]) -> tuple[float, float]:
    """Mean and population standard deviation of schedule sizes, counting only
    slots with positive allocated time."""
    if not schedules:
        raise ValueError("no schedules")
    sizes = [sum(1 for _, t in s.slots if t > 0) for s in schedules]
    return float(np.mean(sizes)), float(np.std(sizes))


def runtime_distribution_export(
    scenario: Scenario,
    outcomes: Sequence[SimulationOutcome],
    path: str | Path,
    penalty: float = DEFAULT_PENALTY,
) -> Path:
    """Write per-instance runtimes of the single best algorithm, the oracle
    and the selector, each column independently sorted ascending; unsolved
    entries are exported as the timeout with a false solved flag."""
    if not outcomes:
        raise ValueError("no outcomes")
    ids = [o.instance_id for o in outcomes]
    rows = scenario.rows(ids)
    timeout = scenario.timeout

    sbs_id, _ = sbs(scenario, ids, penalty)
    col = scenario.algorithm_index(sbs_id)
    sbs_solved = scenario.solved[rows, col]
    sbs_time = np.where(sbs_solved, scenario.runtime[rows, col], timeout)

    vbs_solved = scenario.solved[rows].any(axis=1)
    vbs_time = np.where(vbs_solved, scenario.runtime[rows].min(axis=1), timeout)

    sel_time = np.array([o.effective_time if o.solved else timeout for o in outcomes])
    sel_solved = np.array([o.solved for o in outcomes])

    def sorted_pairs(times, flags):
        order = np.lexsort((~np.asarray(flags, dtype=bool), times))
        return [(float(times[i]), bool(flags[i])) for i in order]

    columns = {
        "sbs": sorted_pairs(sbs_time, sbs_solved),
        "vbs": sorted_pairs(vbs_time, vbs_solved),
        "selector": sorted_pairs(sel_time, sel_solved),
    }
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["sbs_seconds", "sbs_solved", "vbs_seconds", "vbs_solved",
             "selector_seconds", "selector_solved"]
        )
        for i in range(len(ids)):
            row = []
            for name in ("sbs", "vbs", "selector"):
                t, ok = columns[name][i]
                row.extend([repr(t), int(ok)])
            writer.writerow(row)
    return path


def scenario_indicators(
    scenario: Scenario,
    instance_ids: Sequence[str],
    penalty: float = DEFAULT_PENALTY,
) -> dict[str, float]:
    """The two scenario-difficulty indicators: instances the single best
    algorithm leaves unsolved, and how much the oracle outruns it."""
    from .metrics import vbs_par

    sbs_id, m_sbs = sbs(scenario, instance_ids, penalty)
    rows = scenario.rows(instance_ids)
    col = scenario.algorithm_index(sbs_id)
    unsolved = int(
        (~(scenario.solved[rows, col] & (scenario.runtime[rows, col] < scenario.timeout))).sum()
    )
    m_vbs = vbs_par(scenario, instance_ids, penalty)
    return {
        "sbs_unsolved_instances": float(unsolved),
        "vbs_speedup_over_sbs": m_sbs / m_vbs,
    }
