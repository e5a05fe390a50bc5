"""Scheduling kernel: neighborhood retrieval, solver-subset selection
(exhaustive and greedy), proportional time allocation and slot ordering.

All ties are broken deterministically: neighbor ties by training index,
algorithm ties lexicographically by id, subset ties by total runtime then by
sorted id tuple. Tie-break determinism is part of the contract — schedules
must be reproducible across runs.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .metrics import DEFAULT_PENALTY
from .scenario import FeatureScaling, Scenario

log = logging.getLogger(__name__)


class Engine(str, enum.Enum):
    EXHAUSTIVE = "exhaustive"
    GREEDY = "greedy"


@dataclass(frozen=True)
class Neighborhood:
    """The k training rows nearest to a query, closest first."""

    indices: tuple[int, ...]
    distances: tuple[float, ...]


@dataclass(frozen=True)
class Schedule:
    """Ordered (algorithm id, seconds) slots summing to the timeout."""

    slots: tuple[tuple[str, float], ...]

    @property
    def total_seconds(self) -> float:
        return sum(t for _, t in self.slots)

    @property
    def algorithms(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.slots)

    def as_int_slots(self, timeout: float) -> list[list]:
        """Whole-second slots for serialization; the rounding remainder goes
        to the last slot so the sum stays exactly the (integer) timeout."""
        if not self.slots:
            return []
        secs = [int(t) for _, t in self.slots[:-1]]
        last = int(round(timeout)) - sum(secs)
        secs.append(last)
        return [[a, s] for (a, _), s in zip(self.slots, secs)]


@dataclass(frozen=True)
class SelectorParams:
    """Knobs of the scheduling kernel for one trained selector."""

    k: int
    selected_features: tuple[int, ...]
    backup: str
    lambda_sched: int = 3
    engine: Engine = Engine.GREEDY

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not self.selected_features:
            raise ValueError("selected_features must be non-empty")
        if self.lambda_sched < 1:
            raise ValueError("lambda_sched must be at least 1")


@dataclass(frozen=True)
class TrainedState:
    """Everything needed to schedule a query: the fitted feature transform,
    the scaled training features and the training performance data."""

    instance_ids: tuple[str, ...]
    algorithm_ids: tuple[str, ...]
    scaling: FeatureScaling
    train_scaled: np.ndarray
    solved: np.ndarray
    runtime: np.ndarray
    timeout: float
    params: SelectorParams


def knn(query: np.ndarray, train: np.ndarray, k: int) -> Neighborhood:
    """The k nearest training rows by Euclidean distance; distance ties keep
    training-row order. k beyond the training size returns everything."""
    train = np.asarray(train, dtype=float)
    if train.ndim != 2 or train.shape[0] == 0:
        raise ValueError("empty training set")
    query = np.asarray(query, dtype=float).reshape(-1)
    if query.shape[0] != train.shape[1]:
        raise ValueError(
            f"query has {query.shape[0]} features, training rows have {train.shape[1]}"
        )
    if k < 1:
        raise ValueError("k must be at least 1")
    sq = ((train - query) ** 2).sum(axis=1)
    order = np.argsort(sq, kind="stable")[: min(k, train.shape[0])]
    return Neighborhood(
        indices=tuple(int(i) for i in order),
        distances=tuple(float(np.sqrt(sq[i])) for i in order),
    )


def _coverage_masks(solved_nb: np.ndarray) -> list[int]:
    """Per-algorithm bitmask of the neighborhood instances it solves."""
    masks = []
    for a in range(solved_nb.shape[1]):
        mask = 0
        for i in np.flatnonzero(solved_nb[:, a]):
            mask |= 1 << int(i)
        masks.append(mask)
    return masks


def select_subset_exhaustive(
    solved_nb: np.ndarray,
    runtime_nb: np.ndarray,
    algorithm_ids: Sequence[str],
) -> tuple[str, ...]:
    """Smallest algorithm set maximizing neighborhood coverage.

    Among the maximum-coverage subsets of minimum cardinality, the one with
    the lowest total runtime over the neighborhood (timeout where unsolved)
    wins; remaining ties go to the smallest sorted id tuple. Worst case is
    exponential in the portfolio size.
    """
    if solved_nb.shape[0] == 0:
        raise ValueError("empty neighborhood")
    n_alg = solved_nb.shape[1]
    masks = _coverage_masks(solved_nb)
    target = 0
    for m in masks:
        target |= m
    target_count = bin(target).count("1")
    totals = runtime_nb.sum(axis=0)
    by_id = sorted(range(n_alg), key=lambda a: algorithm_ids[a])

    for size in range(1, n_alg + 1):
        best: tuple[float, tuple[str, ...]] | None = None
        for combo in combinations(by_id, size):
            cover = 0
            for a in combo:
                cover |= masks[a]
            if bin(cover).count("1") != target_count:
                continue
            key = (
                float(totals[list(combo)].sum()),
                tuple(sorted(algorithm_ids[a] for a in combo)),
            )
            if best is None or key < best:
                best = key
        if best is not None:
            return best[1]
    raise AssertionError("unreachable: the full portfolio reaches its own coverage")


def select_subset_greedy(
    solved_nb: np.ndarray,
    runtime_nb: np.ndarray,
    algorithm_ids: Sequence[str],
    max_solvers: int,
) -> tuple[str, ...]:
    """Pick algorithms one at a time by maximal residual coverage.

    Ties go to the lower total runtime on the instances the candidate covers,
    then to the smaller id. Stops after ``max_solvers`` picks, when everything
    is covered, or when no candidate covers anything new.
    """
    if max_solvers < 1:
        raise ValueError("max_solvers must be at least 1")
    n_alg = solved_nb.shape[1]
    uncovered = np.ones(solved_nb.shape[0], dtype=bool)
    picked: list[int] = []
    while len(picked) < max_solvers and uncovered.any():
        best_key: tuple[int, float, str] | None = None
        best_a = -1
        for a in range(n_alg):
            if a in picked:
                continue
            gain = solved_nb[:, a] & uncovered
            n_gain = int(gain.sum())
            if n_gain == 0:
                continue
            key = (-n_gain, float(runtime_nb[gain, a].sum()), algorithm_ids[a])
            if best_key is None or key < best_key:
                best_key, best_a = key, a
        if best_a < 0:
            break
        picked.append(best_a)
        uncovered &= ~solved_nb[:, best_a]
    return tuple(algorithm_ids[a] for a in picked)


def allocate_and_order(
    selected: Sequence[str],
    solved_nb: np.ndarray,
    runtime_nb: np.ndarray,
    algorithm_ids: Sequence[str],
    timeout: float,
    backup: str,
) -> Schedule:
    """Split the time window proportionally to solved neighborhood instances.

    Every selected algorithm gets one slot share per neighborhood instance it
    solves; the backup algorithm gets the shares of the instances no selected
    algorithm solves (merged with its own when it is selected). Slots are then
    ordered by ascending mean runtime over the whole neighborhood (timeout
    where unsolved), ties by id.
    """
    if timeout <= 0:
        raise ValueError("timeout must be positive")
    if not selected:
        raise ValueError("empty selection")
    index = {a: i for i, a in enumerate(algorithm_ids)}
    sel_idx = [index[a] for a in selected]

    counts: dict[str, int] = {}
    for a, col in zip(selected, sel_idx):
        n_solved = int(solved_nb[:, col].sum())
        if n_solved:
            counts[a] = n_solved
    covered = solved_nb[:, sel_idx].any(axis=1)
    n_unsolved = int((~covered).sum())
    if n_unsolved:
        counts[backup] = counts.get(backup, 0) + n_unsolved

    total = sum(counts.values())
    if not counts or total == 0:
        log.warning("selection solves no neighborhood instance; backup gets all of it")
        return Schedule(slots=((backup, float(timeout)),))

    mean_rt = runtime_nb.mean(axis=0)
    ordered = sorted(counts, key=lambda a: (float(mean_rt[index[a]]), a))
    return Schedule(
        slots=tuple((a, counts[a] * timeout / total) for a in ordered)
    )


def backup_solver(
    solved_train: np.ndarray,
    runtime_train: np.ndarray,
    algorithm_ids: Sequence[str],
    timeout: float,
    penalty: float = DEFAULT_PENALTY,
) -> str:
    """Algorithm minimizing the summed penalized runtime over the training
    set; ties go to the lexicographically smallest id."""
    if solved_train.shape[0] == 0:
        raise ValueError("empty training set")
    ok = solved_train & (runtime_train < timeout)
    pars = np.where(ok, runtime_train, penalty * timeout).sum(axis=0)
    best = pars.min()
    tied = [a for a in range(len(algorithm_ids)) if pars[a] == best]
    return min((algorithm_ids[a] for a in tied))


def make_schedule(query_features: np.ndarray, state: TrainedState) -> Schedule:
    """Schedule one query: scale its raw feature row, find its neighborhood,
    select a solver subset per the configured engine, then allocate slots."""
    q = state.scaling.transform(np.asarray(query_features, dtype=float)[None, :])[0]
    nb = knn(q, state.train_scaled, state.params.k)
    rows = list(nb.indices)
    solved_nb = state.solved[rows]
    runtime_nb = state.runtime[rows]
    if state.params.engine is Engine.EXHAUSTIVE:
        selected = select_subset_exhaustive(solved_nb, runtime_nb, state.algorithm_ids)
    else:
        selected = select_subset_greedy(
            solved_nb, runtime_nb, state.algorithm_ids, state.params.lambda_sched
        )
    if not selected:
        log.warning("no algorithm solves any neighbor; falling back to backup")
        return Schedule(slots=((state.params.backup, float(state.timeout)),))
    return allocate_and_order(
        selected,
        solved_nb,
        runtime_nb,
        state.algorithm_ids,
        state.timeout,
        state.params.backup,
    )


def schedule_for_instance(scenario: Scenario, state: TrainedState, instance_id: str) -> Schedule:
    row = scenario.instance_index(instance_id)
    return make_schedule(scenario.features[row], state)
