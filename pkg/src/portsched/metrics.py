"""Scoring primitives: penalized runtimes, baselines, comparative scores and
schedule simulation against recorded runtimes."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .scenario import Scenario

if TYPE_CHECKING:  # pragma: no cover
    from .scheduling import Schedule

DEFAULT_PENALTY = 10.0


class UndefinedBaselineError(ValueError):
    """Raised when the single-best and virtual-best baselines coincide."""


class FailureKind(enum.Enum):
    WRONG_SOLVERS = "wrong_solvers"
    INSUFFICIENT_TIME = "insufficient_time"


@dataclass(frozen=True)
class SimulationOutcome:
    """Result of replaying a schedule on one instance.

    ``effective_time`` includes the feature-extraction cost when charged; for
    unsolved instances it equals the timeout.
    """

    instance_id: str
    solved: bool
    effective_time: float
    solving_algorithm: str | None = None
    failure_kind: FailureKind | None = None

    def __post_init__(self):
        if self.solved != (self.solving_algorithm is not None):
            raise ValueError("solved outcomes carry exactly one solving algorithm")
        if self.solved == (self.failure_kind is not None):
            raise ValueError("failure kind present iff unsolved")


@dataclass(frozen=True)
class AggregateScores:
    par: float
    solved_fraction: float
    m_vbs: float
    m_sbs: float
    closed_gap: float | None
    speedup_ratio: float


def par_value(runtime: float, solved: bool, timeout: float, penalty: float) -> float:
    """Penalized runtime of one run: the runtime when solved strictly below
    the timeout, ``penalty * timeout`` otherwise."""
    if penalty <= 1:
        raise ValueError("penalty must exceed 1")
    if timeout <= 0:
        raise ValueError("timeout must be positive")
    if solved and runtime < timeout:
        return float(runtime)
    return penalty * timeout


def par_matrix(scenario: Scenario, instance_ids: Sequence[str], penalty: float = DEFAULT_PENALTY) -> np.ndarray:
    """Penalized runtimes of every algorithm on the given instances."""
    rows = scenario.rows(instance_ids)
    rt = scenario.runtime[rows]
    ok = scenario.solved[rows] & (rt < scenario.timeout)
    return np.where(ok, rt, penalty * scenario.timeout)


def vbs_par(scenario: Scenario, instance_ids: Sequence[str], penalty: float = DEFAULT_PENALTY) -> float:
    """Mean penalized runtime of the per-instance oracle."""
    if not len(instance_ids):
        raise ValueError("empty instance set")
    return float(par_matrix(scenario, instance_ids, penalty).min(axis=1).mean())


def sbs(scenario: Scenario, instance_ids: Sequence[str], penalty: float = DEFAULT_PENALTY) -> tuple[str, float]:
    """Best fixed algorithm on the given instances and its mean penalized
    runtime; ties go to the lexicographically smallest algorithm id."""
    if not len(instance_ids):
        raise ValueError("empty instance set")
    means = par_matrix(scenario, instance_ids, penalty).mean(axis=0)
    best = means.min()
    tied = [a for a in range(scenario.n_algorithms) if means[a] == best]
    winner = min(tied, key=lambda a: scenario.algorithm_ids[a])
    return scenario.algorithm_ids[winner], float(means[winner])


def closed_gap(m_sbs: float, m_s: float, m_vbs: float) -> float:
    """Fraction of the SBS-to-VBS gap closed by a selector; negative when the
    selector is worse than the single best algorithm."""
    if m_sbs <= m_vbs:
        raise UndefinedBaselineError(
            f"degenerate baselines: m_sbs={m_sbs} <= m_vbs={m_vbs}"
        )
    return (m_sbs - m_s) / (m_sbs - m_vbs)


def speedup_ratio(m_vbs: float, m_s: float) -> float:
    """Oracle-to-selector ratio in (0, 1]; higher is better."""
    return m_vbs / m_s


def cmp_delta(t: float, t_other: float, timeout: float, delta: float = 0.0) -> float:
    """Pairwise comparative score in [0, 1].

    Timeout clauses are checked before the tie threshold, so a timed-out
    selector never earns the 0.5 tie score.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if t == timeout:
        return 0.0
    if t_other == timeout:
        return 1.0
    if abs(t - t_other) <= delta:
        return 0.5
    return t_other / (t + t_other)


def borda_scores(
    times: Mapping[str, Sequence[float]],
    timeout: float,
    delta: float = 0.0,
) -> dict[str, float]:
    """Normalized pairwise-comparison score per selector.

    ``times`` maps each selector to its per-instance times over one shared
    instance list (timeout where unsolved). Per instance each selector scores
    the sum of :func:`cmp_delta` against every other selector; the result is
    the per-instance mean of that sum.
    """
    if not times:
        return {}
    lengths = {len(v) for v in times.values()}
    if len(lengths) != 1:
        raise ValueError(f"ragged input: instance counts {sorted(lengths)}")
    n = lengths.pop()
    if n == 0:
        raise ValueError("empty instance set")
    names = list(times)
    scores = {s: 0.0 for s in names}
    for i in range(n):
        for s in names:
            t = times[s][i]
            scores[s] += sum(
                cmp_delta(t, times[o][i], timeout, delta) for o in names if o != s
            )
    return {s: scores[s] / n for s in names}


def simulate_schedule(
    schedule: "Schedule",
    scenario: Scenario,
    instance_id: str,
    *,
    charge_feature_cost: bool = True,
) -> SimulationOutcome:
    """Replay a schedule on an instance against its recorded runtimes.

    Slots run in order; the first algorithm that solves the instance within
    its slot (and within the overall timeout, feature cost included when
    charged) ends the run. Unsolved instances are classified as
    INSUFFICIENT_TIME when some scheduled algorithm could have solved the
    instance given a larger slot, WRONG_SOLVERS otherwise.
    """
    row = scenario.instance_index(instance_id)
    timeout = scenario.timeout
    cost = scenario.cost_of(instance_id) if charge_feature_cost else 0.0

    if cost > timeout:
        return SimulationOutcome(
            instance_id, False, timeout, failure_kind=FailureKind.WRONG_SOLVERS
        )

    any_could_solve = False
    elapsed = 0.0
    for algorithm_id, slot in schedule.slots:
        a = scenario.algorithm_index(algorithm_id)
        solves = bool(scenario.solved[row, a])
        any_could_solve = any_could_solve or solves
        rt = float(scenario.runtime[row, a])
        if solves and rt <= slot:
            total = cost + elapsed + rt
            if total <= timeout:
                return SimulationOutcome(instance_id, True, total, algorithm_id)
        elapsed += slot

    kind = FailureKind.INSUFFICIENT_TIME if any_could_solve else FailureKind.WRONG_SOLVERS
    return SimulationOutcome(instance_id, False, timeout, failure_kind=kind)


def outcome_par(outcome: SimulationOutcome, timeout: float, penalty: float = DEFAULT_PENALTY) -> float:
    return par_value(outcome.effective_time, outcome.solved, timeout, penalty)


def aggregate_outcomes(
    outcomes: Sequence[SimulationOutcome],
    scenario: Scenario,
    penalty: float = DEFAULT_PENALTY,
) -> AggregateScores:
    """Selector-level scores over a set of simulated outcomes, with the
    oracle/single-best baselines computed on the same instances."""
    if not outcomes:
        raise ValueError("no outcomes to aggregate")
    ids = [o.instance_id for o in outcomes]
    pars = [outcome_par(o, scenario.timeout, penalty) for o in outcomes]
    m_s = float(np.mean(pars))
    m_vbs = vbs_par(scenario, ids, penalty)
    _, m_sbs = sbs(scenario, ids, penalty)
    gap = closed_gap(m_sbs, m_s, m_vbs) if m_sbs > m_vbs else None
    return AggregateScores(
        par=m_s,
        solved_fraction=sum(o.solved for o in outcomes) / len(outcomes),
        m_vbs=m_vbs,
        m_sbs=m_sbs,
        closed_gap=gap,
        speedup_ratio=speedup_ratio(m_vbs, m_s),
    )
