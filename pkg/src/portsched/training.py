"""Data preparation, fold construction, configuration learning and the
repeated nested cross-validation driver.

The configuration search grows a feature set one feature at a time while
scanning neighborhood sizes, accepting a (feature, k) pair only when it
strictly improves the incumbent validation score; specializations fix either
side. All randomness is derived from (seed, repetition, fold) so whole
experiments are reproducible bit for bit.
"""

from __future__ import annotations

import enum
import hashlib
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .batchscore import FoldScorer
from .metrics import (
    DEFAULT_PENALTY,
    UndefinedBaselineError,
    closed_gap,
    outcome_par,
    sbs,
    simulate_schedule,
    vbs_par,
)
from .scenario import Scenario, ScenarioError, discard_unsolvable, fit_feature_scaling
from .scheduling import (
    Engine,
    SelectorParams,
    TrainedState,
    backup_solver,
    make_schedule,
)

ScoreMany = Callable[[Sequence[int], Sequence[int]], Sequence[float]]


class SplitMode(str, enum.Enum):
    RANDOM = "random"
    STRATIFIED = "stratified"
    RANK = "rank"


class LearningMode(str, enum.Enum):
    K_ONLY = "k"
    F_ONLY = "f"
    FK = "fk"
    NONE = "none"


class FoldTimeout(Exception):
    """The training time cap expired before a fold finished learning."""


@dataclass(frozen=True)
class TrainingConfig:
    split_mode: SplitMode = SplitMode.RANK
    instance_limit: int = 700
    max_features: int = 5
    max_k: int = 30
    lambda_sched: int = 3
    seed: int = 100
    time_cap: float = 86400.0
    learning_mode: LearningMode = LearningMode.FK
    engine_train: Engine = Engine.GREEDY
    engine_test: Engine = Engine.GREEDY
    penalty: float = DEFAULT_PENALTY
    charge_feature_cost: bool = True
    n_outer_folds: int = 5
    n_inner_folds: int = 10

    def __post_init__(self):
        if self.instance_limit < 1 or self.max_features < 1 or self.max_k < 1:
            raise ValueError("limits must be positive")
        if self.lambda_sched < 1:
            raise ValueError("lambda_sched must be positive")
        if self.time_cap <= 0:
            raise ValueError("time_cap must be positive")


def derive_seed(seed: int, *parts) -> int:
    """Stable child seed: first 8 bytes of blake2b over 'seed:part:part...'."""
    text = ":".join([str(seed), *map(str, parts)])
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def default_k(n_training_instances: int) -> int:
    """Square root of the training-set size, rounded to the nearest integer."""
    return max(1, int(round(math.sqrt(n_training_instances))))


def _fastest_solver(scenario: Scenario, row: int) -> str | None:
    solvers = np.flatnonzero(scenario.solved[row])
    if solvers.size == 0:
        return None
    best = scenario.runtime[row, solvers].min()
    tied = [int(a) for a in solvers if scenario.runtime[row, a] == best]
    return min(scenario.algorithm_ids[a] for a in tied)


def prepare_training_set(
    scenario: Scenario,
    train_ids: Sequence[str],
    instance_limit: int,
    seed: int,
) -> list[str]:
    """Order and cap the training instances.

    Each instance joins the list of the solver that solves it fastest (ties
    to the smaller id, globally-unsolvable instances dropped); each list is
    sorted hardest-to-easiest by that solver's runtime; instances are then
    drawn round-robin across the lists (solver ids in lexicographic order)
    until ``instance_limit`` or exhaustion. The seed fixes the order among
    equally hard instances.
    """
    rng = np.random.default_rng(derive_seed(seed, "prepare"))
    ids = list(train_ids)
    perm = rng.permutation(len(ids))
    ids = [ids[i] for i in perm]

    by_solver: dict[str, list[tuple[float, str]]] = {}
    for inst in ids:
        row = scenario.instance_index(inst)
        solver = _fastest_solver(scenario, row)
        if solver is None:
            continue
        rt = float(scenario.runtime[row, scenario.algorithm_index(solver)])
        by_solver.setdefault(solver, []).append((rt, inst))

    queues = {
        solver: [inst for _, inst in sorted(items, key=lambda t: -t[0])]
        for solver, items in by_solver.items()
    }
    order = sorted(queues)
    out: list[str] = []
    cursors = {s: 0 for s in order}
    while len(out) < instance_limit:
        progressed = False
        for solver in order:
            if len(out) >= instance_limit:
                break
            queue = queues[solver]
            cur = cursors[solver]
            if cur < len(queue):
                out.append(queue[cur])
                cursors[solver] = cur + 1
                progressed = True
        if not progressed:
            break
    return out


def best_solver_labels(scenario: Scenario, instance_ids: Sequence[str]) -> list[str]:
    labels = []
    for inst in instance_ids:
        solver = _fastest_solver(scenario, scenario.instance_index(inst))
        labels.append(solver if solver is not None else "")
    return labels


def split_folds(
    prepared: Sequence[str],
    mode: SplitMode,
    n_folds: int,
    seed: int,
    scenario: Scenario,
    penalty: float = DEFAULT_PENALTY,
) -> list[list[str]]:
    """Partition prepared instances into folds of near-equal size.

    random: seeded shuffle, then dealt round-robin. stratified: within each
    best-solver label a seeded shuffle, dealt round-robin with a running fold
    cursor so both per-label and total fold sizes differ by at most one.
    rank: sorted by hardness (summed penalized runtime over the portfolio)
    descending, dealt round-robin.
    """
    prepared = list(prepared)
    if n_folds < 2:
        raise ValueError("need at least two folds")
    if n_folds > len(prepared):
        raise ValueError(
            f"cannot split {len(prepared)} instances into {n_folds} folds"
        )
    rng = np.random.default_rng(derive_seed(seed, "split", mode.value))
    folds: list[list[str]] = [[] for _ in range(n_folds)]

    if mode is SplitMode.RANDOM:
        perm = rng.permutation(len(prepared))
        shuffled = [prepared[i] for i in perm]
        for j, inst in enumerate(shuffled):
            folds[j % n_folds].append(inst)
    elif mode is SplitMode.STRATIFIED:
        labels = best_solver_labels(scenario, prepared)
        groups: dict[str, list[str]] = {}
        for inst, label in zip(prepared, labels):
            groups.setdefault(label, []).append(inst)
        cursor = 0
        for label in sorted(groups):
            members = groups[label]
            perm = rng.permutation(len(members))
            for i in perm:
                folds[cursor % n_folds].append(members[i])
                cursor += 1
    elif mode is SplitMode.RANK:
        rows = scenario.rows(prepared)
        rt = scenario.runtime[rows]
        ok = scenario.solved[rows] & (rt < scenario.timeout)
        hardness = np.where(ok, rt, penalty * scenario.timeout).sum(axis=1)
        order = np.argsort(-hardness, kind="stable")
        for j, idx in enumerate(order):
            folds[j % n_folds].append(prepared[int(idx)])
    else:  # pragma: no cover
        raise ValueError(f"unknown split mode {mode}")
    return folds


@dataclass(frozen=True)
class FoldPlan:
    """Deterministic partition for one repetition of the nested CV."""

    repetition: int
    seed: int
    outer: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]
    prepared: tuple[tuple[str, ...], ...]
    inner: tuple[tuple[tuple[str, ...], ...], ...]


def build_fold_plan(
    scenario: Scenario, config: TrainingConfig, repetition: int
) -> FoldPlan:
    universe = discard_unsolvable(scenario, scenario.instance_ids)
    rng = np.random.default_rng(derive_seed(config.seed, "outer", repetition))
    perm = rng.permutation(len(universe))
    shuffled = [universe[i] for i in perm]
    n = config.n_outer_folds
    if n > len(shuffled):
        raise ScenarioError(
            f"{len(shuffled)} solvable instances cannot fill {n} outer folds"
        )
    tests = [shuffled[j::n] for j in range(n)]
    outer = []
    prepared_all = []
    inner_all = []
    for i, test in enumerate(tests):
        test_set = set(test)
        train = [x for x in shuffled if x not in test_set]
        fold_seed = derive_seed(config.seed, "fold", repetition, i)
        prepared = prepare_training_set(
            scenario, train, config.instance_limit, fold_seed
        )
        inner = split_folds(
            prepared,
            config.split_mode,
            config.n_inner_folds,
            fold_seed,
            scenario,
            config.penalty,
        )
        outer.append((tuple(train), tuple(test)))
        prepared_all.append(tuple(prepared))
        inner_all.append(tuple(tuple(f) for f in inner))
    return FoldPlan(
        repetition=repetition,
        seed=config.seed,
        outer=tuple(outer),
        prepared=tuple(prepared_all),
        inner=tuple(inner_all),
    )


# ---------------------------------------------------------------------------
# Configuration learning
# ---------------------------------------------------------------------------


def learn_fk(
    score_many: ScoreMany,
    feature_pool: Sequence[int],
    max_k: int,
    max_f: int,
    deadline: float | None = None,
) -> tuple[tuple[int, ...], int, float]:
    """Co-learn a feature subset and neighborhood size.

    Grows the feature set greedily: every remaining pool feature is scored at
    every k in [1, max_k]; the strictly best (feature, k) pair is accepted,
    otherwise the search stops. Ties keep the first candidate encountered
    (pool order, then smaller k). Hitting the deadline returns the incumbent.
    Returns (features, k, best score).
    """
    if not feature_pool:
        raise ValueError("empty feature pool")
    ks = list(range(1, max_k + 1))
    best_f: list[int] = []
    best_k = 1
    best_score = float("-inf")
    pool = list(feature_pool)
    while len(best_f) < max_f and pool:
        curr_score = float("-inf")
        curr_feat: int | None = None
        curr_k = 1
        for f in pool:
            if deadline is not None and time.perf_counter() > deadline:
                return tuple(best_f), best_k, best_score
            scores = score_many(tuple(best_f) + (f,), ks)
            for k, s in zip(ks, scores):
                if s > curr_score:
                    curr_score, curr_feat, curr_k = s, f, k
        if curr_feat is None or curr_score <= best_score:
            break
        best_score = curr_score
        best_f.append(curr_feat)
        best_k = curr_k
        pool.remove(curr_feat)
    return tuple(best_f), best_k, best_score


def learn_k(
    score_many: ScoreMany,
    feature_pool: Sequence[int],
    max_k: int,
    deadline: float | None = None,
) -> tuple[tuple[int, ...], int, float]:
    """Scan k in [1, max_k] with the whole feature pool; ties pick smaller k."""
    if not feature_pool:
        raise ValueError("empty feature pool")
    if deadline is not None and time.perf_counter() > deadline:
        return tuple(feature_pool), 1, float("-inf")
    scores = score_many(tuple(feature_pool), list(range(1, max_k + 1)))
    best_k, best_score = 1, float("-inf")
    for k, s in enumerate(scores, start=1):
        if s > best_score:
            best_k, best_score = k, s
    return tuple(feature_pool), best_k, best_score


def learn_f(
    score_many: ScoreMany,
    feature_pool: Sequence[int],
    max_f: int,
    k_fixed: int,
    deadline: float | None = None,
) -> tuple[tuple[int, ...], int, float]:
    """Forward feature selection at a fixed neighborhood size."""
    if not feature_pool:
        raise ValueError("empty feature pool")
    best_f: list[int] = []
    best_score = float("-inf")
    pool = list(feature_pool)
    while len(best_f) < max_f and pool:
        curr_score = float("-inf")
        curr_feat: int | None = None
        for f in pool:
            if deadline is not None and time.perf_counter() > deadline:
                return tuple(best_f), k_fixed, best_score
            (s,) = score_many(tuple(best_f) + (f,), [k_fixed])
            if s > curr_score:
                curr_score, curr_feat = s, f
        if curr_feat is None or curr_score <= best_score:
            break
        best_score = curr_score
        best_f.append(curr_feat)
        pool.remove(curr_feat)
    return tuple(best_f), k_fixed, best_score


# ---------------------------------------------------------------------------
# Reference scorer (per-instance path)
# ---------------------------------------------------------------------------


def fit_trained_state(
    scenario: Scenario,
    train_ids: Sequence[str],
    feature_indices: Sequence[int],
    k: int,
    *,
    lambda_sched: int = 3,
    engine: Engine = Engine.GREEDY,
    penalty: float = DEFAULT_PENALTY,
    backup: str | None = None,
) -> TrainedState:
    """Fit the feature transform and bundle the training data for scheduling."""
    if not len(train_ids):
        raise ValueError("empty training set")
    if not len(feature_indices):
        raise ValueError("empty feature selection")
    rows = scenario.rows(train_ids)
    scaling = fit_feature_scaling(scenario.features, rows, feature_indices)
    solved = scenario.solved[rows]
    runtime = scenario.runtime[rows]
    if backup is None:
        backup = backup_solver(
            solved, runtime, scenario.algorithm_ids, scenario.timeout, penalty
        )
    params = SelectorParams(
        k=k,
        selected_features=tuple(int(c) for c in feature_indices),
        backup=backup,
        lambda_sched=lambda_sched,
        engine=engine,
    )
    return TrainedState(
        instance_ids=tuple(train_ids),
        algorithm_ids=scenario.algorithm_ids,
        scaling=scaling,
        train_scaled=scaling.transform(scenario.features[rows]),
        solved=solved,
        runtime=runtime,
        timeout=scenario.timeout,
        params=params,
    )


def get_score(
    scenario: Scenario,
    train_ids: Sequence[str],
    val_ids: Sequence[str],
    k: int,
    feature_indices: Sequence[int],
    *,
    lambda_sched: int = 3,
    engine: Engine = Engine.GREEDY,
    penalty: float = DEFAULT_PENALTY,
    charge_feature_cost: bool = True,
) -> float:
    """Validation score of one candidate configuration (reference path).

    Builds a schedule for every validation instance from the training data
    with the candidate (features, k), simulates it, and returns the negated
    mean penalized runtime so that greater is better.
    """
    if not len(train_ids):
        raise ValueError("empty inner-training set")
    if not len(val_ids):
        raise ValueError("empty validation set")
    state = fit_trained_state(
        scenario,
        train_ids,
        feature_indices,
        k,
        lambda_sched=lambda_sched,
        engine=engine,
        penalty=penalty,
    )
    pars = []
    for inst in val_ids:
        row = scenario.instance_index(inst)
        schedule = make_schedule(scenario.features[row], state)
        outcome = simulate_schedule(
            schedule, scenario, inst, charge_feature_cost=charge_feature_cost
        )
        pars.append(outcome_par(outcome, scenario.timeout, penalty))
    return -float(np.mean(pars))


def _reference_score_many(
    scenario: Scenario,
    train_ids: Sequence[str],
    val_ids: Sequence[str],
    config: TrainingConfig,
) -> ScoreMany:
    def score(features: Sequence[int], ks: Sequence[int]) -> list[float]:
        out = []
        for k in ks:
            try:
                out.append(
                    get_score(
                        scenario,
                        train_ids,
                        val_ids,
                        k,
                        features,
                        lambda_sched=config.lambda_sched,
                        engine=config.engine_train,
                        penalty=config.penalty,
                        charge_feature_cost=config.charge_feature_cost,
                    )
                )
            except ScenarioError:
                out.append(float("-inf"))
        return out

    return score


# ---------------------------------------------------------------------------
# Learned models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LearnedModel:
    """A fitted selector plus everything needed to persist and rebuild it."""

    scenario_name: str
    learning_mode: LearningMode
    feature_names: tuple[str, ...]
    k: int
    backup: str
    engine: Engine
    lambda_sched: int
    seed: int
    seed_lineage: str
    training_instances: tuple[str, ...]
    charge_feature_cost: bool
    penalty: float
    state: TrainedState = field(repr=False, compare=False)

    def to_json_dict(self) -> dict:
        return {
            "format": "portsched-model/1",
            "scenario": self.scenario_name,
            "learning_mode": self.learning_mode.value,
            "selected_features": list(self.feature_names),
            "k": self.k,
            "backup": self.backup,
            "engine": self.engine.value,
            "lambda_sched": self.lambda_sched,
            "seed": self.seed,
            "seed_lineage": self.seed_lineage,
            "training_instances": list(self.training_instances),
            "charge_feature_cost": self.charge_feature_cost,
            "penalty": self.penalty,
            "timeout": self.state.timeout,
        }


def fit_model(
    scenario: Scenario,
    training_instances: Sequence[str],
    feature_indices: Sequence[int],
    k: int,
    config: TrainingConfig,
    *,
    engine: Engine | None = None,
    seed_lineage: str = "",
    backup: str | None = None,
) -> LearnedModel:
    engine = config.engine_test if engine is None else engine
    state = fit_trained_state(
        scenario,
        training_instances,
        feature_indices,
        k,
        lambda_sched=config.lambda_sched,
        engine=engine,
        penalty=config.penalty,
        backup=backup,
    )
    return LearnedModel(
        scenario_name=scenario.name,
        learning_mode=config.learning_mode,
        feature_names=tuple(scenario.feature_names[c] for c in state.params.selected_features),
        k=k,
        backup=state.params.backup,
        engine=engine,
        lambda_sched=config.lambda_sched,
        seed=config.seed,
        seed_lineage=seed_lineage,
        training_instances=tuple(training_instances),
        charge_feature_cost=config.charge_feature_cost,
        penalty=config.penalty,
        state=state,
    )


def rebuild_model(scenario: Scenario, doc: dict) -> LearnedModel:
    """Rebuild a persisted model against its scenario directory.

    The document is a recipe: feature names, k, backup, engine and the
    training instance ids; the scenario provides the data. Raises on
    feature-name or instance mismatches.
    """
    missing = [f for f in doc["selected_features"] if f not in scenario.feature_names]
    if missing:
        raise ScenarioError(f"scenario lacks model features: {', '.join(missing)}")
    name_to_col = {f: i for i, f in enumerate(scenario.feature_names)}
    feature_indices = tuple(name_to_col[f] for f in doc["selected_features"])
    backup = str(doc["backup"])
    if backup not in scenario.algorithm_ids:
        raise ScenarioError(f"scenario lacks backup algorithm {backup!r}")
    config = TrainingConfig(
        learning_mode=LearningMode(doc["learning_mode"]),
        lambda_sched=int(doc["lambda_sched"]),
        seed=int(doc["seed"]),
        charge_feature_cost=bool(doc["charge_feature_cost"]),
        penalty=float(doc["penalty"]),
    )
    return fit_model(
        scenario,
        tuple(doc["training_instances"]),
        feature_indices,
        int(doc["k"]),
        config,
        engine=Engine(doc["engine"]),
        seed_lineage=str(doc.get("seed_lineage", "")),
        backup=backup,
    )


# ---------------------------------------------------------------------------
# Nested cross-validation driver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FoldResult:
    repetition: int
    fold: int
    status: str  # "ok" or "timeout"
    closed_gap: float | None
    par10: float
    solved_fraction: float
    n_test: int
    k: int
    selected_features: tuple[str, ...]
    backup: str
    validation_score: float | None
    wall_time_s: float


@dataclass(frozen=True)
class ExperimentReport:
    scenario_name: str
    config: TrainingConfig
    n_repetitions: int
    folds: tuple[FoldResult, ...]
    mean_closed_gap: float | None
    per_repetition_closed_gap: tuple[float | None, ...]
    undefined_gap_folds: int


def learn_configuration(
    scenario: Scenario,
    prepared: Sequence[str],
    inner_folds: Sequence[Sequence[str]],
    config: TrainingConfig,
    deadline: float | None = None,
) -> tuple[tuple[int, ...], int, float, int]:
    """Inner cross-validation: learn one configuration per validation fold and
    keep the one with the best validation score (ties to the earliest fold).

    Returns (feature columns, k, validation score, winning fold index).
    Raises :class:`FoldTimeout` when the deadline expires before any inner
    fold finishes.
    """
    results: list[tuple[float, int, tuple[int, ...], int]] = []
    for j, val_fold in enumerate(inner_folds):
        if deadline is not None and time.perf_counter() > deadline:
            raise FoldTimeout(f"time cap hit before inner fold {j} started")
        val_set = set(val_fold)
        inner_train = [x for x in prepared if x not in val_set]
        if not inner_train:
            raise ScenarioError("inner training set is empty")
        if config.engine_train is Engine.GREEDY:
            scorer = FoldScorer(
                scenario,
                inner_train,
                list(val_fold),
                lambda_sched=config.lambda_sched,
                penalty=config.penalty,
                charge_feature_cost=config.charge_feature_cost,
            )
            score_many: ScoreMany = scorer.score_many
            pool = scorer.feature_pool
        else:
            score_many = _reference_score_many(scenario, inner_train, list(val_fold), config)
            scaling = fit_feature_scaling(scenario.features, scenario.rows(inner_train))
            pool = scaling.kept_columns

        if config.learning_mode is LearningMode.FK:
            feats, k, score = learn_fk(
                score_many, pool, config.max_k, config.max_features, deadline
            )
        elif config.learning_mode is LearningMode.K_ONLY:
            feats, k, score = learn_k(score_many, pool, config.max_k, deadline)
        elif config.learning_mode is LearningMode.F_ONLY:
            feats, k, score = learn_f(
                score_many,
                pool,
                config.max_features,
                default_k(len(inner_train)),
                deadline,
            )
        else:  # pragma: no cover
            raise ValueError("learning mode none has nothing to learn")
        if feats:
            results.append((score, j, feats, k))
    if deadline is not None and time.perf_counter() > deadline:
        raise FoldTimeout("time cap hit during inner cross-validation")
    if not results:
        raise ScenarioError("no inner fold produced a configuration")
    best_score, best_j, best_feats, best_k = max(
        results, key=lambda t: (t[0], -t[1])
    )
    return best_feats, best_k, best_score, best_j


def _sbs_fold_result(
    scenario: Scenario,
    config: TrainingConfig,
    repetition: int,
    fold: int,
    test_ids: Sequence[str],
    wall_time: float,
) -> FoldResult:
    """Timeout fallback: score the fold as if the single best solver ran."""
    sbs_id, m_sbs = sbs(scenario, test_ids, config.penalty)
    rows = scenario.rows(test_ids)
    col = scenario.algorithm_index(sbs_id)
    solved = scenario.solved[rows, col] & (scenario.runtime[rows, col] < scenario.timeout)
    return FoldResult(
        repetition=repetition,
        fold=fold,
        status="timeout",
        closed_gap=0.0,
        par10=m_sbs,
        solved_fraction=float(solved.mean()),
        n_test=len(test_ids),
        k=0,
        selected_features=(),
        backup=sbs_id,
        validation_score=None,
        wall_time_s=wall_time,
    )


def run_fold(
    scenario: Scenario,
    config: TrainingConfig,
    plan: FoldPlan,
    fold: int,
) -> FoldResult:
    """Train on one outer fold and evaluate on its held-out test set."""
    start = time.perf_counter()
    deadline = start + config.time_cap
    _, test = plan.outer[fold]
    prepared = list(plan.prepared[fold])
    lineage = f"{config.seed}:{plan.repetition}:{fold}"

    validation_score: float | None = None
    if config.learning_mode is LearningMode.NONE:
        feature_indices: tuple[int, ...] = tuple(range(len(scenario.feature_names)))
        k = default_k(len(prepared))
    else:
        try:
            feature_indices, k, validation_score, _ = learn_configuration(
                scenario, prepared, plan.inner[fold], config, deadline
            )
        except FoldTimeout:
            return _sbs_fold_result(
                scenario, config, plan.repetition, fold, test,
                time.perf_counter() - start,
            )
        if config.learning_mode is LearningMode.F_ONLY:
            # The final model's k follows the training set it is fitted on.
            k = default_k(len(prepared))
        elif config.learning_mode is LearningMode.K_ONLY:
            # Only k is learned; the model keeps the full feature set.
            feature_indices = tuple(range(len(scenario.feature_names)))

    model = fit_model(
        scenario, prepared, feature_indices, k, config, seed_lineage=lineage
    )
    outcomes = [
        simulate_schedule(
            make_schedule(scenario.features[scenario.instance_index(inst)], model.state),
            scenario,
            inst,
            charge_feature_cost=config.charge_feature_cost,
        )
        for inst in test
    ]
    pars = [outcome_par(o, scenario.timeout, config.penalty) for o in outcomes]
    m_s = float(np.mean(pars))
    m_vbs = vbs_par(scenario, test, config.penalty)
    _, m_sbs = sbs(scenario, test, config.penalty)
    try:
        gap = closed_gap(m_sbs, m_s, m_vbs)
    except UndefinedBaselineError:
        gap = None
    return FoldResult(
        repetition=plan.repetition,
        fold=fold,
        status="ok",
        closed_gap=gap,
        par10=m_s,
        solved_fraction=sum(o.solved for o in outcomes) / len(outcomes),
        n_test=len(test),
        k=k,
        selected_features=model.feature_names,
        backup=model.backup,
        validation_score=validation_score,
        wall_time_s=time.perf_counter() - start,
    )


def _run_task(args: tuple[Scenario, TrainingConfig, int, int]) -> FoldResult:
    scenario, config, repetition, fold = args
    plan = build_fold_plan(scenario, config, repetition)
    return run_fold(scenario, config, plan, fold)


def run_nested_cv(
    scenario: Scenario,
    config: TrainingConfig,
    n_repetitions: int = 5,
    jobs: int = 1,
) -> ExperimentReport:
    """Repeated nested cross-validation.

    Every repetition draws a fresh outer partition; each outer fold learns a
    configuration by inner cross-validation, refits on its whole prepared
    training set and is scored on the held-out test fold. Results are
    reproducible bit for bit for a fixed (config, seed); ``jobs`` only
    parallelizes across folds.
    """
    tasks = []
    for rep in range(n_repetitions):
        plan = build_fold_plan(scenario, config, rep)
        for fold in range(config.n_outer_folds):
            tasks.append((rep, fold, plan))

    results: list[FoldResult]
    if jobs > 1:
        payload = [(scenario, config, rep, fold) for rep, fold, _ in tasks]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, payload))
    else:
        results = [run_fold(scenario, config, plan, fold) for _, fold, plan in tasks]
    results.sort(key=lambda r: (r.repetition, r.fold))

    defined = [r.closed_gap for r in results if r.closed_gap is not None]
    per_rep: list[float | None] = []
    for rep in range(n_repetitions):
        gaps = [
            r.closed_gap
            for r in results
            if r.repetition == rep and r.closed_gap is not None
        ]
        per_rep.append(float(np.mean(gaps)) if gaps else None)
    return ExperimentReport(
        scenario_name=scenario.name,
        config=config,
        n_repetitions=n_repetitions,
        folds=tuple(results),
        mean_closed_gap=float(np.mean(defined)) if defined else None,
        per_repetition_closed_gap=tuple(per_rep),
        undefined_gap_folds=sum(1 for r in results if r.closed_gap is None),
    )
