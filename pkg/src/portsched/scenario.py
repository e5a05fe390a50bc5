"""Scenario container, ASlib-style directory loading and feature preprocessing.

A scenario couples an instances × algorithms performance matrix with an
instances × features matrix under a single solving timeout. Unsolved entries
carry the timeout as their effective runtime; missing feature values are NaN.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .arff import NUMERIC, RelationTable, parse_arff_file

log = logging.getLogger(__name__)

RUNS_FILE = "algorithm_runs.arff"
FEATURES_FILE = "feature_values.arff"
COSTS_FILE = "feature_costs.arff"
DESCRIPTION_FILE = "description.txt"


class ScenarioError(ValueError):
    """Inconsistent or incomplete scenario data."""


@dataclass(frozen=True)
class Scenario:
    """Immutable algorithm-selection scenario.

    ``runtime[i, a]`` is the effective runtime in seconds of algorithm ``a`` on
    instance ``i``: the recorded runtime when ``solved[i, a]``, the timeout
    otherwise. ``features`` may contain NaN for missing values.
    """

    name: str
    instance_ids: tuple[str, ...]
    algorithm_ids: tuple[str, ...]
    runtime: np.ndarray
    solved: np.ndarray
    features: np.ndarray
    feature_names: tuple[str, ...]
    timeout: float
    feature_cost: np.ndarray | None = None
    _instance_index: dict = field(init=False, repr=False, compare=False)
    _algorithm_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n, m = len(self.instance_ids), len(self.algorithm_ids)
        if m < 2:
            raise ScenarioError("a scenario needs more than one algorithm")
        if self.timeout <= 0:
            raise ScenarioError(f"non-positive timeout {self.timeout}")
        if len(set(self.instance_ids)) != n:
            raise ScenarioError("duplicate instance ids")
        if len(set(self.algorithm_ids)) != m:
            raise ScenarioError("duplicate algorithm ids")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ScenarioError("duplicate feature names")
        if self.runtime.shape != (n, m) or self.solved.shape != (n, m):
            raise ScenarioError("performance matrix shape mismatch")
        if self.features.shape[0] != n:
            raise ScenarioError("feature matrix row count mismatch")
        if self.features.shape[1] != len(self.feature_names):
            raise ScenarioError("feature matrix column count mismatch")
        if np.any(self.runtime < 0):
            raise ScenarioError("negative runtimes")
        if np.any(self.runtime[self.solved] > self.timeout):
            raise ScenarioError("solved entry with runtime above the timeout")
        if self.feature_cost is not None:
            if self.feature_cost.shape != (n,):
                raise ScenarioError("feature cost vector length mismatch")
            if np.any(self.feature_cost < 0):
                raise ScenarioError("negative feature costs")
        object.__setattr__(
            self, "_instance_index", {s: i for i, s in enumerate(self.instance_ids)}
        )
        object.__setattr__(
            self, "_algorithm_index", {s: i for i, s in enumerate(self.algorithm_ids)}
        )

    @property
    def n_instances(self) -> int:
        return len(self.instance_ids)

    @property
    def n_algorithms(self) -> int:
        return len(self.algorithm_ids)

    def instance_index(self, instance_id: str) -> int:
        try:
            return self._instance_index[instance_id]
        except KeyError:
            raise ScenarioError(f"unknown instance {instance_id!r}") from None

    def algorithm_index(self, algorithm_id: str) -> int:
        try:
            return self._algorithm_index[algorithm_id]
        except KeyError:
            raise ScenarioError(f"unknown algorithm {algorithm_id!r}") from None

    def rows(self, instance_ids: Sequence[str]) -> np.ndarray:
        return np.array([self.instance_index(s) for s in instance_ids], dtype=int)

    def cost_of(self, instance_id: str) -> float:
        if self.feature_cost is None:
            return 0.0
        return float(self.feature_cost[self.instance_index(instance_id)])


def _parse_description(path: Path) -> dict[str, str]:
    entries: dict[str, str] = {}
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or ":" not in line:
            continue
        key, value = line.split(":", 1)
        key = key.strip()
        if key and key not in entries:
            entries[key] = value.strip()
    return entries


def _numeric_cell(value, what: str) -> float:
    if value is None:
        raise ScenarioError(f"{what} is missing")
    if isinstance(value, float):
        return value
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ScenarioError(f"{what} is not numeric: {value!r}") from None


def _first_repetition(table: RelationTable, key_columns: tuple[int, ...]):
    """Keep only the first row per key, in first-appearance order."""
    seen = {}
    for row in table.rows:
        key = tuple(row[c] for c in key_columns)
        if key not in seen:
            seen[key] = row
    return seen


def load_scenario(directory: str | Path) -> Scenario:
    """Load an ASlib-style scenario directory.

    Requires ``description.txt`` (for the cutoff time), ``algorithm_runs.arff``
    and ``feature_values.arff``; ``feature_costs.arff`` is optional. Instances
    present in only one of runs/features are dropped with a warning; a run row
    whose runstatus is not "ok" marks the pair unsolved at the timeout.
    """
    directory = Path(directory)
    for required in (DESCRIPTION_FILE, RUNS_FILE, FEATURES_FILE):
        if not (directory / required).is_file():
            raise ScenarioError(f"missing mandatory file {required} in {directory}")

    meta = _parse_description(directory / DESCRIPTION_FILE)
    if "algorithm_cutoff_time" not in meta:
        raise ScenarioError("description.txt does not define algorithm_cutoff_time")
    timeout = float(meta["algorithm_cutoff_time"])
    if timeout <= 0:
        raise ScenarioError(f"non-positive cutoff time {timeout}")
    name = meta.get("scenario_id", directory.name)

    runs = parse_arff_file(directory / RUNS_FILE)
    inst_col = runs.attribute_index("instance_id")
    algo_col = runs.attribute_index("algorithm")
    runtime_col = runs.attribute_index("runtime")
    status_col = runs.attribute_index("runstatus")

    run_rows = _first_repetition(runs, (inst_col, algo_col))
    run_instances: list[str] = []
    run_algorithms: list[str] = []
    seen_inst, seen_algo = set(), set()
    for inst, algo in run_rows:
        if inst not in seen_inst:
            seen_inst.add(inst)
            run_instances.append(str(inst))
        if algo not in seen_algo:
            seen_algo.add(algo)
            run_algorithms.append(str(algo))

    feats = parse_arff_file(directory / FEATURES_FILE)
    feat_inst_col = feats.attribute_index("instance_id")
    skip_cols = {feat_inst_col}
    try:
        skip_cols.add(feats.attribute_index("repetition"))
    except KeyError:
        pass
    feature_cols = [
        i
        for i, attr in enumerate(feats.attributes)
        if i not in skip_cols and attr.kind == NUMERIC
    ]
    feature_names = tuple(feats.attributes[i].name for i in feature_cols)
    feat_rows = _first_repetition(feats, (feat_inst_col,))
    feat_instances = {str(key[0]) for key in feat_rows}

    instance_ids = [i for i in run_instances if i in feat_instances]
    dropped_runs = [i for i in run_instances if i not in feat_instances]
    dropped_feats = sorted(feat_instances - set(run_instances))
    if dropped_runs:
        log.warning(
            "%s: dropping %d instance(s) present in runs but not in features: %s",
            name, len(dropped_runs), ", ".join(dropped_runs[:5]),
        )
    if dropped_feats:
        log.warning(
            "%s: dropping %d instance(s) present in features but not in runs: %s",
            name, len(dropped_feats), ", ".join(dropped_feats[:5]),
        )
    if not instance_ids:
        raise ScenarioError("no instances shared by runs and features")

    n, m = len(instance_ids), len(run_algorithms)
    runtime = np.empty((n, m), dtype=float)
    solved = np.zeros((n, m), dtype=bool)
    for i, inst in enumerate(instance_ids):
        for a, algo in enumerate(run_algorithms):
            row = run_rows.get((inst, algo))
            if row is None:
                raise ScenarioError(
                    f"no run recorded for instance {inst!r} and algorithm {algo!r}"
                )
            status = row[status_col]
            if row[runtime_col] is None and status is not None and str(status).lower() != "ok":
                rt = timeout
            else:
                rt = _numeric_cell(
                    row[runtime_col], f"runtime of ({inst!r}, {algo!r})"
                )
            ok = status is not None and str(status).lower() == "ok" and rt <= timeout
            solved[i, a] = ok
            runtime[i, a] = rt if ok else timeout

    features = np.full((n, len(feature_cols)), np.nan)
    for i, inst in enumerate(instance_ids):
        row = feat_rows[(inst,)]
        for j, col in enumerate(feature_cols):
            cell = row[col]
            if cell is not None:
                features[i, j] = float(cell)

    feature_cost = None
    costs_path = directory / COSTS_FILE
    if costs_path.is_file():
        costs = parse_arff_file(costs_path)
        cost_inst_col = costs.attribute_index("instance_id")
        cost_skip = {cost_inst_col}
        try:
            cost_skip.add(costs.attribute_index("repetition"))
        except KeyError:
            pass
        cost_cols = [
            i
            for i, attr in enumerate(costs.attributes)
            if i not in cost_skip and attr.kind == NUMERIC
        ]
        cost_rows = _first_repetition(costs, (cost_inst_col,))
        feature_cost = np.zeros(n)
        for i, inst in enumerate(instance_ids):
            row = cost_rows.get((inst,))
            if row is None:
                log.warning("%s: no feature cost row for instance %s", name, inst)
                continue
            feature_cost[i] = sum(
                float(row[c]) for c in cost_cols if row[c] is not None
            )

    return Scenario(
        name=name,
        instance_ids=tuple(instance_ids),
        algorithm_ids=tuple(run_algorithms),
        runtime=runtime,
        solved=solved,
        features=features,
        feature_names=feature_names,
        timeout=timeout,
        feature_cost=feature_cost,
    )


def discard_unsolvable(scenario: Scenario, instance_ids: Sequence[str]) -> list[str]:
    """Return the subset of instances solved by at least one algorithm."""
    keep = []
    for inst in instance_ids:
        if bool(scenario.solved[scenario.instance_index(inst)].any()):
            keep.append(inst)
    return keep


@dataclass(frozen=True)
class FeatureScaling:
    """Fitted feature transform: median imputation then min-max scaling to [-1, 1].

    ``kept_columns`` are the original feature columns that were not constant on
    the fitting rows; ``lo``/``hi``/``fill`` align with them. Rows outside the
    fitting set may scale beyond [-1, 1], which is permitted.
    """

    n_source_columns: int
    kept_columns: tuple[int, ...]
    lo: np.ndarray
    hi: np.ndarray
    fill: np.ndarray

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if matrix.shape[1] != self.n_source_columns:
            raise ScenarioError(
                f"expected {self.n_source_columns} feature columns, got {matrix.shape[1]}"
            )
        sub = matrix[:, list(self.kept_columns)].copy()
        nan_mask = np.isnan(sub)
        if nan_mask.any():
            sub[nan_mask] = np.broadcast_to(self.fill, sub.shape)[nan_mask]
        return 2.0 * (sub - self.lo) / (self.hi - self.lo) - 1.0


def fit_feature_scaling(
    features: np.ndarray,
    fit_rows: Sequence[int],
    columns: Sequence[int] | None = None,
) -> FeatureScaling:
    """Fit the [-1, 1] scaling on ``fit_rows`` of a raw feature matrix.

    Min/max/median are computed on the fitting rows only; features constant
    there (or entirely missing) are dropped. Raises when nothing informative
    remains.
    """
    features = np.asarray(features, dtype=float)
    fit_rows = np.asarray(list(fit_rows), dtype=int)
    if fit_rows.size == 0:
        raise ScenarioError("empty fitting set")
    if columns is None:
        columns = range(features.shape[1])
    columns = [int(c) for c in columns]

    sub = features[np.ix_(fit_rows, columns)]
    with np.errstate(all="ignore"):
        lo = np.nanmin(sub, axis=0)
        hi = np.nanmax(sub, axis=0)
        fill = np.nanmedian(sub, axis=0)
    informative = np.isfinite(lo) & np.isfinite(hi) & (hi > lo)
    kept = tuple(c for c, good in zip(columns, informative) if good)
    if not kept:
        raise ScenarioError("no informative features")
    return FeatureScaling(
        n_source_columns=features.shape[1],
        kept_columns=kept,
        lo=lo[informative],
        hi=hi[informative],
        fill=fill[informative],
    )


def preprocess_features(
    scenario: Scenario,
    fit_instance_ids: Sequence[str],
    feature_indices: Sequence[int] | None = None,
) -> FeatureScaling:
    """Fit the feature transform on a subset of scenario instances."""
    return fit_feature_scaling(
        scenario.features, scenario.rows(fit_instance_ids), feature_indices
    )
