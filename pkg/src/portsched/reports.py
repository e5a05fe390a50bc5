"""Deterministic CSV/JSON report writers.

Floats are rendered with repr (shortest round-trip form) and JSON keys are
sorted, so identical inputs always produce byte-identical files. Wall-clock
timings are deliberately kept out of these files; they go to a separate
sidecar that carries no reproducibility promise.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Mapping, Sequence

from .metrics import (
    DEFAULT_PENALTY,
    SimulationOutcome,
    aggregate_outcomes,
    outcome_par,
)
from .scenario import Scenario
from .training import ExperimentReport, TrainingConfig


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_document(config: TrainingConfig) -> dict:
    return {
        "split_mode": config.split_mode.value,
        "instance_limit": config.instance_limit,
        "max_features": config.max_features,
        "max_k": config.max_k,
        "lambda_sched": config.lambda_sched,
        "seed": config.seed,
        "time_cap": config.time_cap,
        "learning_mode": config.learning_mode.value,
        "engine_train": config.engine_train.value,
        "engine_test": config.engine_test.value,
        "penalty": config.penalty,
        "charge_feature_cost": config.charge_feature_cost,
        "n_outer_folds": config.n_outer_folds,
        "n_inner_folds": config.n_inner_folds,
    }


def write_json(document: dict, path: Path) -> None:
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")


def write_cv_reports(report: ExperimentReport, out_dir: str | Path) -> dict[str, Path]:
    """Write report.csv, summary.json, per-fold model configs and the
    (non-deterministic) timings sidecar. Returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = report.config.seed

    report_csv = out / "report.csv"
    with report_csv.open("w", newline="") as fh:
        fh.write(f"# seed={seed}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["repetition", "fold", "status", "closed_gap", "par10",
             "solved_pct", "n_test", "k", "n_features", "selected_features",
             "backup"]
        )
        for r in report.folds:
            writer.writerow([
                r.repetition, r.fold, r.status, _fmt(r.closed_gap),
                _fmt(r.par10), _fmt(100.0 * r.solved_fraction), r.n_test,
                r.k, len(r.selected_features), "|".join(r.selected_features),
                r.backup,
            ])

    summary = {
        "seed": seed,
        "scenario": report.scenario_name,
        "config": config_document(report.config),
        "n_repetitions": report.n_repetitions,
        "mean_closed_gap": report.mean_closed_gap,
        "per_repetition_closed_gap": list(report.per_repetition_closed_gap),
        "undefined_gap_folds": report.undefined_gap_folds,
        "folds": [
            {
                "repetition": r.repetition,
                "fold": r.fold,
                "status": r.status,
                "closed_gap": r.closed_gap,
                "par10": r.par10,
                "solved_fraction": r.solved_fraction,
                "n_test": r.n_test,
                "k": r.k,
                "selected_features": list(r.selected_features),
                "backup": r.backup,
                "validation_score": r.validation_score,
            }
            for r in report.folds
        ],
    }
    summary_json = out / "summary.json"
    write_json(summary, summary_json)

    models_dir = out / "models"
    models_dir.mkdir(exist_ok=True)
    model_paths = {}
    for r in report.folds:
        doc = {
            "format": "portsched-fold-config/1",
            "scenario": report.scenario_name,
            "seed": seed,
            "seed_lineage": f"{seed}:{r.repetition}:{r.fold}",
            "repetition": r.repetition,
            "fold": r.fold,
            "status": r.status,
            "learning_mode": report.config.learning_mode.value,
            "engine": report.config.engine_test.value,
            "selected_features": list(r.selected_features),
            "k": r.k,
            "backup": r.backup,
        }
        path = models_dir / f"rep{r.repetition}_fold{r.fold}.json"
        write_json(doc, path)
        model_paths[f"rep{r.repetition}_fold{r.fold}"] = path

    timings_csv = out / "timings.csv"
    with timings_csv.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["repetition", "fold", "wall_time_s"])
        for r in report.folds:
            writer.writerow([r.repetition, r.fold, _fmt(r.wall_time_s)])

    return {
        "report": report_csv,
        "summary": summary_json,
        "timings": timings_csv,
        **model_paths,
    }


def write_outcome_reports(
    outcomes: Sequence[SimulationOutcome],
    scenario: Scenario,
    out_prefix: str | Path,
    seed: int,
    penalty: float = DEFAULT_PENALTY,
) -> dict[str, Path]:
    """Per-instance outcome rows plus one aggregate row, as CSV with a JSON
    mirror, and a two-column times file ready for pairwise comparison."""
    prefix = Path(out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    agg = aggregate_outcomes(outcomes, scenario, penalty)

    csv_path = prefix.with_suffix(".csv")
    with csv_path.open("w", newline="") as fh:
        fh.write(f"# seed={seed}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["instance_id", "solved", "effective_time", "solving_algorithm",
             "failure_kind", "par"]
        )
        for o in outcomes:
            writer.writerow([
                o.instance_id, int(o.solved), _fmt(o.effective_time),
                o.solving_algorithm or "",
                o.failure_kind.value if o.failure_kind else "",
                _fmt(outcome_par(o, scenario.timeout, penalty)),
            ])
        writer.writerow([
            "AGGREGATE", _fmt(agg.solved_fraction), _fmt(agg.par), "", "",
            _fmt(agg.closed_gap),
        ])

    json_path = prefix.with_suffix(".json")
    write_json(
        {
            "seed": seed,
            "scenario": scenario.name,
            "aggregate": {
                "par": agg.par,
                "solved_fraction": agg.solved_fraction,
                "m_vbs": agg.m_vbs,
                "m_sbs": agg.m_sbs,
                "closed_gap": agg.closed_gap,
                "speedup_ratio": agg.speedup_ratio,
            },
            "outcomes": [
                {
                    "instance_id": o.instance_id,
                    "solved": o.solved,
                    "effective_time": o.effective_time,
                    "solving_algorithm": o.solving_algorithm,
                    "failure_kind": o.failure_kind.value if o.failure_kind else None,
                }
                for o in outcomes
            ],
        },
        json_path,
    )

    times_path = prefix.parent / (prefix.name + "_times.csv")
    with times_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        for o in outcomes:
            t = o.effective_time if o.solved else scenario.timeout
            writer.writerow([o.instance_id, _fmt(float(t))])

    return {"csv": csv_path, "json": json_path, "times": times_path}


def write_borda_csv(
    scores_by_delta: Mapping[float, Mapping[str, float]],
    path: str | Path,
    seed: int | None = None,
) -> Path:
    """Scoreboard with one row per (delta, selector)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        if seed is not None:
            fh.write(f"# seed={seed}\n")
        writer = csv.writer(fh)
        writer.writerow(["delta", "selector", "normalized_borda"])
        for delta in scores_by_delta:
            for name, score in scores_by_delta[delta].items():
                writer.writerow([_fmt(float(delta)), name, _fmt(score)])
    return path
