"""Command-line entry point.

Subcommands: train, predict, evaluate, cv, analyze, compare, synth. Training
knobs resolve in precedence order defaults < config file < environment
variables (PORTSCHED_<FIELD>) < flags; every run is deterministic given its
inputs and seed, and the seed is echoed in every report header.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import fields, replace
from pathlib import Path

from . import analysis, reports
from .metrics import aggregate_outcomes, borda_scores, simulate_schedule
from .scenario import ScenarioError, discard_unsolvable, load_scenario
from .scheduling import Engine, make_schedule
from .synthetic import generate_synthetic_scenario, write_scenario_dir
from .training import (
    LearnedModel,
    LearningMode,
    SplitMode,
    TrainingConfig,
    default_k,
    derive_seed,
    fit_model,
    learn_configuration,
    prepare_training_set,
    rebuild_model,
    run_nested_cv,
    split_folds,
)

ENV_PREFIX = "PORTSCHED_"

_CONFIG_PARSERS = {
    "split_mode": SplitMode,
    "instance_limit": int,
    "max_features": int,
    "max_k": int,
    "lambda_sched": int,
    "seed": int,
    "time_cap": float,
    "learning_mode": LearningMode,
    "engine_train": Engine,
    "engine_test": Engine,
    "penalty": float,
    "charge_feature_cost": lambda v: str(v).strip().lower() in ("1", "true", "yes"),
    "n_outer_folds": int,
    "n_inner_folds": int,
}


def _parse_config_file(path: Path) -> dict:
    values = {}
    for line_no, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ScenarioError(f"{path}:{line_no}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_PARSERS:
            raise ScenarioError(f"{path}:{line_no}: unknown config key {key!r}")
        values[key] = _CONFIG_PARSERS[key](value)
    return values


def resolve_config(args: argparse.Namespace) -> TrainingConfig:
    config = TrainingConfig()
    if getattr(args, "config", None):
        config = replace(config, **_parse_config_file(Path(args.config)))
    env_values = {}
    for key, parse in _CONFIG_PARSERS.items():
        raw = os.environ.get(ENV_PREFIX + key.upper())
        if raw is not None:
            env_values[key] = parse(raw)
    if env_values:
        config = replace(config, **env_values)
    flag_values = {}
    for f in fields(TrainingConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            flag_values[f.name] = value
    if flag_values:
        config = replace(config, **flag_values)
    return config


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--split-mode", dest="split_mode", type=SplitMode,
                        choices=list(SplitMode), default=None)
    parser.add_argument("--instance-limit", dest="instance_limit", type=int, default=None)
    parser.add_argument("--max-features", dest="max_features", type=int, default=None)
    parser.add_argument("--max-k", dest="max_k", type=int, default=None)
    parser.add_argument("--lambda-sched", dest="lambda_sched", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--time-cap", dest="time_cap", type=float, default=None)
    parser.add_argument("--mode", dest="learning_mode", type=LearningMode,
                        choices=list(LearningMode), default=None)
    parser.add_argument("--engine-train", dest="engine_train", type=Engine,
                        choices=list(Engine), default=None)
    parser.add_argument("--engine-test", dest="engine_test", type=Engine,
                        choices=list(Engine), default=None)
    parser.add_argument("--penalty", type=float, default=None)
    parser.add_argument("--no-feature-cost", dest="charge_feature_cost",
                        action="store_const", const=False, default=None)


def cmd_train(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    scenario = load_scenario(args.scenario)
    start = time.perf_counter()
    universe = discard_unsolvable(scenario, scenario.instance_ids)
    train_seed = derive_seed(config.seed, "train")
    prepared = prepare_training_set(scenario, universe, config.instance_limit, train_seed)

    if config.learning_mode is LearningMode.NONE:
        feature_indices = tuple(range(len(scenario.feature_names)))
        k = default_k(len(prepared))
    else:
        inner = split_folds(
            prepared, config.split_mode, config.n_inner_folds, train_seed,
            scenario, config.penalty,
        )
        deadline = time.perf_counter() + config.time_cap
        feature_indices, k, _, _ = learn_configuration(
            scenario, prepared, inner, config, deadline
        )
        if config.learning_mode is LearningMode.F_ONLY:
            k = default_k(len(prepared))
        elif config.learning_mode is LearningMode.K_ONLY:
            feature_indices = tuple(range(len(scenario.feature_names)))

    model = fit_model(
        scenario, prepared, feature_indices, k, config,
        seed_lineage=f"{config.seed}:train",
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    reports.write_json(model.to_json_dict(), out)
    elapsed = time.perf_counter() - start
    print(f"scenario: {scenario.name}")
    print(f"selected features ({len(model.feature_names)}): {', '.join(model.feature_names)}")
    print(f"k: {model.k}")
    print(f"backup: {model.backup}")
    print(f"model written to {out} in {elapsed:.2f}s")
    return 0


def _load_model(model_path: str, scenario) -> LearnedModel:
    doc = json.loads(Path(model_path).read_text())
    return rebuild_model(scenario, doc)


def cmd_predict(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    model = _load_model(args.model, scenario)
    if args.all:
        instance_ids = list(scenario.instance_ids)
    else:
        instance_ids = args.instances
        if not instance_ids:
            raise ScenarioError("no instances requested; pass ids or --all")
    for inst in instance_ids:
        row = scenario.instance_index(inst)
        schedule = make_schedule(scenario.features[row], model.state)
        print(json.dumps(
            {"instance_id": inst,
             "schedule": schedule.as_int_slots(scenario.timeout)},
            sort_keys=True,
        ))
    return 0


def _read_instance_file(path: str) -> list[str]:
    ids = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            ids.append(line)
    return ids


def cmd_evaluate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    model = _load_model(args.model, scenario)
    if args.instances_file:
        instance_ids = _read_instance_file(args.instances_file)
    else:
        instance_ids = list(scenario.instance_ids)
    outcomes = []
    for inst in instance_ids:
        row = scenario.instance_index(inst)
        schedule = make_schedule(scenario.features[row], model.state)
        outcomes.append(simulate_schedule(
            schedule, scenario, inst,
            charge_feature_cost=model.charge_feature_cost,
        ))
    paths = reports.write_outcome_reports(
        outcomes, scenario, args.out_prefix, model.seed, model.penalty
    )
    agg = aggregate_outcomes(outcomes, scenario, model.penalty)
    gap = "undefined" if agg.closed_gap is None else f"{agg.closed_gap:.4f}"
    print(f"instances: {len(outcomes)}  solved: {100 * agg.solved_fraction:.1f}%  "
          f"par10: {agg.par:.1f}  closed gap: {gap}")
    print("wrote " + ", ".join(str(p) for p in paths.values()))
    return 0


def cmd_cv(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    scenario = load_scenario(args.scenario)
    report = run_nested_cv(
        scenario, config, n_repetitions=args.repetitions, jobs=args.jobs
    )
    paths = reports.write_cv_reports(report, args.out)
    gap = ("undefined" if report.mean_closed_gap is None
           else f"{report.mean_closed_gap:.4f}")
    print(f"scenario: {scenario.name}  folds: {len(report.folds)}  "
          f"mean closed gap: {gap}")
    print(f"wrote {paths['report']}, {paths['summary']}")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    model = _load_model(args.model, scenario)
    if args.instances_file:
        instance_ids = _read_instance_file(args.instances_file)
    else:
        instance_ids = list(scenario.instance_ids)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    schedules, outcomes = [], []
    for inst in instance_ids:
        row = scenario.instance_index(inst)
        schedule = make_schedule(scenario.features[row], model.state)
        schedules.append(schedule)
        outcomes.append(simulate_schedule(
            schedule, scenario, inst,
            charge_feature_cost=model.charge_feature_cost,
        ))

    breakdown = analysis.classify_unsolved(outcomes)
    mean_size, std_size = analysis.schedule_size_stats(schedules)
    k = min(model.k, len(model.state.instance_ids) - 1) or 1
    jaccard = analysis.jaccard_neighborhoods(
        scenario, model.state, model.state.instance_ids, k
    )
    dist_csv = out / "runtime_distribution.csv"
    analysis.runtime_distribution_export(scenario, outcomes, dist_csv, model.penalty)
    indicators = analysis.scenario_indicators(scenario, instance_ids, model.penalty)

    jaccard_csv = out / "jaccard.csv"
    with jaccard_csv.open("w", newline="") as fh:
        fh.write(f"# seed={model.seed}\n")
        writer = csv.writer(fh)
        writer.writerow(["instance_id", "jaccard"])
        for inst, value in jaccard.per_instance.items():
            writer.writerow([inst, repr(value)])

    summary = {
        "seed": model.seed,
        "scenario": scenario.name,
        "instances_analyzed": len(instance_ids),
        "unsolved": {
            "n_solved": breakdown.n_solved,
            "n_unsolved": breakdown.n_unsolved,
            "counts": breakdown.counts,
            "fractions": breakdown.fractions,
        },
        "schedule_size": {"mean": mean_size, "stddev": std_size},
        "jaccard_mean": jaccard.mean,
        "indicators": indicators,
    }
    reports.write_json(summary, out / "summary.json")
    print(f"solved {breakdown.n_solved}/{len(outcomes)}; "
          f"schedule size {mean_size:.2f} +/- {std_size:.2f}; "
          f"mean jaccard {jaccard.mean:.4f}")
    print(f"wrote {out / 'summary.json'}, {dist_csv}, {jaccard_csv}")
    return 0


def _read_times_csv(path: Path) -> dict[str, float]:
    times = {}
    with path.open() as fh:
        for row in csv.reader(line for line in fh if not line.startswith("#")):
            if not row:
                continue
            if len(row) != 2:
                raise ScenarioError(f"{path}: expected two columns, got {row!r}")
            times[row[0]] = float(row[1])
    return times


def cmd_compare(args: argparse.Namespace) -> int:
    by_selector: dict[str, dict[str, float]] = {}
    for path_str in args.times:
        path = Path(path_str)
        by_selector[path.stem] = _read_times_csv(path)
    names = list(by_selector)
    reference = sorted(by_selector[names[0]])
    for name in names[1:]:
        if sorted(by_selector[name]) != reference:
            raise ScenarioError(
                f"instance sets differ between {names[0]!r} and {name!r}"
            )
    aligned = {
        name: [by_selector[name][inst] for inst in reference] for name in names
    }
    deltas = [float(d) for d in args.deltas.split(",")]
    scoreboard = {
        delta: borda_scores(aligned, args.timeout, delta) for delta in deltas
    }
    path = reports.write_borda_csv(scoreboard, args.out, seed=args.seed)
    print(f"wrote {path}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    scenario = generate_synthetic_scenario(
        args.instances,
        args.algorithms,
        args.features,
        args.timeout,
        args.seed,
        n_noise_features=args.noise_features,
        dominance=args.dominance,
        secondary_solve_prob=args.secondary_solve_prob,
        unsolvable_fraction=args.unsolvable_fraction,
        with_feature_cost=args.feature_cost,
    )
    out = write_scenario_dir(scenario, args.out)
    print(f"wrote scenario {scenario.name} ({scenario.n_instances} instances, "
          f"{scenario.n_algorithms} algorithms, {len(scenario.feature_names)} "
          f"features) to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="portsched",
        description="k-NN solver-portfolio scheduling toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="learn a selector from a scenario")
    p_train.add_argument("--scenario", required=True)
    p_train.add_argument("--out", required=True, help="model JSON path")
    _add_config_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_predict = sub.add_parser("predict", help="emit schedules for instances")
    p_predict.add_argument("--model", required=True)
    p_predict.add_argument("--scenario", required=True)
    p_predict.add_argument("--all", action="store_true")
    p_predict.add_argument("instances", nargs="*")
    p_predict.set_defaults(func=cmd_predict)

    p_eval = sub.add_parser("evaluate", help="score a model on a held-out split")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--scenario", required=True)
    p_eval.add_argument("--instances-file")
    p_eval.add_argument("--out-prefix", required=True)
    p_eval.set_defaults(func=cmd_evaluate)

    p_cv = sub.add_parser("cv", help="repeated nested cross-validation")
    p_cv.add_argument("--scenario", required=True)
    p_cv.add_argument("--out", required=True, help="report directory")
    p_cv.add_argument("--repetitions", type=int, default=5)
    p_cv.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    _add_config_flags(p_cv)
    p_cv.set_defaults(func=cmd_cv)

    p_an = sub.add_parser("analyze", help="diagnostics for a trained model")
    p_an.add_argument("--model", required=True)
    p_an.add_argument("--scenario", required=True)
    p_an.add_argument("--instances-file")
    p_an.add_argument("--out", required=True)
    p_an.set_defaults(func=cmd_analyze)

    p_cmp = sub.add_parser("compare", help="pairwise scoreboard over time files")
    p_cmp.add_argument("--times", nargs="+", required=True,
                       help="two-column CSV files: instance_id,seconds")
    p_cmp.add_argument("--timeout", type=float, required=True)
    p_cmp.add_argument("--deltas", default="0",
                       help="comma-separated tie thresholds")
    p_cmp.add_argument("--seed", type=int, default=0,
                       help="provenance echo for the report header")
    p_cmp.add_argument("--out", required=True)
    p_cmp.set_defaults(func=cmd_compare)

    p_synth = sub.add_parser("synth", help="generate a synthetic scenario dir")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--instances", type=int, default=200)
    p_synth.add_argument("--algorithms", type=int, default=4)
    p_synth.add_argument("--features", type=int, default=5)
    p_synth.add_argument("--noise-features", type=int, default=0)
    p_synth.add_argument("--timeout", type=float, default=1200.0)
    p_synth.add_argument("--seed", type=int, default=100)
    p_synth.add_argument("--dominance", type=float, default=0.9)
    p_synth.add_argument("--secondary-solve-prob", type=float, default=0.05)
    p_synth.add_argument("--unsolvable-fraction", type=float, default=0.0)
    p_synth.add_argument("--feature-cost", action="store_true")
    p_synth.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
