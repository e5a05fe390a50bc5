"""Diagnostics: why does a selector fail, and do similar instances really
have similar solver performance?

Three probes: the unsolved-instance taxonomy (wrong solvers scheduled vs not
enough time allocated), schedule-size statistics, and the overlap between an
instance's nearest neighbors in feature space and in performance space. Plus
the tie-threshold sweep of the pairwise comparison score.
"""

import tempfile
from pathlib import Path

from portsched import (
    TrainingConfig,
    borda_scores,
    classify_unsolved,
    fit_model,
    generate_synthetic_scenario,
    jaccard_neighborhoods,
    prepare_training_set,
    runtime_distribution_export,
    scenario_indicators,
    schedule_for_instance,
    schedule_size_stats,
    simulate_schedule,
)

scenario = generate_synthetic_scenario(
    n_instances=160,
    n_algorithms=4,
    n_features=4,
    timeout=1200.0,
    seed=55,
    n_noise_features=10,
    dominance=0.9,
    secondary_solve_prob=0.1,
)
config = TrainingConfig(seed=55)
ids = list(scenario.instance_ids)
train, test = ids[:120], ids[120:]
prepared = prepare_training_set(scenario, train, config.instance_limit, config.seed)
sig = [i for i, n in enumerate(scenario.feature_names) if n.startswith("sig_")]
model = fit_model(scenario, prepared, tuple(sig), k=7, config=config)

schedules = [schedule_for_instance(scenario, model.state, i) for i in test]
outcomes = [
    simulate_schedule(s, scenario, i) for s, i in zip(schedules, test)
]

breakdown = classify_unsolved(outcomes)
print(f"solved {breakdown.n_solved}/{len(outcomes)} test instances")
for kind, count in breakdown.counts.items():
    frac = breakdown.fractions[kind]
    print(f"  unsolved, {kind.replace('_', ' ')}: {count} ({frac:.0%} of failures)")

mean_size, std_size = schedule_size_stats(schedules)
print(f"\nschedule size: {mean_size:.2f} +/- {std_size:.2f} solvers")

# Neighborhood agreement: low overlap means "similar instances get similar
# solver performance" is a shaky assumption on this data.
report = jaccard_neighborhoods(scenario, model.state, model.state.instance_ids)
print(f"mean feature/performance neighborhood overlap: {report.mean:.4f}")

indicators = scenario_indicators(scenario, test)
print(f"single-best-algorithm unsolved instances: "
      f"{indicators['sbs_unsolved_instances']:.0f}")
print(f"oracle speedup over the single best: "
      f"{indicators['vbs_speedup_over_sbs']:.2f}x")

with tempfile.TemporaryDirectory() as tmp:
    path = runtime_distribution_export(scenario, outcomes, Path(tmp) / "dist.csv")
    lines = path.read_text().splitlines()
    print(f"\nruntime-distribution export: {len(lines) - 1} rows, columns "
          f"{lines[0]}")

# Pairwise comparison sweep: as the tie threshold grows, small time
# differences stop mattering and the ranking can flip.
times = {
    "selector": [
        o.effective_time if o.solved else scenario.timeout for o in outcomes
    ],
    "oracle": [
        float(scenario.runtime[scenario.instance_index(i)].min())
        if scenario.solved[scenario.instance_index(i)].any()
        else scenario.timeout
        for i in test
    ],
}
print("\ntie threshold -> normalized pairwise scores")
for delta in (0.0, 10.0, 100.0, scenario.timeout):
    scores = borda_scores(times, scenario.timeout, delta)
    row = "  ".join(f"{name}={value:.3f}" for name, value in scores.items())
    print(f"  delta={delta:>6.0f}:  {row}")
