"""Configuration search: co-learn a feature subset and neighborhood size.

The search grows the feature set one feature at a time; each candidate feature
is scored at every k by scheduling the validation instances with the candidate
configuration and taking the negated mean penalized runtime. A feature is
accepted only when its best (feature, k) pair strictly improves the incumbent.
"""

import numpy as np

from portsched import (
    FoldScorer,
    generate_synthetic_scenario,
    get_score,
    learn_fk,
    learn_k,
)

scenario = generate_synthetic_scenario(
    n_instances=150,
    n_algorithms=4,
    n_features=4,
    timeout=1200.0,
    seed=31,
    n_noise_features=12,
    dominance=0.92,
)
ids = list(scenario.instance_ids)
train, validation = ids[:110], ids[110:]

scorer = FoldScorer(scenario, train, validation)
print(f"feature pool: {len(scorer.feature_pool)} informative features")
print(f"backup solver on this training set: {scorer.backup}")

features, k, score = learn_fk(
    scorer.score_many, scorer.feature_pool, max_k=15, max_f=4
)
names = [scenario.feature_names[c] for c in features]
print(f"\nco-learned configuration: features={names}, k={k}")
print(f"validation score (negated mean penalized runtime): {score:.1f}")
print(f"candidate evaluations spent: {scorer.n_scored}")

# The informative features are the planted sig_* columns; distractors are
# noise_*. The search should lead with signal.
assert names[0].startswith("sig_")

# k-only learning keeps every feature and just scans the neighborhood size.
_, k_only, score_k = learn_k(scorer.score_many, scorer.feature_pool, max_k=15)
print(f"\nk-only learning with all features: k={k_only}, score {score_k:.1f}")

# Single noise feature vs single informative feature, same k, reference path:
sig = scenario.feature_names.index("sig_00")
noise = scenario.feature_names.index("noise_00")
good = get_score(scenario, train, validation, k, (sig,))
bad = get_score(scenario, train, validation, k, (noise,))
print(f"\none informative feature scores {good:.1f}")
print(f"one noise feature scores       {bad:.1f}")
assert good > bad
