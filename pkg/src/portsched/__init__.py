"""Solver-portfolio scheduling via nearest neighbors.

Per query instance the selector finds the k most similar training instances,
picks the smallest (or greedily grown) solver subset covering them, splits the
time window proportionally to solved instances and orders the slots by average
neighborhood runtime. Feature subsets and k can be co-learned by forward
search under nested cross-validation.
"""

from .arff import ArffError, Attribute, RelationTable, dump_arff, parse_arff, parse_arff_file
from .analysis import (
    JaccardReport,
    UnsolvedBreakdown,
    classify_unsolved,
    jaccard_grand_mean,
    jaccard_neighborhoods,
    runtime_distribution_export,
    scenario_indicators,
    schedule_size_stats,
)
from .batchscore import FoldScorer
from .metrics import (
    AggregateScores,
    FailureKind,
    SimulationOutcome,
    UndefinedBaselineError,
    aggregate_outcomes,
    borda_scores,
    closed_gap,
    cmp_delta,
    outcome_par,
    par_value,
    sbs,
    simulate_schedule,
    speedup_ratio,
    vbs_par,
)
from .scenario import (
    FeatureScaling,
    Scenario,
    ScenarioError,
    discard_unsolvable,
    fit_feature_scaling,
    load_scenario,
    preprocess_features,
)
from .scheduling import (
    Engine,
    Neighborhood,
    Schedule,
    SelectorParams,
    TrainedState,
    allocate_and_order,
    backup_solver,
    knn,
    make_schedule,
    schedule_for_instance,
    select_subset_exhaustive,
    select_subset_greedy,
)
from .synthetic import generate_synthetic_scenario, informative_feature_names, write_scenario_dir
from .training import (
    ExperimentReport,
    FoldPlan,
    FoldResult,
    FoldTimeout,
    LearnedModel,
    LearningMode,
    SplitMode,
    TrainingConfig,
    build_fold_plan,
    default_k,
    derive_seed,
    fit_model,
    fit_trained_state,
    get_score,
    learn_configuration,
    learn_f,
    learn_fk,
    learn_k,
    prepare_training_set,
    rebuild_model,
    run_fold,
    run_nested_cv,
    split_folds,
)

__version__ = "0.1.0"
