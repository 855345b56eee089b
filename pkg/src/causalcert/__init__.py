"""causalcert: certified upper bounds on counterfactual losses.

Trains causal meta-learners (T/S/X) over pluggable base regressors and
assembles auditable upper-bound certificates on their unobservable
complete losses from a chi-square change-of-measure envelope, with both
expectation-level and finite-sample forms. Synthetic generators with full
oracle fields let every certificate be validated against the true loss.
"""

from .bounds import (
    Addend,
    BoundCertificate,
    ComplexityEstimate,
    DeltaEstimate,
    VarianceCap,
    arm_balance_factor,
    asserted_cap,
    delta_empirical,
    delta_theoretic,
    envelope_parts,
    freeze_clip,
    observable_outcome_loss,
    outcome_bound_expectation,
    outcome_tail,
    pac_meta_certificate,
    pac_outcome_certificate,
    popoviciu_cap,
    rademacher_estimate,
    resum_certificate,
    singleton_complexity,
    tlearner_bound_expectation,
    tlearner_tail,
    weight_range_constant,
    xlearner_bound_expectation,
    xlearner_tail,
)
from .data import (
    ArmCounts,
    CausalDataset,
    ColumnSchema,
    DataError,
    ObservedSample,
    OracleFields,
    ParseError,
    SchemaError,
    arm_counts,
    export_csv,
    ingest_csv,
    observed_csv_schema,
    oracle_csv_schema,
    split,
)
from .dgp import (
    DgpSpec,
    assignment_propensity,
    baseline_surface,
    complete_loss,
    effect_surface,
    generate,
    parse_dgp,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    build_config,
    load_config,
    parse_config_text,
    run_experiment,
    run_lambda_sweep,
    run_model_selection,
    run_tightness_vs_n,
)
from .learners import (
    ConstantClassifier,
    HonestForest,
    KnnRegressor,
    LearnerError,
    LogisticClassifier,
    RegressionTree,
    RidgeRegressor,
    TreeClassifier,
    brier_score,
    fit_classifier,
    fit_weighted_regressor,
    make_classifier,
    make_regressor,
    weighted_quantile,
)
from .losses import (
    DecomposableLoss,
    LossConstants,
    LossDomainError,
    ScaledLoss,
    parse_loss,
    scaled_loss,
)
from .measure import (
    ChangeOfMeasureBound,
    DiscreteDist,
    change_of_measure,
    chi2_discrete,
    chi2_from_ratios,
    envelope_value,
    optimal_lambda,
)
from .metalearners import (
    SLearner,
    TLearner,
    XLearner,
    fit_metalearner,
    fit_s_learner,
    fit_t_learner,
    fit_x_learner,
    parse_metalearner,
    predict_cate,
)
from .weights import WeightFn, balance_term, build_constant, build_ipw, parse_weight

__version__ = "0.1.0"
