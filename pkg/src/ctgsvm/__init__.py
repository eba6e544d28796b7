"""Filter feature-selection ensembles with bagged polynomial-kernel SVMs."""

from .data import (
    AttributeSpec,
    DataError,
    Dataset,
    DiscretizationMap,
    SplitSpec,
    Standardizer,
    apply_standardizer,
    discretize_mdl,
    export_csv,
    fit_discretization,
    fit_standardizer,
    load_dataset,
    select_features,
    stratified_split,
)
from .filters import (
    CLASS,
    FeatureScores,
    SubsetEvaluation,
    cfs_merit,
    entropy,
    inconsistency_rate,
    info_gain,
    rank_cutoff,
    relieff,
    symmetric_uncertainty,
)
from .search import (
    BestFirstConfig,
    GeneticConfig,
    SubsetEvaluator,
    best_first,
    exhaustive_search,
    genetic_search,
)
from .fs_ensemble import (
    EnsembleSelection,
    FeatureSelection,
    SelectorConfig,
    SelectorId,
    aggregate,
    run_selector,
)
from .svm import (
    BinarySvm,
    KernelSpec,
    SvmConfig,
    SvmModel,
    decision_value,
    kernel_eval,
    load_model,
    predict,
    save_model,
    smo_train,
    train_multiclass,
)
from .bagging import (
    EnsembleConfig,
    EnsembleModel,
    bagging_train,
    bootstrap_sample,
    load_ensemble,
    majority_vote,
    member_agreement,
    save_ensemble,
)
from .report import (
    ConfusionMatrix,
    EvaluationReport,
    accuracy,
    evaluate,
    render,
    timed,
)

__version__ = "0.1.0"
