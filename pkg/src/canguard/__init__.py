"""CAN bus intrusion-detection toolkit.

Ingest decimal CAN frame logs, deduplicate the cyclic broadcast traffic,
reduce the feature space (principal components, Fisher axes, or F-value
selection), train a zoo of from-scratch classifiers, combine them with
consensus voting, and evaluate with imbalance-aware metrics.
"""

from .analysis import (
    byte_means_by_category,
    class_distribution,
    correlation_matrix,
    payload_sum_histogram,
    top_ids,
)
from .dataset import (
    CanFrameRecord,
    DuplicateReport,
    RecordTable,
    SplitResult,
    deduplicate,
    duplicate_report,
    impute_missing,
    merge_tables,
    normalize_labels,
    parse_decimal_csv,
    read_dataset_dir,
    stratified_split,
    write_decimal_csv,
)
from .ensemble import (
    EnsembleConfig,
    EnsembleResult,
    ensemble_predict,
    hard_vote,
    hybrid_consensus,
    train_ensemble,
    weighted_soft_vote,
)
from .features import (
    FeatureMatrix,
    FittedTransform,
    anova_f_scores,
    deserialize_transform,
    fit_lda,
    fit_pca,
    fit_scaler,
    inverse_transform,
    select_k_best,
    serialize_transform,
    transform,
)
from .metrics import EvalReport, classification_report, confusion_matrix, f1_macro
from .models import (
    ClassifierSpec,
    FittedModel,
    deserialize_model,
    fit,
    gradient_check,
    predict,
    predict_proba,
    serialize_model,
)
from .pipeline import RunConfig, run_benchmark, run_ensemble, run_stats, run_synth
from .synth import SynthConfig, default_synth_config, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "CanFrameRecord", "ClassifierSpec", "DuplicateReport", "EnsembleConfig",
    "EnsembleResult", "EvalReport", "FeatureMatrix", "FittedModel",
    "FittedTransform", "RecordTable", "RunConfig", "SplitResult", "SynthConfig",
    "anova_f_scores", "byte_means_by_category", "class_distribution",
    "classification_report", "confusion_matrix", "correlation_matrix",
    "deduplicate", "default_synth_config", "deserialize_model",
    "deserialize_transform", "duplicate_report", "ensemble_predict", "f1_macro",
    "fit", "fit_lda", "fit_pca", "fit_scaler", "generate_synthetic",
    "gradient_check", "hard_vote", "hybrid_consensus", "impute_missing",
    "inverse_transform", "merge_tables", "normalize_labels", "parse_decimal_csv",
    "payload_sum_histogram", "predict", "predict_proba", "read_dataset_dir",
    "run_benchmark", "run_ensemble", "run_stats", "run_synth", "select_k_best",
    "serialize_model", "serialize_transform", "stratified_split", "top_ids",
    "train_ensemble", "transform", "weighted_soft_vote", "write_decimal_csv",
]
