"""Metrics, significance tests and evaluation experiments."""

from .crossval import AblationConfig, CrossValConfig, CrossValidationResult, FoldRecord, run_ablation, run_cross_validation
from .metrics import (
    ClassMetrics,
    ConfusionMatrix,
    MetricsReport,
    NoiseCorruption,
    confusion_matrix,
    evaluate_model,
    metrics_from_confusion,
)
from .stats import SignificanceResult, paired_t_test, wilcoxon_signed_rank

__all__ = [
    "AblationConfig",
    "ClassMetrics",
    "ConfusionMatrix",
    "CrossValConfig",
    "CrossValidationResult",
    "FoldRecord",
    "MetricsReport",
    "NoiseCorruption",
    "SignificanceResult",
    "confusion_matrix",
    "evaluate_model",
    "metrics_from_confusion",
    "paired_t_test",
    "run_ablation",
    "run_cross_validation",
    "wilcoxon_signed_rank",
]
