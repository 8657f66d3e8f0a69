"""Tabular outcome prediction: preprocessing, model suites, attribution, reports."""

from kom.risk.features import feature_manifest, FEATURE_COLUMNS, TARGET_COLUMNS
from kom.risk.metrics import classification_metrics, regression_metrics
from kom.risk.preprocess import PreprocessSpec, balance_classes, preprocess, stratified_split
from kom.risk.shapley import ShapAttribution, linear_shap, permutation_shap, shap_attribution, tree_shap
from kom.risk.suite import (
    ModelCard,
    TaskSpec,
    fit_final_model,
    monte_carlo_cv,
    run_classification_suite,
    run_regression_suite,
    select_best_model,
)
from kom.risk.report import generate_risk_report, profile_to_feature_row

__all__ = [
    "feature_manifest",
    "FEATURE_COLUMNS",
    "TARGET_COLUMNS",
    "classification_metrics",
    "regression_metrics",
    "PreprocessSpec",
    "balance_classes",
    "preprocess",
    "stratified_split",
    "ShapAttribution",
    "linear_shap",
    "permutation_shap",
    "shap_attribution",
    "tree_shap",
    "ModelCard",
    "TaskSpec",
    "fit_final_model",
    "monte_carlo_cv",
    "run_classification_suite",
    "run_regression_suite",
    "select_best_model",
    "generate_risk_report",
    "profile_to_feature_row",
]
