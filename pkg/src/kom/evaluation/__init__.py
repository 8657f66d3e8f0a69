"""Scoring harness: text similarity, statistics, rubric handling, arm comparison."""

from kom.evaluation.text import bleu, corpus_bleu, corpus_rouge_l, rouge_l, semantic_similarity
from kom.evaluation.scores import (
    RUBRIC_DIMENSIONS,
    RubricScore,
    aggregate_rubric,
    approval_rate,
    zscore_normalize_rows,
)
from kom.evaluation.stats import compare_groups, mann_whitney_u, shapiro_wilk
from kom.evaluation.threearm import ArmConfig, run_three_arm

__all__ = [
    "bleu",
    "corpus_bleu",
    "corpus_rouge_l",
    "rouge_l",
    "semantic_similarity",
    "RUBRIC_DIMENSIONS",
    "RubricScore",
    "aggregate_rubric",
    "approval_rate",
    "zscore_normalize_rows",
    "compare_groups",
    "mann_whitney_u",
    "shapiro_wilk",
    "ArmConfig",
    "run_three_arm",
]
