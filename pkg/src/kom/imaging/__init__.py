"""Radiograph analysis: knee localization, severity and feature classification."""

from kom.imaging.types import (
    FeatureFinding,
    ImagingFindings,
    KneeROI,
    KneeSide,
    LocalizationResult,
    PreprocessConfig,
    RadiographStudy,
    SeverityClass,
    TrainConfig,
    CLASSIFICATION_TASKS,
    FEATURE_TASKS,
)
from kom.imaging.preprocess import apply_bone_window, extract_rois
from kom.imaging.losses import dice_coefficient, hybrid_seg_loss
from kom.imaging.grading import derive_oa_presence, kl_to_severity, severity_to_kl_estimate
from kom.imaging.localizer import (
    localize_knee_centers,
    match_detections,
    train_localizer,
    train_side_localizers,
)
from kom.imaging.classifier import (
    CosineSchedule,
    EarlyStopping,
    StepDecaySchedule,
    classify_knee,
    train_classifier,
)
from kom.imaging.gradcam import grad_cam

__all__ = [
    "FeatureFinding",
    "ImagingFindings",
    "KneeROI",
    "KneeSide",
    "LocalizationResult",
    "PreprocessConfig",
    "RadiographStudy",
    "SeverityClass",
    "TrainConfig",
    "CLASSIFICATION_TASKS",
    "FEATURE_TASKS",
    "apply_bone_window",
    "extract_rois",
    "dice_coefficient",
    "hybrid_seg_loss",
    "derive_oa_presence",
    "kl_to_severity",
    "severity_to_kl_estimate",
    "localize_knee_centers",
    "match_detections",
    "train_localizer",
    "train_side_localizers",
    "CosineSchedule",
    "EarlyStopping",
    "StepDecaySchedule",
    "classify_knee",
    "train_classifier",
    "grad_cam",
]
