"""Domain types for the radiograph analysis pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

SIDE_CONVENTION = "left-knee-on-image-right"

# Eleven per-knee classification tasks: the 4-class severity head plus ten
# regional feature heads. JSN and sclerosis are graded 0-3, osteophytes 0-1.
FEATURE_TASKS: dict[str, int] = {
    "jsn-medial": 4,
    "jsn-lateral": 4,
    "sclerosis-medial-femur": 4,
    "sclerosis-lateral-femur": 4,
    "sclerosis-medial-tibia": 4,
    "sclerosis-lateral-tibia": 4,
    "osteophyte-medial-femur": 2,
    "osteophyte-lateral-femur": 2,
    "osteophyte-medial-tibia": 2,
    "osteophyte-lateral-tibia": 2,
}

CLASSIFICATION_TASKS: dict[str, int] = {"severity": 4, **FEATURE_TASKS}


class SeverityClass(str, Enum):
    """Four-level ordinal severity scale (consolidated KL grades)."""

    NONE_DOUBT = "NoneDoubt"
    MILD = "Mild"
    MODERATE = "Moderate"
    SEVERE = "Severe"

    @property
    def rank(self) -> int:
        return list(SeverityClass).index(self)


class KneeSide(str, Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class RadiographStudy:
    """A bilateral knee radiograph with raw intensity values."""

    study_id: str
    image: np.ndarray
    side_convention: str = SIDE_CONVENTION
    acquisition_tag: Optional[str] = None

    def __post_init__(self):
        img = np.asarray(self.image)
        if img.ndim != 2:
            raise ValueError("study image must be a 2-D grid")
        if img.shape[0] < 64 or img.shape[1] < 64:
            raise ValueError("study image must be at least 64x64 pixels")
        if self.side_convention != SIDE_CONVENTION:
            raise ValueError(f"unsupported side convention: {self.side_convention}")
        object.__setattr__(self, "image", img)

    @property
    def pixel_dims(self) -> tuple[int, int]:
        return self.image.shape  # (height, width)


@dataclass(frozen=True)
class PreprocessConfig:
    """Windowing, resize/crop and augmentation settings shared by training and inference."""

    window_center: float = 300.0
    window_width: float = 1500.0
    resize_to: int = 256
    crop_to: int = 224
    augmentations: frozenset[str] = frozenset(
        {"horizontal-flip", "small-rotation", "brightness-contrast"}
    )
    rotation_degrees: float = 10.0
    brightness_contrast: float = 0.2

    def __post_init__(self):
        if self.window_width <= 0:
            raise ValueError("window_width must be positive")
        if self.crop_to > self.resize_to:
            raise ValueError("crop_to must not exceed resize_to")
        known = {"horizontal-flip", "small-rotation", "brightness-contrast"}
        unknown = set(self.augmentations) - known
        if unknown:
            raise ValueError(f"unknown augmentations: {sorted(unknown)}")
        object.__setattr__(self, "augmentations", frozenset(self.augmentations))

    def to_dict(self) -> dict:
        return {
            "window_center": self.window_center,
            "window_width": self.window_width,
            "resize_to": self.resize_to,
            "crop_to": self.crop_to,
            "augmentations": sorted(self.augmentations),
            "rotation_degrees": self.rotation_degrees,
            "brightness_contrast": self.brightness_contrast,
        }


@dataclass
class LocalizationResult:
    """Detected knee regions: centroids, tight boxes and the thresholded mask."""

    centers: list[tuple[float, float]]
    boxes: list[tuple[int, int, int, int]]  # (x0, y0, x1, y1), half-open
    mask: np.ndarray
    confidence: list[float] = field(default_factory=list)
    warning: Optional[str] = None

    def __post_init__(self):
        if len(self.centers) != len(self.boxes):
            raise ValueError("centers and boxes must pair up")
        h, w = self.mask.shape
        for (cx, cy), (x0, y0, x1, y1) in zip(self.centers, self.boxes):
            if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
                raise ValueError("box outside image bounds")
            if not (x0 <= cx <= x1 and y0 <= cy <= y1):
                raise ValueError("center must lie inside its box")
        for c in self.confidence:
            if not (0.0 <= c <= 1.0):
                raise ValueError("confidence must be within [0, 1]")


@dataclass
class KneeROI:
    """Fixed-size crop around one knee center."""

    side: KneeSide
    crop: np.ndarray
    origin: tuple[int, int]  # (x, y) offset of the crop in the source image

    def __post_init__(self):
        if self.crop.ndim != 2 or self.crop.shape[0] != self.crop.shape[1]:
            raise ValueError("ROI crop must be square")


def validate_kl(kl: int) -> int:
    if not isinstance(kl, (int, np.integer)) or isinstance(kl, bool):
        raise ValueError(f"KL grade must be an integer, got {kl!r}")
    if not 0 <= int(kl) <= 4:
        raise ValueError(f"KL grade out of range 0-4: {kl}")
    return int(kl)


@dataclass
class FeatureFinding:
    """One regional feature grade with its class-probability vector."""

    feature: str
    grade: int
    probabilities: list[float]

    def __post_init__(self):
        if self.feature not in FEATURE_TASKS:
            raise ValueError(f"unknown feature task: {self.feature}")
        card = FEATURE_TASKS[self.feature]
        if len(self.probabilities) != card:
            raise ValueError(f"{self.feature}: expected {card} probabilities")
        total = float(sum(self.probabilities))
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"{self.feature}: probabilities sum to {total}, not 1")
        if self.grade != int(np.argmax(self.probabilities)):
            raise ValueError(f"{self.feature}: grade must be argmax of probabilities")

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "grade": self.grade,
            "probabilities": [float(p) for p in self.probabilities],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureFinding":
        return cls(feature=d["feature"], grade=d["grade"], probabilities=d["probabilities"])


@dataclass
class KneeFindings:
    """All per-knee outputs of the classification suite."""

    side: KneeSide
    severity: SeverityClass
    severity_probabilities: list[float]
    kl_estimate: int
    features: list[FeatureFinding]
    oa_present: bool
    heatmaps: dict[str, np.ndarray] = field(default_factory=dict)
    unavailable_tasks: list[str] = field(default_factory=list)

    def __post_init__(self):
        validate_kl(self.kl_estimate)
        expected = set(FEATURE_TASKS) - set(self.unavailable_tasks)
        got = {f.feature for f in self.features}
        if got != expected:
            raise ValueError(f"expected features {sorted(expected)}, got {sorted(got)}")
        from kom.imaging.grading import kl_to_severity

        if self.oa_present != (self.severity != SeverityClass.NONE_DOUBT):
            raise ValueError("oa_present must equal severity != NoneDoubt")
        if kl_to_severity(self.kl_estimate) != self.severity:
            raise ValueError("kl_estimate inconsistent with severity")

    def to_dict(self) -> dict:
        return {
            "side": self.side.value,
            "severity": self.severity.value,
            "severity_probabilities": [float(p) for p in self.severity_probabilities],
            "kl_estimate": self.kl_estimate,
            "features": [f.to_dict() for f in self.features],
            "oa_present": self.oa_present,
            "heatmaps": {k: np.asarray(v).tolist() for k, v in self.heatmaps.items()},
            "unavailable_tasks": list(self.unavailable_tasks),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KneeFindings":
        return cls(
            side=KneeSide(d["side"]),
            severity=SeverityClass(d["severity"]),
            severity_probabilities=d["severity_probabilities"],
            kl_estimate=d["kl_estimate"],
            features=[FeatureFinding.from_dict(f) for f in d["features"]],
            oa_present=d["oa_present"],
            heatmaps={k: np.asarray(v) for k, v in d.get("heatmaps", {}).items()},
            unavailable_tasks=d.get("unavailable_tasks", []),
        )


@dataclass
class ImagingFindings:
    """Study-level findings: one entry per detected knee."""

    study_id: str
    knees: dict[str, KneeFindings] = field(default_factory=dict)  # keyed by side value

    def __post_init__(self):
        for key, kf in self.knees.items():
            if key != kf.side.value:
                raise ValueError("knee findings keyed by the wrong side")

    def to_dict(self) -> dict:
        return {
            "study_id": self.study_id,
            "knees": {k: v.to_dict() for k, v in self.knees.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ImagingFindings":
        return cls(
            study_id=d["study_id"],
            knees={k: KneeFindings.from_dict(v) for k, v in d["knees"].items()},
        )


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters recorded verbatim in every emitted model manifest."""

    epochs: int = 40
    initial_lr: float = 1e-5
    lr_schedule: str = "step-decay"  # or "cosine-annealing"
    lr_gamma: float = 0.1
    lr_step_epochs: int = 7
    early_stop_patience: int = 10
    early_stop_min_delta: float = 1e-6
    folds: int = 5
    split: tuple[float, float, float] = (0.8, 0.1, 0.1)
    class_balance: int = 500
    batch_size: int = 16
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.lr_schedule not in ("step-decay", "cosine-annealing"):
            raise ValueError(f"unknown lr schedule: {self.lr_schedule}")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    @classmethod
    def for_localizer(cls, seed: int = 0, **overrides) -> "TrainConfig":
        defaults = dict(epochs=40, initial_lr=2e-4, lr_schedule="cosine-annealing", seed=seed)
        defaults.update(overrides)
        return cls(**defaults)

    @classmethod
    def for_classifier(cls, seed: int = 0, **overrides) -> "TrainConfig":
        defaults = dict(epochs=40, initial_lr=1e-5, lr_schedule="step-decay", seed=seed)
        defaults.update(overrides)
        return cls(**defaults)

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "initial_lr": self.initial_lr,
            "lr_schedule": self.lr_schedule,
            "lr_gamma": self.lr_gamma,
            "lr_step_epochs": self.lr_step_epochs,
            "early_stop_patience": self.early_stop_patience,
            "early_stop_min_delta": self.early_stop_min_delta,
            "folds": self.folds,
            "split": list(self.split),
            "class_balance": self.class_balance,
            "batch_size": self.batch_size,
            "weight_decay": self.weight_decay,
            "seed": self.seed,
        }
