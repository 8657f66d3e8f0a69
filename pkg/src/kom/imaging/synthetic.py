"""Synthetic desk-scale fixtures: bilateral blob studies and texture classes."""

from __future__ import annotations

from typing import Optional

import numpy as np

from kom.common import seeded_rng
from kom.imaging.types import PreprocessConfig, RadiographStudy

# Images from these generators already live in [0, 1]; the identity window
# keeps them unchanged.
IDENTITY_WINDOW = PreprocessConfig(
    window_center=0.5,
    window_width=1.0,
    resize_to=64,
    crop_to=64,
    augmentations=frozenset({"horizontal-flip"}),
)


def _draw_ellipse(grid: np.ndarray, cx: float, cy: float, rx: float, ry: float) -> None:
    h, w = grid.shape
    ys, xs = np.mgrid[0:h, 0:w]
    grid[((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2 <= 1.0] = 1.0


def make_blob_study(
    rng: np.random.Generator, size: int = 64
) -> tuple[np.ndarray, np.ndarray, dict[str, np.ndarray], list[tuple[float, float]]]:
    """One bilateral study: two bright elliptical blobs on a noisy background.

    Returns (image, combined mask, per-side masks, true centers). The right
    knee sits in the left image half per the display convention.
    """
    image = np.clip(rng.normal(0.15, 0.05, size=(size, size)), 0.0, 1.0)
    mask = np.zeros((size, size), dtype=np.float64)
    side_masks = {
        "right": np.zeros((size, size), dtype=np.float64),
        "left": np.zeros((size, size), dtype=np.float64),
    }
    centers = []
    for side, base_x in (("right", size * 0.25), ("left", size * 0.75)):
        cx = base_x + rng.uniform(-size * 0.06, size * 0.06)
        cy = size * 0.5 + rng.uniform(-size * 0.12, size * 0.12)
        rx = rng.uniform(size * 0.08, size * 0.12)
        ry = rng.uniform(size * 0.08, size * 0.12)
        _draw_ellipse(side_masks[side], cx, cy, rx, ry)
        centers.append((cx, cy))
    mask = np.maximum(side_masks["right"], side_masks["left"])
    image = np.clip(image + mask * rng.uniform(0.6, 0.75), 0.0, 1.0)
    return image, mask, side_masks, centers


def make_blob_dataset(
    n: int, size: int = 64, seed: int = 0, per_side: bool = False
) -> list[tuple[np.ndarray, np.ndarray]] | list[tuple[np.ndarray, dict[str, np.ndarray]]]:
    """Seeded list of (image, mask) pairs; with ``per_side`` masks come split by knee."""
    rng = seeded_rng(seed)
    out = []
    for _ in range(n):
        image, mask, side_masks, _ = make_blob_study(rng, size)
        out.append((image, side_masks if per_side else mask))
    return out


def make_blob_studies(n: int, size: int = 64, seed: int = 0) -> list[tuple[RadiographStudy, list]]:
    """Studies wrapped as RadiographStudy together with their true centers."""
    rng = seeded_rng(seed)
    out = []
    for i in range(n):
        image, _, _, centers = make_blob_study(rng, size)
        out.append((RadiographStudy(study_id=f"synthetic-{i:04d}", image=image), centers))
    return out


TEXTURE_CLASSES = ("horizontal-stripes", "vertical-stripes", "checkerboard", "smooth-blob")


def make_texture_image(rng: np.random.Generator, label: int, size: int = 36) -> np.ndarray:
    """One texture sample for a 4-class classification fixture."""
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    freq = rng.uniform(0.45, 0.8)
    phase = rng.uniform(0, 2 * np.pi)
    if label == 0:
        base = np.sin(freq * ys + phase)
    elif label == 1:
        base = np.sin(freq * xs + phase)
    elif label == 2:
        base = np.sin(freq * ys + phase) * np.sin(freq * xs + phase)
    elif label == 3:
        cx, cy = rng.uniform(size * 0.3, size * 0.7, size=2)
        r2 = (xs - cx) ** 2 + (ys - cy) ** 2
        base = 2.0 * np.exp(-r2 / (2 * (size * 0.22) ** 2)) - 1.0
    else:
        raise ValueError(f"texture label out of range: {label}")
    img = 0.5 + 0.35 * base + rng.normal(0.0, 0.10, size=(size, size))
    return np.clip(img, 0.0, 1.0)


def make_texture_dataset(
    n_per_class: int, size: int = 36, seed: int = 0, n_classes: int = 4
) -> list[tuple[np.ndarray, int]]:
    rng = seeded_rng(seed)
    items = []
    for label in range(n_classes):
        for _ in range(n_per_class):
            items.append((make_texture_image(rng, label, size), label))
    order = rng.permutation(len(items))
    return [items[i] for i in order]


def texture_preprocess(size: int = 36, crop: Optional[int] = None) -> PreprocessConfig:
    return PreprocessConfig(
        window_center=0.5,
        window_width=1.0,
        resize_to=size,
        crop_to=crop or (size - 4),
        augmentations=frozenset({"horizontal-flip"}),
    )
