"""Intensity windowing, synchronized augmentation, and ROI extraction."""

from __future__ import annotations

import numpy as np

from kom.imaging.types import KneeROI, KneeSide, LocalizationResult, PreprocessConfig, RadiographStudy


def apply_bone_window(image: np.ndarray, cfg: PreprocessConfig) -> np.ndarray:
    """Linearly map raw intensities through the bone window into [0, 1].

    Values at ``center - width/2`` map to 0, at ``center + width/2`` to 1,
    clamped outside that range. Monotone non-decreasing in the input.
    """
    img = np.asarray(image, dtype=np.float64)
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite intensity values")
    lo = cfg.window_center - cfg.window_width / 2.0
    return np.clip((img - lo) / cfg.window_width, 0.0, 1.0)


def resize_image(image: np.ndarray, size: int) -> np.ndarray:
    """Bilinear resize to ``size`` x ``size`` (used for both images and soft masks)."""
    import torch
    import torch.nn.functional as F

    t = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float32))[None, None]
    out = F.interpolate(t, size=(size, size), mode="bilinear", align_corners=False)
    return out[0, 0].numpy().astype(np.float64)


def center_crop(image: np.ndarray, size: int) -> np.ndarray:
    h, w = image.shape
    if h < size or w < size:
        raise ValueError("image smaller than crop size")
    y0 = (h - size) // 2
    x0 = (w - size) // 2
    return image[y0 : y0 + size, x0 : x0 + size]


def random_crop(image: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    h, w = image.shape
    y0 = int(rng.integers(0, h - size + 1))
    x0 = int(rng.integers(0, w - size + 1))
    return image[y0 : y0 + size, x0 : x0 + size]


def augment_pair(
    image: np.ndarray,
    mask: np.ndarray | None,
    cfg: PreprocessConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Apply the configured augmentations, identically to image and mask.

    The mask only sees geometric transforms; brightness/contrast applies to the
    image alone. All random draws come from ``rng`` so paired calls stay in sync.
    """
    img = image
    msk = mask
    if "horizontal-flip" in cfg.augmentations and rng.random() < 0.5:
        img = img[:, ::-1]
        msk = msk[:, ::-1] if msk is not None else None
    if "small-rotation" in cfg.augmentations:
        from scipy import ndimage

        angle = float(rng.uniform(-cfg.rotation_degrees, cfg.rotation_degrees))
        img = ndimage.rotate(img, angle, reshape=False, order=1, mode="nearest")
        if msk is not None:
            msk = ndimage.rotate(msk.astype(np.float64), angle, reshape=False, order=0, mode="nearest")
    if "brightness-contrast" in cfg.augmentations:
        b = float(rng.uniform(-cfg.brightness_contrast, cfg.brightness_contrast))
        c = 1.0 + float(rng.uniform(-cfg.brightness_contrast, cfg.brightness_contrast))
        img = np.clip(img * c + b, 0.0, 1.0)
    img = np.ascontiguousarray(img)
    if msk is not None:
        msk = np.ascontiguousarray(msk)
    return img, msk


def side_for_center(x: float, width: int) -> KneeSide:
    """The display convention puts the left knee on the image's right half."""
    return KneeSide.LEFT if x >= width / 2.0 else KneeSide.RIGHT


def extract_rois(
    study: RadiographStudy, loc: LocalizationResult, cfg: PreprocessConfig
) -> list[KneeROI]:
    """Cut a ``crop_to`` square around each detected center, zero-padded at borders.

    With two centers, the one with the larger x becomes the left knee; a lone
    center is labeled by which image half it falls in.
    """
    if not loc.centers:
        raise ValueError("no centers to extract")
    h, w = study.image.shape
    for cx, cy in loc.centers:
        if not (0 <= cx < w and 0 <= cy < h):
            raise ValueError(f"center ({cx}, {cy}) outside image bounds")

    size = cfg.crop_to
    windowed = apply_bone_window(study.image, cfg)

    if len(loc.centers) == 2:
        order = sorted(range(2), key=lambda i: -loc.centers[i][0])
        sides = {order[0]: KneeSide.LEFT, order[1]: KneeSide.RIGHT}
    else:
        sides = {0: side_for_center(loc.centers[0][0], w)}

    rois = []
    for i, (cx, cy) in enumerate(loc.centers):
        x0 = int(round(cx)) - size // 2
        y0 = int(round(cy)) - size // 2
        crop = np.zeros((size, size), dtype=np.float64)
        sx0, sy0 = max(0, x0), max(0, y0)
        sx1, sy1 = min(w, x0 + size), min(h, y0 + size)
        if sx1 > sx0 and sy1 > sy0:
            crop[sy0 - y0 : sy1 - y0, sx0 - x0 : sx1 - x0] = windowed[sy0:sy1, sx0:sx1]
        rois.append(KneeROI(side=sides[i], crop=crop, origin=(x0, y0)))
    return rois
