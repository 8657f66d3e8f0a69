"""Segmentation loss and overlap metrics."""

from __future__ import annotations

import numpy as np

BCE_CLIP_EPS = 1e-7
DICE_SMOOTH_EPS = 1e-6


def dice_coefficient(a: np.ndarray, b: np.ndarray) -> float:
    """Dice overlap of two binary masks: 2|a∩b| / (|a|+|b|).

    Two empty masks count as a perfect match.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    a = a.astype(bool)
    b = b.astype(bool)
    denom = int(a.sum()) + int(b.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int((a & b).sum()) / denom


def soft_dice(pred: np.ndarray, target: np.ndarray, eps: float = DICE_SMOOTH_EPS) -> float:
    """Differentiable-form Dice on a probability grid, with smoothing."""
    num = 2.0 * float((pred * target).sum()) + eps
    den = float(pred.sum()) + float(target.sum()) + eps
    return num / den


def binary_cross_entropy(pred: np.ndarray, target: np.ndarray, eps: float = BCE_CLIP_EPS) -> float:
    p = np.clip(np.asarray(pred, dtype=np.float64), eps, 1.0 - eps)
    t = np.asarray(target, dtype=np.float64)
    return float(-np.mean(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)))


def hybrid_seg_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Equally weighted sum of clipped BCE and (1 - soft Dice)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return 0.5 * binary_cross_entropy(pred, target) + 0.5 * (1.0 - soft_dice(pred, target))


def hybrid_seg_loss_torch(pred, target):
    """Torch version of :func:`hybrid_seg_loss` for use inside training loops."""
    import torch

    p = torch.clamp(pred, BCE_CLIP_EPS, 1.0 - BCE_CLIP_EPS)
    bce = -(target * torch.log(p) + (1.0 - target) * torch.log(1.0 - p)).mean()
    num = 2.0 * (pred * target).sum() + DICE_SMOOTH_EPS
    den = pred.sum() + target.sum() + DICE_SMOOTH_EPS
    return 0.5 * bce + 0.5 * (1.0 - num / den)
