"""Regression and classification metric computations."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np


def regression_metrics(y: Sequence[float], y_pred: Sequence[float]) -> dict:
    """R², MSE, MAE and Pearson r.

    A constant truth vector leaves R² and r undefined; they come back as None
    with an explanatory flag rather than NaN.
    """
    y = np.asarray(y, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y.shape != y_pred.shape or y.ndim != 1:
        raise ValueError("y and y_pred must be 1-D and the same length")
    if len(y) == 0:
        raise ValueError("empty inputs")

    residuals = y - y_pred
    mse = float(np.mean(residuals**2))
    mae = float(np.mean(np.abs(residuals)))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    flags: list[str] = []
    if ss_tot == 0.0:
        r2 = None
        flags.append("constant-truth: R2 undefined")
    else:
        r2 = float(1.0 - np.sum(residuals**2) / ss_tot)

    sd_y = float(np.std(y))
    sd_p = float(np.std(y_pred))
    if sd_y == 0.0 or sd_p == 0.0:
        pearson_r = None
        flags.append("constant-sample: Pearson r undefined")
    else:
        pearson_r = float(np.mean((y - y.mean()) * (y_pred - y_pred.mean())) / (sd_y * sd_p))

    return {"r2": r2, "mse": mse, "mae": mae, "pearson_r": pearson_r, "flags": flags}


def roc_auc_binary(y_true: np.ndarray, scores: np.ndarray) -> float:
    """Rank-based AUC (ties get midranks), exact for any score vector."""
    pos = y_true.astype(bool)
    n_pos = int(pos.sum())
    n_neg = len(y_true) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum_pos = float(ranks[pos].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def classification_metrics(
    y: Sequence[int],
    y_pred: Sequence[int],
    probs: Optional[np.ndarray] = None,
    n_classes: Optional[int] = None,
) -> dict:
    """Accuracy, weighted precision/recall/F1, macro AUC, and the confusion matrix.

    Per-class one-vs-rest AUCs for classes absent from ``y`` are undefined;
    they are excluded from the macro average and listed in ``auc_excluded``.
    """
    y = np.asarray(y, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y.shape != y_pred.shape or y.ndim != 1 or len(y) == 0:
        raise ValueError("y and y_pred must be non-empty 1-D arrays of equal length")
    if n_classes is None:
        n_classes = int(max(y.max(), y_pred.max())) + 1
    if probs is not None:
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != (len(y), n_classes):
            raise ValueError("probs must be (n_samples, n_classes)")
        if np.any(np.abs(probs.sum(axis=1) - 1.0) > 1e-6):
            raise ValueError("probability rows must lie on the simplex")

    cm = np.zeros((n_classes, n_classes), dtype=int)
    for t, p in zip(y, y_pred):
        cm[t, p] += 1
    total = len(y)
    accuracy = float(np.trace(cm) / total)

    support = cm.sum(axis=1)
    precisions = np.zeros(n_classes)
    recalls = np.zeros(n_classes)
    f1s = np.zeros(n_classes)
    for c in range(n_classes):
        tp = cm[c, c]
        pred_c = cm[:, c].sum()
        precisions[c] = tp / pred_c if pred_c > 0 else 0.0
        recalls[c] = tp / support[c] if support[c] > 0 else 0.0
        denom = precisions[c] + recalls[c]
        f1s[c] = 2 * precisions[c] * recalls[c] / denom if denom > 0 else 0.0
    weights = support / total
    weighted_precision = float((weights * precisions).sum())
    weighted_recall = float((weights * recalls).sum())
    weighted_f1 = float((weights * f1s).sum())

    macro_auc = None
    per_class_auc: dict[int, Optional[float]] = {}
    auc_excluded: list[int] = []
    if probs is not None:
        aucs = []
        for c in range(n_classes):
            binary = (y == c).astype(int)
            if binary.sum() == 0 or binary.sum() == len(y):
                per_class_auc[c] = None
                auc_excluded.append(c)
                continue
            auc = roc_auc_binary(binary, probs[:, c])
            per_class_auc[c] = float(auc)
            aucs.append(auc)
        macro_auc = float(np.mean(aucs)) if aucs else None

    return {
        "accuracy": accuracy,
        "weighted_precision": weighted_precision,
        "weighted_recall": weighted_recall,
        "weighted_f1": weighted_f1,
        "macro_auc": macro_auc,
        "per_class_auc": per_class_auc,
        "auc_excluded": auc_excluded,
        "confusion_matrix": cm,
    }
