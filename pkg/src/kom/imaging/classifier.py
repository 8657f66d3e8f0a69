"""Per-knee classification: schedules, early stopping, cross-validated training."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from kom.common import derive_seed, seeded_rng
from kom.imaging.grading import kl_to_severity, severity_to_kl_estimate
from kom.imaging.types import (
    CLASSIFICATION_TASKS,
    FEATURE_TASKS,
    FeatureFinding,
    KneeFindings,
    KneeROI,
    PreprocessConfig,
    SeverityClass,
    TrainConfig,
)


class StepDecaySchedule:
    """lr(epoch) = initial * gamma^(epoch // step_epochs), epochs 0-based."""

    def __init__(self, initial_lr: float, gamma: float = 0.1, step_epochs: int = 7):
        if step_epochs < 1:
            raise ValueError("step_epochs must be >= 1")
        self.initial_lr = initial_lr
        self.gamma = gamma
        self.step_epochs = step_epochs

    def __call__(self, epoch: int) -> float:
        return self.initial_lr * self.gamma ** (epoch // self.step_epochs)


class CosineSchedule:
    """Cosine annealing over a single period equal to the total epoch count."""

    def __init__(self, initial_lr: float, total_epochs: int, min_lr: float = 0.0):
        if total_epochs < 1:
            raise ValueError("total_epochs must be >= 1")
        self.initial_lr = initial_lr
        self.total_epochs = total_epochs
        self.min_lr = min_lr

    def __call__(self, epoch: int) -> float:
        frac = epoch / self.total_epochs
        return self.min_lr + 0.5 * (self.initial_lr - self.min_lr) * (1.0 + math.cos(math.pi * frac))


class EarlyStopping:
    """Stop after ``patience`` consecutive epochs without sufficient improvement.

    An epoch improves when the monitored value drops below the best seen so
    far by more than ``min_delta``. ``update`` returns True once training
    should stop; the best value and its epoch index stay queryable.
    """

    def __init__(self, patience: int = 10, min_delta: float = 1e-6):
        self.patience = patience
        self.min_delta = min_delta
        self.best: Optional[float] = None
        self.best_epoch: Optional[int] = None
        self.counter = 0
        self.stopped_epoch: Optional[int] = None
        self._epoch = -1

    def update(self, value: float) -> bool:
        self._epoch += 1
        if self.best is None or value < self.best - self.min_delta:
            self.best = value
            self.best_epoch = self._epoch
            self.counter = 0
        else:
            self.counter += 1
        if self.counter >= self.patience:
            self.stopped_epoch = self._epoch
            return True
        return False


def stratified_fold_indices(labels: Sequence[int], folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Shuffled per-class round-robin assignment into ``folds`` validation folds."""
    labels = np.asarray(labels)
    assignment = np.zeros(len(labels), dtype=int)
    for cls in np.unique(labels):
        idx = np.nonzero(labels == cls)[0]
        if len(idx) < folds:
            raise ValueError(f"class {cls} has {len(idx)} rows, fewer than {folds} folds")
        idx = rng.permutation(idx)
        for pos, i in enumerate(idx):
            assignment[i] = pos % folds
    return [np.nonzero(assignment == f)[0] for f in range(folds)]


def balance_image_dataset(
    items: Sequence[tuple[np.ndarray, int]], n_per_class: int, rng: np.random.Generator
) -> list[tuple[np.ndarray, int]]:
    """Resample to exactly ``n_per_class`` items per label (with replacement when short)."""
    by_class: dict[int, list[int]] = {}
    for i, (_, label) in enumerate(items):
        by_class.setdefault(int(label), []).append(i)
    out: list[tuple[np.ndarray, int]] = []
    for cls in sorted(by_class):
        idx = by_class[cls]
        if len(idx) >= n_per_class:
            chosen = rng.choice(idx, size=n_per_class, replace=False)
        else:
            chosen = rng.choice(idx, size=n_per_class, replace=True)
        out.extend(items[int(i)] for i in chosen)
    return out


@dataclass
class ClassifierModel:
    """One trained task head with its preprocessing contract."""

    net: object
    task: str
    cardinality: int
    input_size: int
    preprocess: PreprocessConfig
    train_config: TrainConfig
    data_hash: str
    metrics: dict = field(default_factory=dict)

    def predict_probs(self, crop01: np.ndarray) -> np.ndarray:
        import torch

        from kom.imaging.preprocess import resize_image

        img = np.asarray(crop01, dtype=np.float64)
        if img.shape != (self.input_size, self.input_size):
            img = resize_image(img, self.input_size)
        self.net.eval()
        with torch.no_grad():
            t = torch.from_numpy(img.astype(np.float32))[None, None]
            logits = self.net(t)[0]
            probs = torch.softmax(logits, dim=0).numpy().astype(np.float64)
        return probs / probs.sum()

    def manifest(self) -> dict:
        return {
            "task": self.task,
            "cardinality": self.cardinality,
            "train_config": self.train_config.to_dict(),
            "seed": self.train_config.seed,
            "data_hash": self.data_hash,
            "metrics": self.metrics,
            "preprocess": self.preprocess.to_dict(),
            "model": {"input_size": self.input_size},
        }


def _prepare_train_image(
    img: np.ndarray, cfg: PreprocessConfig, rng: np.random.Generator
) -> np.ndarray:
    from kom.imaging.preprocess import augment_pair, random_crop, resize_image

    out = resize_image(img, cfg.resize_to) if img.shape != (cfg.resize_to, cfg.resize_to) else img
    out, _ = augment_pair(out, None, cfg, rng)
    return random_crop(out, cfg.crop_to, rng)


def _prepare_eval_image(img: np.ndarray, cfg: PreprocessConfig) -> np.ndarray:
    from kom.imaging.preprocess import center_crop, resize_image

    out = resize_image(img, cfg.resize_to) if img.shape != (cfg.resize_to, cfg.resize_to) else img
    return center_crop(out, cfg.crop_to)


def _dataset_hash(items: Sequence[tuple[np.ndarray, int]]) -> str:
    import hashlib

    h = hashlib.sha256()
    for img, label in items:
        h.update(np.ascontiguousarray(img, dtype=np.float64).tobytes())
        h.update(str(int(label)).encode())
    return h.hexdigest()


def train_classifier(
    task: str,
    dataset: Sequence[tuple[np.ndarray, int]],
    cfg: TrainConfig,
    preprocess: Optional[PreprocessConfig] = None,
    cardinality: Optional[int] = None,
    base_channels: int = 16,
    balance: bool = False,
) -> tuple[ClassifierModel, list[dict]]:
    """Five-fold cross-validated training of one task head.

    Returns the fold model with the best validation accuracy plus one metrics
    row per fold (accuracy, confusion matrix, macro AUC, epochs run). Training
    uses cross-entropy, the configured LR schedule, and early stopping on
    validation loss with best-state restore.
    """
    import torch
    import torch.nn as nn

    from kom.imaging.resnet import ResNetClassifier
    from kom.risk.metrics import classification_metrics

    if task not in CLASSIFICATION_TASKS and cardinality is None:
        raise ValueError(f"unknown task {task!r}; pass cardinality for custom tasks")
    card = cardinality if cardinality is not None else CLASSIFICATION_TASKS[task]
    preprocess = preprocess or PreprocessConfig()

    items = [(np.asarray(img, dtype=np.float64), int(label)) for img, label in dataset]
    for _, label in items:
        if not 0 <= label < card:
            raise ValueError(f"label {label} outside task cardinality {card}")

    rng = seeded_rng(cfg.seed)
    if balance:
        items = balance_image_dataset(items, cfg.class_balance, rng)
    labels = [label for _, label in items]
    folds = stratified_fold_indices(labels, cfg.folds, rng)

    fold_metrics: list[dict] = []
    best_model: Optional[ClassifierModel] = None
    best_acc = -1.0
    data_hash = _dataset_hash(items)

    for fold_id, val_idx in enumerate(folds):
        torch.manual_seed(derive_seed(cfg.seed, "fold", fold_id))
        fold_rng = seeded_rng(derive_seed(cfg.seed, "fold-rng", fold_id))
        val_mask = np.zeros(len(items), dtype=bool)
        val_mask[val_idx] = True
        train_items = [items[i] for i in np.nonzero(~val_mask)[0]]
        val_items = [items[i] for i in val_idx]
        train_classes = {label for _, label in train_items}
        val_classes = {label for _, label in val_items}
        if len(train_classes) < card or len(val_classes) < card:
            raise ValueError(f"fold {fold_id} is missing a class")

        net = ResNetClassifier(num_classes=card, base_channels=base_channels)
        optimizer = torch.optim.Adam(
            net.parameters(), lr=cfg.initial_lr, weight_decay=cfg.weight_decay
        )
        if cfg.lr_schedule == "step-decay":
            schedule = StepDecaySchedule(cfg.initial_lr, cfg.lr_gamma, cfg.lr_step_epochs)
        else:
            schedule = CosineSchedule(cfg.initial_lr, cfg.epochs)
        stopper = EarlyStopping(cfg.early_stop_patience, cfg.early_stop_min_delta)
        criterion = nn.CrossEntropyLoss()

        val_eval = np.stack([_prepare_eval_image(img, preprocess) for img, _ in val_items])
        val_x = torch.from_numpy(val_eval.astype(np.float32))[:, None]
        val_y = torch.tensor([label for _, label in val_items], dtype=torch.long)

        best_state = None
        best_val_loss = math.inf
        epochs_run = 0
        for epoch in range(cfg.epochs):
            lr = schedule(epoch)
            for group in optimizer.param_groups:
                group["lr"] = lr
            net.train()
            order = fold_rng.permutation(len(train_items))
            for start in range(0, len(order), cfg.batch_size):
                batch = order[start : start + cfg.batch_size]
                imgs = np.stack(
                    [_prepare_train_image(train_items[i][0], preprocess, fold_rng) for i in batch]
                )
                ys = torch.tensor([train_items[i][1] for i in batch], dtype=torch.long)
                x = torch.from_numpy(imgs.astype(np.float32))[:, None]
                optimizer.zero_grad()
                loss = criterion(net(x), ys)
                loss.backward()
                optimizer.step()

            net.eval()
            with torch.no_grad():
                val_loss = float(criterion(net(val_x), val_y))
            epochs_run = epoch + 1
            if stopper.best is None or val_loss < stopper.best - cfg.early_stop_min_delta:
                best_state = {k: v.clone() for k, v in net.state_dict().items()}
                best_val_loss = val_loss
            if stopper.update(val_loss):
                break

        if best_state is not None:
            net.load_state_dict(best_state)
        net.eval()
        with torch.no_grad():
            probs = torch.softmax(net(val_x), dim=1).numpy().astype(np.float64)
        probs = probs / probs.sum(axis=1, keepdims=True)
        y_true = np.array([label for _, label in val_items])
        y_pred = probs.argmax(axis=1)
        m = classification_metrics(y_true, y_pred, probs, n_classes=card)
        fold_metrics.append(
            {
                "fold": fold_id,
                "accuracy": m["accuracy"],
                "macro_auc": m["macro_auc"],
                "confusion_matrix": m["confusion_matrix"].tolist(),
                "epochs_run": epochs_run,
                "best_val_loss": best_val_loss,
            }
        )
        if m["accuracy"] > best_acc:
            best_acc = m["accuracy"]
            best_model = ClassifierModel(
                net=net,
                task=task,
                cardinality=card,
                input_size=preprocess.crop_to,
                preprocess=preprocess,
                train_config=cfg,
                data_hash=data_hash,
            )

    assert best_model is not None
    best_model.metrics = {
        "cv_accuracy_mean": float(np.mean([m["accuracy"] for m in fold_metrics])),
        "cv_accuracy_sd": float(np.std([m["accuracy"] for m in fold_metrics])),
        "folds": fold_metrics,
    }
    return best_model, fold_metrics


def classify_knee(roi: KneeROI, models: dict[str, ClassifierModel]) -> KneeFindings:
    """Apply the severity head and the ten feature heads to one knee ROI.

    Missing models mark their task unavailable instead of failing. A 5-class
    severity model is treated as a native KL head and consolidated; otherwise
    the KL estimate is the representative grade of the severity class.
    """
    crop = np.asarray(roi.crop, dtype=np.float64)

    severity_model = models.get("severity")
    if severity_model is None:
        raise ValueError("severity model is required")
    sev_probs = severity_model.predict_probs(crop)
    if severity_model.cardinality == 5:
        kl_estimate = int(np.argmax(sev_probs))
        severity = kl_to_severity(kl_estimate)
        order = list(SeverityClass)
        four = np.zeros(4)
        for kl, p in enumerate(sev_probs):
            four[order.index(kl_to_severity(kl))] += p
        severity_probs = (four / four.sum()).tolist()
    else:
        severity = list(SeverityClass)[int(np.argmax(sev_probs))]
        severity_probs = sev_probs.tolist()
        kl_estimate = severity_to_kl_estimate(severity)

    features: list[FeatureFinding] = []
    unavailable: list[str] = []
    for feat in FEATURE_TASKS:
        model = models.get(feat)
        if model is None:
            unavailable.append(feat)
            continue
        probs = model.predict_probs(crop)
        features.append(
            FeatureFinding(feature=feat, grade=int(np.argmax(probs)), probabilities=probs.tolist())
        )

    return KneeFindings(
        side=roi.side,
        severity=severity,
        severity_probabilities=severity_probs,
        kl_estimate=kl_estimate,
        features=features,
        oa_present=severity != SeverityClass.NONE_DOUBT,
        unavailable_tasks=unavailable,
    )
