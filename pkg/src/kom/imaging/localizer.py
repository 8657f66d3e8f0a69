"""Knee-center localization: UNet training, detection extraction, matched metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage
from scipy.optimize import linear_sum_assignment

from kom.common import seeded_rng
from kom.imaging.losses import hybrid_seg_loss_torch
from kom.imaging.types import LocalizationResult, RadiographStudy, TrainConfig

Box = tuple[int, int, int, int]  # (x0, y0, x1, y1), half-open


def box_iou(a: Box, b: Box) -> float:
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    iw = max(0, min(ax1, bx1) - max(ax0, bx0))
    ih = max(0, min(ay1, by1) - max(ay0, by0))
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union if union > 0 else 0.0


def mask_to_detections(
    prob_mask: np.ndarray,
    threshold: float = 0.5,
    max_regions: int = 2,
) -> LocalizationResult:
    """Threshold a probability mask and keep the largest connected components.

    Components beyond ``max_regions`` are dropped (largest areas win) and the
    result carries a warning. Centers are component centroids; boxes are tight
    half-open bounds clipped to the image.
    """
    prob = np.asarray(prob_mask, dtype=np.float64)
    binary = prob >= threshold
    labeled, n = ndimage.label(binary, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return LocalizationResult(centers=[], boxes=[], mask=binary, confidence=[])

    areas = ndimage.sum_labels(binary, labeled, index=range(1, n + 1))
    order = sorted(range(n), key=lambda i: (-areas[i], i))
    keep = order[:max_regions]
    warning = f"kept {max_regions} of {n} components" if n > max_regions else None

    centers: list[tuple[float, float]] = []
    boxes: list[Box] = []
    confidence: list[float] = []
    slices = ndimage.find_objects(labeled)
    for i in keep:
        comp = labeled == (i + 1)
        ys, xs = np.nonzero(comp)
        centers.append((float(xs.mean()), float(ys.mean())))
        sl = slices[i]
        boxes.append((sl[1].start, sl[0].start, sl[1].stop, sl[0].stop))
        confidence.append(float(prob[comp].mean()))

    # Keep left-to-right order for stable downstream side assignment.
    idx = sorted(range(len(centers)), key=lambda k: centers[k][0])
    return LocalizationResult(
        centers=[centers[k] for k in idx],
        boxes=[boxes[k] for k in idx],
        mask=binary,
        confidence=[confidence[k] for k in idx],
        warning=warning,
    )


@dataclass
class MatchResult:
    assignment: list[tuple[int, int]]  # (pred index, gt index)
    mean_iou: Optional[float]
    mean_center_error: Optional[float]
    n_matched: int
    total_center_distance: float


def match_detections(preds: LocalizationResult, gts: LocalizationResult) -> MatchResult:
    """Assign predictions to ground truth minimizing total center distance.

    Rectangular instances are allowed; unmatched detections on either side are
    scored as misses (IoU 0). Mean IoU divides by ``max(n_pred, n_gt)``; mean
    center error averages over matched pairs only and is None when nothing
    matched.
    """
    n_pred, n_gt = len(preds.centers), len(gts.centers)
    if n_pred == 0 or n_gt == 0:
        denom = max(n_pred, n_gt)
        return MatchResult(
            assignment=[],
            mean_iou=0.0 if denom > 0 else None,
            mean_center_error=None,
            n_matched=0,
            total_center_distance=0.0,
        )

    cost = np.zeros((n_pred, n_gt))
    for i, (px, py) in enumerate(preds.centers):
        for j, (gx, gy) in enumerate(gts.centers):
            cost[i, j] = math.hypot(px - gx, py - gy)
    rows, cols = linear_sum_assignment(cost)
    assignment = list(zip(rows.tolist(), cols.tolist()))

    ious = [box_iou(preds.boxes[i], gts.boxes[j]) for i, j in assignment]
    errors = [cost[i, j] for i, j in assignment]
    denom = max(n_pred, n_gt)
    return MatchResult(
        assignment=assignment,
        mean_iou=float(sum(ious) / denom),
        mean_center_error=float(np.mean(errors)),
        n_matched=len(assignment),
        total_center_distance=float(cost[rows, cols].sum()),
    )


def _augment_seg_pair(
    img: np.ndarray, msk: np.ndarray, rng: np.random.Generator, allow_flip: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Synchronized horizontal flip and resized crop for a (image, mask) pair."""
    if allow_flip and rng.random() < 0.5:
        img = img[:, ::-1]
        msk = msk[:, ::-1]
    scale = float(rng.uniform(0.8, 1.0))
    h, w = img.shape
    ch, cw = max(8, int(round(h * scale))), max(8, int(round(w * scale)))
    y0 = int(rng.integers(0, h - ch + 1))
    x0 = int(rng.integers(0, w - cw + 1))
    img_c = img[y0 : y0 + ch, x0 : x0 + cw]
    msk_c = msk[y0 : y0 + ch, x0 : x0 + cw]
    from kom.imaging.preprocess import resize_image

    img_r = resize_image(img_c, h)
    msk_r = resize_image(msk_c.astype(np.float64), h)
    return np.ascontiguousarray(img_r), (msk_r >= 0.5).astype(np.float64)


def _coord_plane(size: int) -> np.ndarray:
    """Normalized x-coordinate plane; lets side-specific models see position."""
    return np.tile(np.linspace(0.0, 1.0, size), (size, 1))


def _stack_input(img: np.ndarray, coord_channel: bool) -> np.ndarray:
    if not coord_channel:
        return img[None]
    return np.stack([img, _coord_plane(img.shape[0])])


@dataclass
class LocalizerModel:
    """Trained segmentation model plus everything needed to reuse it."""

    net: object
    input_size: int
    base_channels: int
    train_config: TrainConfig
    best_epoch: int
    data_hash: str
    metrics: dict
    side: Optional[str] = None  # set when trained on side-specific masks
    window: Optional[object] = None  # PreprocessConfig when inputs need windowing
    coord_channel: bool = False

    def predict_prob(self, image01: np.ndarray) -> np.ndarray:
        """Per-pixel knee-center probability at the model's input resolution."""
        import torch

        from kom.imaging.preprocess import resize_image

        img = np.asarray(image01, dtype=np.float64)
        if img.shape != (self.input_size, self.input_size):
            img = resize_image(img, self.input_size)
        self.net.eval()
        with torch.no_grad():
            t = torch.from_numpy(_stack_input(img, self.coord_channel).astype(np.float32))[None]
            return self.net(t)[0, 0].numpy().astype(np.float64)

    def manifest(self) -> dict:
        return {
            "task": "localizer" if self.side is None else f"localizer-{self.side}",
            "cardinality": None,
            "train_config": self.train_config.to_dict(),
            "seed": self.train_config.seed,
            "data_hash": self.data_hash,
            "metrics": self.metrics,
            "model": {
                "base_channels": self.base_channels,
                "input_size": self.input_size,
                "coord_channel": self.coord_channel,
            },
        }


@dataclass
class LocalizerPair:
    """Two independently trained side-specific models acting as one localizer."""

    left: LocalizerModel
    right: LocalizerModel

    @property
    def input_size(self) -> int:
        return self.left.input_size

    @property
    def window(self):
        return self.left.window

    def predict_prob(self, image01: np.ndarray) -> np.ndarray:
        return np.maximum(self.left.predict_prob(image01), self.right.predict_prob(image01))


def _dataset_hash(pairs: Sequence[tuple[np.ndarray, np.ndarray]]) -> str:
    import hashlib

    h = hashlib.sha256()
    for img, msk in pairs:
        h.update(np.ascontiguousarray(img, dtype=np.float64).tobytes())
        h.update(np.ascontiguousarray(msk, dtype=np.float64).tobytes())
    return h.hexdigest()


def _split_indices(
    n: int, split: tuple[float, float, float], rng: np.random.Generator
) -> tuple[list[int], list[int], list[int]]:
    order = rng.permutation(n).tolist()
    n_train = int(round(split[0] * n))
    n_val = int(round(split[1] * n))
    train = order[:n_train] or order
    val = order[n_train : n_train + n_val] or train[:1]
    test = order[n_train + n_val :] or val
    return train, val, test


def evaluate_localization(
    model, pairs: Sequence[tuple[np.ndarray, np.ndarray]]
) -> tuple[Optional[float], Optional[float]]:
    """Mean matched box IoU and center error of a model over (image, mask) pairs."""
    ious: list[float] = []
    errors: list[float] = []
    for img, msk in pairs:
        pred = mask_to_detections(model.predict_prob(img))
        gt = mask_to_detections(np.asarray(msk, dtype=np.float64))
        res = match_detections(pred, gt)
        if res.mean_iou is not None:
            ious.append(res.mean_iou)
        if res.mean_center_error is not None:
            errors.append(res.mean_center_error)
    mean_iou = float(np.mean(ious)) if ious else None
    mean_err = float(np.mean(errors)) if errors else None
    return mean_iou, mean_err


def train_localizer(
    dataset: Sequence[tuple[np.ndarray, np.ndarray]],
    cfg: TrainConfig,
    base_channels: int = 8,
    augment: bool = True,
    side: Optional[str] = None,
    coord_channel: bool = False,
) -> tuple[LocalizerModel, list[dict]]:
    """Train the segmentation UNet and return the best-validation-IoU snapshot.

    The history carries one entry per epoch (learning rate, train loss,
    validation loss/IoU/center error). All randomness derives from
    ``cfg.seed``, so repeated runs are bit-identical.
    """
    import torch

    from kom.imaging.classifier import CosineSchedule, StepDecaySchedule
    from kom.imaging.unet import UNet

    if len(dataset) == 0:
        raise ValueError("dataset must be non-empty")
    size = dataset[0][0].shape[0]
    prepared = []
    for img, msk in dataset:
        img = np.asarray(img, dtype=np.float64)
        msk = np.asarray(msk, dtype=np.float64)
        if img.shape != msk.shape:
            raise ValueError("image and mask shapes differ")
        uniq = np.unique(msk)
        if not np.all(np.isin(uniq, (0.0, 1.0))):
            raise ValueError("masks must be binary")
        prepared.append((img, msk))

    rng = seeded_rng(cfg.seed)
    torch.manual_seed(cfg.seed)
    train_idx, val_idx, _ = _split_indices(len(prepared), cfg.split, rng)
    train_set = [prepared[i] for i in train_idx]
    val_set = [prepared[i] for i in val_idx]

    net = UNet(base_channels=base_channels, in_channels=2 if coord_channel else 1)
    optimizer = torch.optim.Adam(net.parameters(), lr=cfg.initial_lr, weight_decay=cfg.weight_decay)
    if cfg.lr_schedule == "cosine-annealing":
        schedule = CosineSchedule(cfg.initial_lr, cfg.epochs)
    else:
        schedule = StepDecaySchedule(cfg.initial_lr, cfg.lr_gamma, cfg.lr_step_epochs)

    model = LocalizerModel(
        net=net,
        input_size=size,
        base_channels=base_channels,
        train_config=cfg,
        best_epoch=-1,
        data_hash=_dataset_hash(prepared),
        metrics={},
        side=side,
        coord_channel=coord_channel,
    )

    history: list[dict] = []
    best_iou = -1.0
    best_state = None
    best_epoch = -1
    for epoch in range(cfg.epochs):
        lr = schedule(epoch)
        for group in optimizer.param_groups:
            group["lr"] = lr

        net.train()
        order = rng.permutation(len(train_set))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch_idx = order[start : start + cfg.batch_size]
            imgs, msks = [], []
            for i in batch_idx:
                img, msk = train_set[i]
                if augment:
                    # flips would swap knee sides, so side-specific models
                    # train without them
                    img, msk = _augment_seg_pair(img, msk, rng, allow_flip=side is None)
                imgs.append(_stack_input(img, coord_channel))
                msks.append(msk)
            x = torch.from_numpy(np.stack(imgs).astype(np.float32))
            y = torch.from_numpy(np.stack(msks).astype(np.float32))[:, None]
            optimizer.zero_grad()
            loss = hybrid_seg_loss_torch(net(x), y)
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))

        net.eval()
        with torch.no_grad():
            val_losses = []
            for img, msk in val_set:
                x = torch.from_numpy(_stack_input(img, coord_channel).astype(np.float32))[None]
                y = torch.from_numpy(msk.astype(np.float32))[None, None]
                val_losses.append(float(hybrid_seg_loss_torch(net(x), y)))
        val_iou, val_err = evaluate_localization(model, val_set)

        history.append(
            {
                "epoch": epoch,
                "lr": lr,
                "train_loss": float(np.mean(losses)),
                "val_loss": float(np.mean(val_losses)),
                "val_iou": val_iou,
                "val_center_error": val_err,
            }
        )
        iou_for_selection = -1.0 if val_iou is None else val_iou
        if iou_for_selection > best_iou:
            best_iou = iou_for_selection
            best_state = {k: v.clone() for k, v in net.state_dict().items()}
            best_epoch = epoch

    if best_state is not None:
        net.load_state_dict(best_state)
    model.best_epoch = best_epoch
    model.metrics = {
        "best_epoch": best_epoch,
        "best_val_iou": None if best_iou < 0 else best_iou,
        "final_val_center_error": history[-1]["val_center_error"],
    }
    return model, history


def train_side_localizers(
    dataset: Sequence[tuple[np.ndarray, dict[str, np.ndarray]]],
    cfg: TrainConfig,
    base_channels: int = 8,
    augment: bool = True,
) -> tuple[LocalizerPair, dict[str, list[dict]]]:
    """Train one model per knee side on side-specific masks."""
    from kom.common import derive_seed

    histories: dict[str, list[dict]] = {}
    models: dict[str, LocalizerModel] = {}
    for side in ("left", "right"):
        pairs = [(img, masks[side]) for img, masks in dataset]
        side_cfg = TrainConfig(**{**cfg.to_dict(), "split": tuple(cfg.split), "seed": derive_seed(cfg.seed, side)})
        models[side], histories[side] = train_localizer(
            pairs, side_cfg, base_channels=base_channels, augment=augment, side=side,
            coord_channel=True,
        )
    return LocalizerPair(left=models["left"], right=models["right"]), histories


def localize_knee_centers(study: RadiographStudy, model) -> LocalizationResult:
    """Run the localizer on a study and map detections back to study pixels."""
    from kom.imaging.preprocess import apply_bone_window, resize_image

    window = getattr(model, "window", None)
    if window is not None:
        img01 = apply_bone_window(study.image, window)
    else:
        img01 = np.asarray(study.image, dtype=np.float64)
        if img01.max() > 1.0:
            img01 = img01 / max(img01.max(), 1e-12)

    size = model.input_size
    h, w = img01.shape
    resized = resize_image(img01, size) if img01.shape != (size, size) else img01
    prob = model.predict_prob(resized)
    det = mask_to_detections(prob)
    if img01.shape == (size, size):
        return det

    sx, sy = w / size, h / size
    centers = [(cx * sx, cy * sy) for cx, cy in det.centers]
    boxes = []
    for x0, y0, x1, y1 in det.boxes:
        boxes.append(
            (
                int(np.clip(np.floor(x0 * sx), 0, w - 1)),
                int(np.clip(np.floor(y0 * sy), 0, h - 1)),
                int(np.clip(np.ceil(x1 * sx), 1, w)),
                int(np.clip(np.ceil(y1 * sy), 1, h)),
            )
        )
    full_mask = np.zeros((h, w), dtype=bool)
    ys, xs = np.nonzero(det.mask)
    full_mask[
        np.clip((ys * sy).astype(int), 0, h - 1), np.clip((xs * sx).astype(int), 0, w - 1)
    ] = True
    return LocalizationResult(
        centers=centers, boxes=boxes, mask=full_mask, confidence=det.confidence, warning=det.warning
    )
