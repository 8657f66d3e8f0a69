"""Study and model-artifact file formats.

Studies are grayscale PNGs with a ``<study_id>.json`` sidecar. A model
artifact is a directory holding ``weights.pt`` plus ``manifest.json``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np

from kom.imaging.classifier import ClassifierModel
from kom.imaging.localizer import LocalizerModel, LocalizerPair
from kom.imaging.types import PreprocessConfig, RadiographStudy, TrainConfig


def save_study(directory: str | Path, study: RadiographStudy, labels: Optional[dict] = None) -> Path:
    from PIL import Image

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    img = np.asarray(study.image)
    if img.max() <= 1.0:
        data = (np.clip(img, 0, 1) * 65535).astype(np.uint16)
    else:
        data = np.clip(img, 0, 65535).astype(np.uint16)
    png_path = directory / f"{study.study_id}.png"
    Image.fromarray(data).save(png_path)
    sidecar = {"study_id": study.study_id, "side_convention": study.side_convention}
    if labels:
        sidecar["labels"] = labels
    (directory / f"{study.study_id}.json").write_text(json.dumps(sidecar, indent=2))
    return png_path


def load_study(png_path: str | Path) -> tuple[RadiographStudy, dict]:
    """Read a study PNG and its sidecar; returns (study, sidecar dict)."""
    from PIL import Image

    png_path = Path(png_path)
    img = Image.open(png_path)
    if img.mode not in ("L", "I", "I;16"):
        img = img.convert("L")
    arr = np.asarray(img, dtype=np.float64)
    sidecar_path = png_path.with_suffix(".json")
    sidecar = json.loads(sidecar_path.read_text()) if sidecar_path.exists() else {}
    study_id = sidecar.get("study_id", png_path.stem)
    study = RadiographStudy(
        study_id=study_id,
        image=arr,
        side_convention=sidecar.get("side_convention", "left-knee-on-image-right"),
    )
    return study, sidecar


def _write_artifact(directory: Path, state_dict, manifest: dict) -> None:
    import torch

    directory.mkdir(parents=True, exist_ok=True)
    torch.save(state_dict, directory / "weights.pt")
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def save_localizer(directory: str | Path, model: LocalizerModel | LocalizerPair) -> None:
    directory = Path(directory)
    if isinstance(model, LocalizerPair):
        save_localizer(directory / "left", model.left)
        save_localizer(directory / "right", model.right)
        (directory / "manifest.json").write_text(
            json.dumps({"task": "localizer-pair"}, indent=2, sort_keys=True)
        )
        return
    _write_artifact(directory, model.net.state_dict(), model.manifest())


def save_classifier(directory: str | Path, model: ClassifierModel) -> None:
    _write_artifact(Path(directory), model.net.state_dict(), model.manifest())


def _load_manifest(directory: Path) -> dict:
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"no manifest.json in {directory}")
    return json.loads(manifest_path.read_text())


def load_model(directory: str | Path):
    """Load any saved artifact; the manifest's task field selects the type."""
    import torch

    directory = Path(directory)
    manifest = _load_manifest(directory)
    task = manifest["task"]
    if task == "localizer-pair":
        return LocalizerPair(
            left=load_model(directory / "left"), right=load_model(directory / "right")
        )

    state = torch.load(directory / "weights.pt", weights_only=True)
    cfg_dict = dict(manifest["train_config"])
    cfg_dict["split"] = tuple(cfg_dict["split"])
    cfg = TrainConfig(**cfg_dict)
    if task.startswith("localizer"):
        from kom.imaging.unet import UNet

        coord_channel = manifest["model"].get("coord_channel", False)
        net = UNet(
            base_channels=manifest["model"]["base_channels"],
            in_channels=2 if coord_channel else 1,
        )
        net.load_state_dict(state)
        net.eval()
        side = task.split("-", 1)[1] if "-" in task else None
        return LocalizerModel(
            net=net,
            input_size=manifest["model"]["input_size"],
            base_channels=manifest["model"]["base_channels"],
            train_config=cfg,
            best_epoch=manifest["metrics"].get("best_epoch", -1),
            data_hash=manifest["data_hash"],
            metrics=manifest["metrics"],
            side=side,
            coord_channel=coord_channel,
        )

    from kom.imaging.resnet import ResNetClassifier

    pp = dict(manifest["preprocess"])
    pp["augmentations"] = frozenset(pp["augmentations"])
    preprocess = PreprocessConfig(**pp)
    card = manifest["cardinality"]
    base_channels = state["stem.0.weight"].shape[0]
    net = ResNetClassifier(num_classes=card, base_channels=base_channels)
    net.load_state_dict(state)
    net.eval()
    return ClassifierModel(
        net=net,
        task=task,
        cardinality=card,
        input_size=manifest["model"]["input_size"],
        preprocess=preprocess,
        train_config=cfg,
        data_hash=manifest["data_hash"],
        metrics=manifest["metrics"],
    )


def save_model_set(directory: str | Path, models: dict[str, ClassifierModel]) -> None:
    directory = Path(directory)
    for task, model in models.items():
        save_classifier(directory / task, model)


def load_model_set(directory: str | Path) -> dict:
    """Load every artifact subdirectory under ``directory``, keyed by task."""
    directory = Path(directory)
    models = {}
    for sub in sorted(directory.iterdir()):
        if sub.is_dir() and (sub / "manifest.json").exists():
            model = load_model(sub)
            key = getattr(model, "task", None) or sub.name
            models[key if isinstance(key, str) else sub.name] = model
    return models
