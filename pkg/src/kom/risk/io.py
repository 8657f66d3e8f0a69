"""Risk model persistence: one directory per task with card + pickled pipeline."""

from __future__ import annotations

import json
import pickle
from pathlib import Path

import numpy as np

from kom.risk.suite import ModelCard


def save_risk_model(directory: str | Path, card: ModelCard, background: np.ndarray) -> Path:
    directory = Path(directory) / card.task_id
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "card.json").write_text(json.dumps(card.to_dict(), indent=2, sort_keys=True))
    payload = {
        "estimator": card.estimator,
        "preprocess_spec": card.preprocess_spec,
        "feature_names": card.feature_names,
        "background": np.asarray(background),
    }
    with (directory / "model.pkl").open("wb") as fh:
        pickle.dump(payload, fh)
    return directory


def load_risk_models(directory: str | Path) -> tuple[dict, dict]:
    """Load (cards, backgrounds) keyed by task id from a models directory."""
    directory = Path(directory)
    cards: dict[str, ModelCard] = {}
    backgrounds: dict[str, np.ndarray] = {}
    for sub in sorted(directory.iterdir()):
        card_path = sub / "card.json"
        model_path = sub / "model.pkl"
        if not (sub.is_dir() and card_path.exists() and model_path.exists()):
            continue
        meta = json.loads(card_path.read_text())
        with model_path.open("rb") as fh:
            payload = pickle.load(fh)
        card = ModelCard(
            task_id=meta["task_id"],
            kind=meta["kind"],
            family=meta["family"],
            hyperparameters=meta["hyperparameters"],
            cv_metrics=meta["cv_metrics"],
            selection_rank=meta["selection_rank"],
            seed=meta["seed"],
            data_hash=meta["data_hash"],
            cohort_mean=meta["cohort_mean"],
            estimator=payload["estimator"],
            preprocess_spec=payload["preprocess_spec"],
            feature_names=payload["feature_names"],
        )
        cards[card.task_id] = card
        backgrounds[card.task_id] = payload["background"]
    return cards, backgrounds
