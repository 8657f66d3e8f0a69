"""Shared fixtures: tiny trained models reused across integration tests."""

from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture(scope="session")
def tiny_localizer():
    """A quickly trained localizer good enough to find synthetic blobs."""
    from kom.imaging.localizer import train_localizer
    from kom.imaging.synthetic import make_blob_dataset
    from kom.imaging.types import TrainConfig

    dataset = make_blob_dataset(24, size=64, seed=100)
    cfg = TrainConfig.for_localizer(seed=100, epochs=6, initial_lr=1e-3, batch_size=8)
    model, history = train_localizer(dataset, cfg, augment=False)
    return model


@pytest.fixture(scope="session")
def tiny_imaging_models():
    """Eleven task heads backed by four quick trainings (shared weights per cardinality)."""
    from dataclasses import replace

    from kom.imaging.classifier import train_classifier
    from kom.imaging.synthetic import make_texture_dataset, texture_preprocess
    from kom.imaging.types import CLASSIFICATION_TASKS, TrainConfig

    preprocess = texture_preprocess(size=36)

    def quick(task: str, n_classes: int, seed: int):
        data = make_texture_dataset(15, size=36, seed=seed, n_classes=n_classes)
        cfg = TrainConfig.for_classifier(
            seed=seed, epochs=3, initial_lr=1e-3, folds=3, batch_size=16
        )
        model, _ = train_classifier(task, data, cfg, preprocess=preprocess, base_channels=8)
        return model

    severity = quick("severity", 4, seed=201)
    graded = quick("jsn-medial", 4, seed=202)
    binary = quick("osteophyte-medial-femur", 2, seed=203)

    models = {"severity": severity}
    for task, card in CLASSIFICATION_TASKS.items():
        if task == "severity":
            continue
        source = graded if card == 4 else binary
        models[task] = replace(source, task=task)
    return models


@pytest.fixture(scope="session")
def tiny_risk_setup():
    """Fitted model cards + backgrounds for two representative risk tasks."""
    from kom.risk.preprocess import PreprocessSpec, preprocess
    from kom.risk.features import column_spec
    from kom.risk.suite import (
        TaskSpec,
        fit_final_model,
        run_classification_suite,
        run_regression_suite,
        select_best_model,
        table_hash,
    )
    from kom.risk.synthetic import make_risk_table

    table = make_risk_table(160, seed=500)
    cards = {}
    backgrounds = {}

    reg_task = TaskSpec("koos_pain_left_v01", "regression", "koos_pain_left_v01")
    reg_results = run_regression_suite(
        reg_task,
        table,
        seed=500,
        families=["random-forest", "elastic-net"],
        overrides={"random-forest": {"n_estimators": 30}},
    )
    reg_card = fit_final_model(
        select_best_model(reg_results, reg_task, seed=500, data_hash=table_hash(table)),
        reg_task,
        table,
    )

    clf_task = TaskSpec("kl_left_v01", "classification", "kl_left_v01")
    clf_results = run_classification_suite(
        clf_task,
        table,
        seed=500,
        families=["random-forest", "knn"],
        overrides={"random-forest": {"n_estimators": 30}},
    )
    clf_card = fit_final_model(
        select_best_model(clf_results, clf_task, seed=500, data_hash=table_hash(table)),
        clf_task,
        table,
    )

    spec_map = column_spec()
    features = table[[c for c in table.columns if c in spec_map]]
    design, _ = preprocess(features, PreprocessSpec(), spec_map=spec_map)
    background = design.to_numpy(dtype=np.float64)[:24]
    for card in (reg_card, clf_card):
        cards[card.task_id] = card
        backgrounds[card.task_id] = background
    return {"cards": cards, "backgrounds": backgrounds, "table": table}


@pytest.fixture(scope="session")
def small_kbs():
    from kom.therapy.synthetic import load_synthetic_kbs

    return load_synthetic_kbs(
        counts={d: 15 for d in ("psychology", "nutrition", "surgery-medication",
                                "rehabilitation", "exercise", "guideline")},
        seed=900,
    )
