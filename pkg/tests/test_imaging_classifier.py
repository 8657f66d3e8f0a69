"""Schedules, early stopping, dataset balancing, and the knee classifier."""

import numpy as np
import pytest

from kom.imaging.classifier import (
    CosineSchedule,
    EarlyStopping,
    StepDecaySchedule,
    balance_image_dataset,
    classify_knee,
    stratified_fold_indices,
)
from kom.imaging.types import FEATURE_TASKS, KneeROI, KneeSide, SeverityClass


def test_step_decay_schedule():
    sched = StepDecaySchedule(1e-5, gamma=0.1, step_epochs=7)
    for epoch in range(7):
        assert sched(epoch) == pytest.approx(1e-5, rel=1e-12)
    assert sched(7) == pytest.approx(1e-6, rel=1e-12)
    assert sched(13) == pytest.approx(1e-6, rel=1e-12)
    assert sched(14) == pytest.approx(1e-7, rel=1e-12)


def test_cosine_schedule_endpoints():
    sched = CosineSchedule(1e-3, total_epochs=40)
    assert sched(0) == pytest.approx(1e-3)
    assert sched(20) == pytest.approx(5e-4)
    assert sched(40) == pytest.approx(0.0, abs=1e-18)
    values = [sched(e) for e in range(41)]
    assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))


def test_early_stopping_plateau_stops_at_epoch_11():
    # First observation improves; every later epoch changes by less than the
    # min delta, so patience 10 runs out on the 11th epoch (1-based).
    stopper = EarlyStopping(patience=10, min_delta=1e-6)
    epochs_run = 0
    for _ in range(100):
        epochs_run += 1
        if stopper.update(0.5):
            break
    assert epochs_run == 11
    assert stopper.best_epoch == 0


def test_early_stopping_respects_min_delta():
    stopper = EarlyStopping(patience=2, min_delta=1e-2)
    assert not stopper.update(1.0)
    assert not stopper.update(0.995)  # not enough improvement
    assert stopper.update(0.994)      # second miss in a row -> stop
    assert stopper.stopped_epoch == 2


def test_early_stopping_resets_on_improvement():
    stopper = EarlyStopping(patience=2, min_delta=1e-6)
    seq = [1.0, 0.9, 0.95, 0.8, 0.85, 0.86]
    stops = [stopper.update(v) for v in seq]
    assert stops == [False, False, False, False, False, True]
    assert stopper.best == 0.8


def test_balance_dataset_counts():
    rng = np.random.default_rng(0)
    items = [(np.zeros((4, 4)) + i, label) for i, label in enumerate([0] * 9 + [1] * 3 + [2] * 5)]
    balanced = balance_image_dataset(items, 5, rng)
    labels = [label for _, label in balanced]
    assert labels.count(0) == 5 and labels.count(1) == 5 and labels.count(2) == 5


def test_stratified_folds_cover_everything():
    rng = np.random.default_rng(1)
    labels = [0] * 10 + [1] * 10
    folds = stratified_fold_indices(labels, 5, rng)
    all_idx = sorted(int(i) for fold in folds for i in fold)
    assert all_idx == list(range(20))
    for fold in folds:
        fold_labels = [labels[i] for i in fold]
        assert fold_labels.count(0) == 2 and fold_labels.count(1) == 2


def test_stratified_folds_reject_rare_class():
    rng = np.random.default_rng(1)
    with pytest.raises(ValueError):
        stratified_fold_indices([0] * 10 + [1] * 3, 5, rng)


def _roi(models, side=KneeSide.LEFT):
    size = next(iter(models.values())).input_size
    rng = np.random.default_rng(3)
    return KneeROI(side=side, crop=rng.uniform(0, 1, (size, size)), origin=(0, 0))


def test_classify_knee_outputs(tiny_imaging_models):
    roi = _roi(tiny_imaging_models)
    findings = classify_knee(roi, tiny_imaging_models)
    assert findings.side == KneeSide.LEFT
    assert len(findings.features) == 10
    assert abs(sum(findings.severity_probabilities) - 1.0) < 1e-6
    for f in findings.features:
        assert abs(sum(f.probabilities) - 1.0) < 1e-6
        assert f.grade == int(np.argmax(f.probabilities))
    assert findings.oa_present == (findings.severity != SeverityClass.NONE_DOUBT)


def test_classify_knee_deterministic(tiny_imaging_models):
    roi = _roi(tiny_imaging_models)
    a = classify_knee(roi, tiny_imaging_models)
    b = classify_knee(roi, tiny_imaging_models)
    assert a.to_dict() == b.to_dict()


def test_classify_knee_missing_model_marks_unavailable(tiny_imaging_models):
    models = dict(tiny_imaging_models)
    models.pop("jsn-medial")
    findings = classify_knee(_roi(models), models)
    assert "jsn-medial" in findings.unavailable_tasks
    assert len(findings.features) == 9


def test_classify_knee_requires_severity(tiny_imaging_models):
    models = {k: v for k, v in tiny_imaging_models.items() if k != "severity"}
    with pytest.raises(ValueError):
        classify_knee(_roi(tiny_imaging_models), models)


def test_feature_task_cardinalities():
    jsn = [t for t in FEATURE_TASKS if t.startswith("jsn")]
    sclerosis = [t for t in FEATURE_TASKS if t.startswith("sclerosis")]
    osteophyte = [t for t in FEATURE_TASKS if t.startswith("osteophyte")]
    assert len(jsn) == 2 and all(FEATURE_TASKS[t] == 4 for t in jsn)
    assert len(sclerosis) == 4 and all(FEATURE_TASKS[t] == 4 for t in sclerosis)
    assert len(osteophyte) == 4 and all(FEATURE_TASKS[t] == 2 for t in osteophyte)


class _FixedLogits:
    """Stub network emitting constant logits (duck-types the torch module)."""

    def __init__(self, logits):
        import torch

        self._logits = torch.tensor(logits, dtype=torch.float32)

    def eval(self):
        return self

    def __call__(self, x):
        return self._logits[None].repeat(x.shape[0], 1)


def _fixed_model(logits, task="severity"):
    from kom.imaging.classifier import ClassifierModel
    from kom.imaging.types import PreprocessConfig, TrainConfig

    return ClassifierModel(
        net=_FixedLogits(logits),
        task=task,
        cardinality=len(logits),
        input_size=16,
        preprocess=PreprocessConfig(window_center=0.5, window_width=1.0, resize_to=16, crop_to=16,
                                    augmentations=frozenset()),
        train_config=TrainConfig.for_classifier(seed=0),
        data_hash="fixture",
    )


def _full_fixture_models(severity_logits):
    from kom.imaging.types import FEATURE_TASKS

    models = {"severity": _fixed_model(severity_logits)}
    for task, card in FEATURE_TASKS.items():
        logits = [0.0] * card
        logits[0] = 3.0
        models[task] = _fixed_model(logits, task=task)
    return models


def test_hardcoded_logits_favoring_class_2_gives_moderate():
    import numpy as np

    models = _full_fixture_models([0.0, 0.1, 4.0, 0.2])
    roi = KneeROI(side=KneeSide.LEFT, crop=np.zeros((16, 16)), origin=(0, 0))
    findings = classify_knee(roi, models)
    assert findings.severity == SeverityClass.MODERATE
    assert int(np.argmax(findings.severity_probabilities)) == 2
    assert findings.kl_estimate == 3
    assert findings.oa_present is True


def test_five_class_native_head_consolidates():
    import numpy as np

    # five-grade head favoring grade 1 -> NoneDoubt after consolidation
    models = _full_fixture_models([0.0, 5.0, 0.0, 0.0, 0.0])
    roi = KneeROI(side=KneeSide.RIGHT, crop=np.zeros((16, 16)), origin=(0, 0))
    findings = classify_knee(roi, models)
    assert findings.kl_estimate == 1
    assert findings.severity == SeverityClass.NONE_DOUBT
    assert findings.oa_present is False
    assert len(findings.severity_probabilities) == 4
    assert abs(sum(findings.severity_probabilities) - 1.0) < 1e-9
