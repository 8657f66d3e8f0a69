"""Metric oracles for regression and classification scoring."""

import numpy as np
import pytest

from kom.risk.metrics import classification_metrics, regression_metrics, roc_auc_binary


def test_regression_perfect_fit():
    m = regression_metrics([1, 2, 3], [1, 2, 3])
    assert m["r2"] == 1.0 and m["mse"] == 0.0 and m["mae"] == 0.0 and m["pearson_r"] == 1.0


def test_regression_mean_prediction_r2_zero():
    y = [0.0, 1.0, 2.0, 3.0]
    m = regression_metrics(y, [1.5] * 4)
    assert m["r2"] == pytest.approx(0.0, abs=1e-12)


def test_regression_hand_fixture():
    # y = [0,1,2,3], yhat = [0.5,1.5,1.5,3.0]: residuals (-.5,-.5,.5,0)
    m = regression_metrics([0, 1, 2, 3], [0.5, 1.5, 1.5, 3.0])
    assert m["mse"] == pytest.approx(0.1875, abs=1e-9)
    assert m["mae"] == pytest.approx(0.375, abs=1e-9)
    assert m["r2"] == pytest.approx(0.85, abs=1e-9)
    # direct formula evaluation for r
    y = np.array([0, 1, 2, 3.0])
    p = np.array([0.5, 1.5, 1.5, 3.0])
    r = np.mean((y - y.mean()) * (p - p.mean())) / (y.std() * p.std())
    assert m["pearson_r"] == pytest.approx(float(r), abs=1e-12)


def test_regression_constant_truth_flagged():
    m = regression_metrics([2, 2, 2], [1, 2, 3])
    assert m["r2"] is None and m["pearson_r"] is None
    assert any("R2 undefined" in f for f in m["flags"])


def test_classification_perfect():
    probs = np.eye(3)[[0, 1, 2, 0]]
    m = classification_metrics([0, 1, 2, 0], [0, 1, 2, 0], probs)
    assert m["accuracy"] == 1.0
    assert m["weighted_f1"] == 1.0
    assert m["macro_auc"] == 1.0


def test_classification_hand_confusion_fixture():
    # y=[0,0,1,1], all predicted 0
    probs = np.array([[0.9, 0.1], [0.8, 0.2], [0.7, 0.3], [0.6, 0.4]])
    m = classification_metrics([0, 0, 1, 1], [0, 0, 0, 0], probs)
    assert m["accuracy"] == pytest.approx(0.5, abs=1e-12)
    assert m["weighted_precision"] == pytest.approx(0.25, abs=1e-12)
    assert m["weighted_f1"] == pytest.approx(1.0 / 3.0, abs=1e-9)
    cm = m["confusion_matrix"]
    assert cm.tolist() == [[2, 0], [2, 0]]
    assert cm.sum() == 4 and np.trace(cm) / cm.sum() == m["accuracy"]


def test_classification_confusion_rows_are_class_counts():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 3, 60)
    y_pred = rng.integers(0, 3, 60)
    m = classification_metrics(y, y_pred, None, n_classes=3)
    for c in range(3):
        assert m["confusion_matrix"][c].sum() == int((y == c).sum())


def test_macro_auc_random_scores_near_half():
    rng = np.random.default_rng(42)
    n = 10_000
    y = rng.integers(0, 2, n)
    p1 = rng.uniform(0, 1, n)
    probs = np.column_stack([1 - p1, p1])
    m = classification_metrics(y, (p1 > 0.5).astype(int), probs)
    assert m["macro_auc"] == pytest.approx(0.5, abs=0.02)


def test_auc_excluded_for_absent_class():
    probs = np.full((4, 3), 1 / 3)
    m = classification_metrics([0, 0, 1, 1], [0, 0, 1, 1], probs, n_classes=3)
    assert 2 in m["auc_excluded"]
    assert m["per_class_auc"][2] is None


def test_roc_auc_matches_sklearn():
    from sklearn.metrics import roc_auc_score

    rng = np.random.default_rng(5)
    for _ in range(20):
        y = rng.integers(0, 2, 50)
        if y.sum() in (0, 50):
            continue
        scores = np.round(rng.uniform(0, 1, 50), 2)  # force ties
        assert roc_auc_binary(y, scores) == pytest.approx(roc_auc_score(y, scores), abs=1e-12)


def test_probs_must_lie_on_simplex():
    with pytest.raises(ValueError):
        classification_metrics([0, 1], [0, 1], np.array([[0.9, 0.2], [0.5, 0.5]]))
