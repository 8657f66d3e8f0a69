"""Tabular preprocessing: z-scores, one-hot, balancing, stratified splits."""

import numpy as np
import pandas as pd
import pytest

from kom.risk.preprocess import PreprocessSpec, balance_classes, preprocess, stratified_split, transform

SPEC_MAP = {
    "x": {"name": "x", "kind": "numeric"},
    "sex": {"name": "sex", "kind": "categorical", "levels": ["F", "M"]},
}


def test_zscore_hand_fixture():
    # [1, 2, 3] with population sigma sqrt(2/3)
    table = pd.DataFrame({"x": [1.0, 2.0, 3.0]})
    design, spec = preprocess(table, spec_map=SPEC_MAP)
    expected = np.array([-1.2247448714, 0.0, 1.2247448714])
    np.testing.assert_allclose(design["x"].to_numpy(), expected, atol=1e-9)
    assert spec.stats["x"]["mean"] == pytest.approx(2.0)
    assert spec.stats["x"]["std"] == pytest.approx(np.sqrt(2.0 / 3.0), abs=1e-12)


def test_incomplete_rows_dropped_with_count():
    table = pd.DataFrame({"x": [1.0, None, 3.0]})
    design, spec = preprocess(table, spec_map=SPEC_MAP)
    assert len(design) == 2
    assert spec.n_dropped == 1


def test_one_hot_rows_sum_to_one():
    table = pd.DataFrame({"sex": ["M", "F", "M"]})
    design, spec = preprocess(table, spec_map=SPEC_MAP)
    assert list(design.columns) == ["sex=F", "sex=M"]
    np.testing.assert_allclose(design.to_numpy().sum(axis=1), 1.0)


def test_transform_reuses_training_stats():
    train = pd.DataFrame({"x": [0.0, 10.0]})
    new = pd.DataFrame({"x": [5.0]})
    design, spec = preprocess(train, spec_map=SPEC_MAP)
    out = transform(new, spec, spec_map=SPEC_MAP)
    assert out["x"].iloc[0] == pytest.approx((5.0 - 5.0) / 5.0)
    out2 = transform(pd.DataFrame({"x": [15.0]}), spec, spec_map=SPEC_MAP)
    assert out2["x"].iloc[0] == pytest.approx(2.0)


def test_transform_unseen_level_errors():
    train = pd.DataFrame({"sex": ["M", "F"]})
    design, spec = preprocess(train, spec_map=SPEC_MAP)
    bad_map = {"sex": {"name": "sex", "kind": "categorical", "levels": ["F", "M", "X"]}}
    with pytest.raises(ValueError, match="unseen"):
        transform(pd.DataFrame({"sex": ["X"]}), spec, spec_map=bad_map)


def test_standardized_columns_are_centered_unit():
    rng = np.random.default_rng(0)
    table = pd.DataFrame({"x": rng.uniform(5, 50, 200)})
    design, _ = preprocess(table, spec_map=SPEC_MAP)
    col = design["x"].to_numpy()
    assert abs(col.mean()) < 1e-9
    assert abs(col.std(ddof=0) - 1.0) < 1e-9


def test_balance_classes_exact_counts():
    rng = np.random.default_rng(0)
    sizes = {0: 1500, 1: 800, 2: 1000, 3: 1200, 4: 900}
    rows = []
    for cls, n in sizes.items():
        for _ in range(n):
            rows.append({"kl": cls, "x": float(rng.normal())})
    table = pd.DataFrame(rows)
    balanced = balance_classes(table, "kl", n_per_class=1000, seed=3)
    counts = balanced["kl"].value_counts()
    assert all(counts[cls] == 1000 for cls in sizes)


def test_balance_classes_preserves_existing_when_exact():
    table = pd.DataFrame({"kl": [0] * 4 + [1] * 4, "x": range(8)})
    balanced = balance_classes(table, "kl", n_per_class=4, seed=0)
    assert sorted(balanced["x"]) == list(range(8))


def test_balance_missing_class_named():
    table = pd.DataFrame({"kl": [0, 0, 1], "x": [1.0, 2.0, 3.0]})
    bad = table[table["kl"] != 1]
    # a class the caller expects must exist in the data it passes
    balanced = balance_classes(bad, "kl", n_per_class=2, seed=0)
    assert set(balanced["kl"]) == {0}


def test_stratified_split_proportions():
    table = pd.DataFrame({"y": [0] * 50 + [1] * 50, "x": range(100)})
    train, val = stratified_split(table, "y", train_frac=0.7, seed=1)
    assert (train["y"] == 0).sum() == 35 and (train["y"] == 1).sum() == 35
    assert (val["y"] == 0).sum() == 15 and (val["y"] == 1).sum() == 15
    assert set(train["x"]).isdisjoint(set(val["x"]))
    assert len(train) + len(val) == 100


def test_stratified_split_deterministic():
    table = pd.DataFrame({"y": [0] * 20 + [1] * 20, "x": range(40)})
    a_train, a_val = stratified_split(table, "y", seed=9)
    b_train, b_val = stratified_split(table, "y", seed=9)
    assert list(a_train["x"]) == list(b_train["x"])
    assert list(a_val["x"]) == list(b_val["x"])


def test_stratified_split_rejects_extremes():
    table = pd.DataFrame({"y": [0, 0, 1, 1], "x": range(4)})
    with pytest.raises(ValueError):
        stratified_split(table, "y", train_frac=1.0)
    with pytest.raises(ValueError):
        stratified_split(pd.DataFrame({"y": [0, 1, 1], "x": range(3)}), "y")
