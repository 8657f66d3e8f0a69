"""Z-score normalization, the rubric schema, and approval rates."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kom.evaluation.scores import (
    RUBRIC_DIMENSIONS,
    RubricScore,
    aggregate_rubric,
    approval_rate,
    zscore_normalize_rows,
)


def test_zscore_hand_row():
    z, flagged = zscore_normalize_rows(np.array([[1.0, 2.0, 3.0]]))
    np.testing.assert_allclose(z[0], [-1.2247448714, 0.0, 1.2247448714], atol=1e-9)
    assert flagged == []


def test_zscore_constant_row_flagged_zero():
    z, flagged = zscore_normalize_rows(np.array([[4.0, 4.0, 4.0], [1.0, 2.0, 3.0]]))
    np.testing.assert_array_equal(z[0], [0.0, 0.0, 0.0])
    assert flagged == [0]


def test_zscore_rows_centered_unit():
    rng = np.random.default_rng(0)
    s = rng.uniform(0, 5, (6, 9))
    z, flagged = zscore_normalize_rows(s)
    assert flagged == []
    np.testing.assert_allclose(z.mean(axis=1), 0.0, atol=1e-9)
    np.testing.assert_allclose(z.std(axis=1, ddof=0), 1.0, atol=1e-9)


def test_zscore_single_column_rejected():
    with pytest.raises(ValueError):
        zscore_normalize_rows(np.array([[1.0], [2.0]]))


@settings(max_examples=50)
@given(st.lists(st.floats(-100, 100), min_size=2, max_size=10))
def test_zscore_preserves_row_argmax(row):
    # the per-row transform is monotone affine, so the original argmax must
    # attain the row's z maximum (up to float rounding of near-ties)
    matrix = np.array([row])
    z, flagged = zscore_normalize_rows(matrix)
    if flagged:
        return
    original_argmax = int(np.argmax(matrix[0]))
    assert z[0][original_argmax] >= z[0].max() - 1e-12 * max(1.0, abs(z[0].max()))


def _score(plan, rater, base=3):
    return RubricScore(
        plan_id=plan, rater_id=rater, scores={d: base for d in RUBRIC_DIMENSIONS}
    )


def test_rubric_validation():
    with pytest.raises(ValueError):
        RubricScore(plan_id="p", rater_id="r", scores={d: 3 for d in RUBRIC_DIMENSIONS[:-1]})
    with pytest.raises(ValueError):
        RubricScore(plan_id="p", rater_id="r", scores={**{d: 3 for d in RUBRIC_DIMENSIONS}, "safety": 6})
    with pytest.raises(ValueError):
        RubricScore(plan_id="p", rater_id="r", scores={**{d: 3 for d in RUBRIC_DIMENSIONS}, "safety": 2.5})


def test_rubric_aggregation_composite_scale():
    rows = [_score("p1", "r1", 4), _score("p1", "r2", 5)]
    agg = aggregate_rubric(rows)
    assert agg["per_dimension"]["safety"] == pytest.approx(4.5)
    assert agg["composite"] == pytest.approx(7 * 4.5)
    assert agg["n_raters"] == 2


def test_rubric_roundtrip():
    row = _score("p2", "r9", 2)
    assert RubricScore.from_dict(row.to_dict()) == row


def test_approval_rate_all_match():
    assert approval_rate(["Mild"] * 5, ["Mild"] * 5) == 1.0


def test_approval_rate_45_of_50():
    predicted = ["Mild"] * 45 + ["Severe"] * 5
    reference = ["Mild"] * 45 + ["Moderate"] * 5
    assert approval_rate(predicted, reference) == pytest.approx(0.90, abs=1e-12)


def test_approval_rate_errors():
    with pytest.raises(ValueError):
        approval_rate([], [])
    with pytest.raises(ValueError):
        approval_rate([1, 2], [1])
