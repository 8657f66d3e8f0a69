"""Per-feature attribution with local accuracy guarantees.

Three routes:

- closed form for linear models,
- an exact interventional explainer for sklearn decision-tree ensembles,
- seeded permutation sampling for everything else.

All three satisfy ``base_value + sum(contributions) == prediction`` up to
floating point, because each decomposes ``f(x) - f(z)`` exactly per
background row ``z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np


@dataclass
class ShapAttribution:
    base_value: float
    contributions: dict[str, float]
    prediction: float
    method: str
    tolerance: float

    def local_accuracy_gap(self) -> float:
        return abs(self.base_value + sum(self.contributions.values()) - self.prediction)

    def check(self) -> None:
        gap = self.local_accuracy_gap()
        if gap > self.tolerance:
            raise AssertionError(f"local accuracy violated: gap {gap} > {self.tolerance}")

    def to_dict(self) -> dict:
        return {
            "base_value": self.base_value,
            "contributions": self.contributions,
            "prediction": self.prediction,
            "method": self.method,
            "tolerance": self.tolerance,
        }


def _named(values: np.ndarray, names: Optional[Sequence[str]]) -> dict[str, float]:
    if names is None:
        names = [f"x{i}" for i in range(len(values))]
    return {str(n): float(v) for n, v in zip(names, values)}


def linear_shap(
    weights: Sequence[float],
    intercept: float,
    x: Sequence[float],
    background: np.ndarray,
    feature_names: Optional[Sequence[str]] = None,
) -> ShapAttribution:
    """Exact attribution for f(x) = w.x + b: phi_i = w_i (x_i - mean_bg_i)."""
    w = np.asarray(weights, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    background = np.atleast_2d(np.asarray(background, dtype=np.float64))
    if background.shape[1] != len(x) or len(w) != len(x):
        raise ValueError("feature dimension mismatch")
    mean_bg = background.mean(axis=0)
    phi = w * (x - mean_bg)
    base = float(w @ mean_bg + intercept)
    return ShapAttribution(
        base_value=base,
        contributions=_named(phi, feature_names),
        prediction=float(w @ x + intercept),
        method="linear-exact",
        tolerance=1e-9,
    )


@lru_cache(maxsize=4096)
def _pair_weight(a: int, b: int) -> float:
    """a! b! / (a + b + 1)!"""
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 1)


def _tree_arrays(tree):
    t = tree.tree_
    return t.children_left, t.children_right, t.feature, t.threshold, t.value


def _leaf_value_fn(kind: str, class_index: int) -> Callable:
    if kind == "regression":
        def get(value_row):
            return float(value_row[0][0])
    else:
        def get(value_row):
            counts = value_row[0]
            total = counts.sum()
            return float(counts[class_index] / total) if total > 0 else 0.0
    return get


def _walk_tree(tree, x: np.ndarray, z: np.ndarray, phi: np.ndarray, scale: float, leaf_value) -> None:
    left, right, feature, threshold, value = _tree_arrays(tree)

    stack: list[tuple[int, dict]] = [(0, {})]
    while stack:
        node, flags = stack.pop()
        f = feature[node]
        if f < 0:
            a_set = [k for k, (xo, zo) in flags.items() if xo and not zo]
            b_set = [k for k, (xo, zo) in flags.items() if zo and not xo]
            a, b = len(a_set), len(b_set)
            if a == 0 and b == 0:
                continue
            v = leaf_value(value[node]) * scale
            for k in a_set:
                phi[k] += v * _pair_weight(a - 1, b)
            for k in b_set:
                phi[k] -= v * _pair_weight(a, b - 1)
            continue
        x_left = bool(x[f] <= threshold[node])
        z_left = bool(z[f] <= threshold[node])
        for child, going_left in ((left[node], True), (right[node], False)):
            prev = flags.get(f, (True, True))
            new_x = prev[0] and (x_left == going_left)
            new_z = prev[1] and (z_left == going_left)
            if not new_x and not new_z:
                continue
            new_flags = dict(flags)
            new_flags[f] = (new_x, new_z)
            stack.append((child, new_flags))


def _collect_trees(model) -> tuple[list, float, str, Optional[int]]:
    """Trees, per-tree scale, task kind, and optional class index for a model."""
    from sklearn.ensemble import (
        GradientBoostingRegressor,
        RandomForestClassifier,
        RandomForestRegressor,
    )
    from sklearn.tree import DecisionTreeClassifier, DecisionTreeRegressor

    if isinstance(model, RandomForestRegressor):
        return list(model.estimators_), 1.0 / len(model.estimators_), "regression", None
    if isinstance(model, GradientBoostingRegressor):
        trees = [t[0] for t in model.estimators_]
        return trees, float(model.learning_rate), "regression", None
    if isinstance(model, DecisionTreeRegressor):
        return [model], 1.0, "regression", None
    if isinstance(model, RandomForestClassifier):
        return list(model.estimators_), 1.0 / len(model.estimators_), "classification", None
    if isinstance(model, DecisionTreeClassifier):
        return [model], 1.0, "classification", None
    raise TypeError(f"exact tree explainer does not support {type(model).__name__}")


def tree_shap(
    model,
    x: Sequence[float],
    background: np.ndarray,
    feature_names: Optional[Sequence[str]] = None,
    class_index: Optional[int] = None,
) -> ShapAttribution:
    """Exact interventional Shapley values for sklearn tree ensembles.

    For regressors the explained output is ``predict``; for random-forest
    classifiers it is ``predict_proba`` of ``class_index`` (default: the
    predicted class).
    """
    x = np.asarray(x, dtype=np.float64)
    background = np.atleast_2d(np.asarray(background, dtype=np.float64))
    if background.shape[0] == 0:
        raise ValueError("background must be non-empty")
    if background.shape[1] != len(x):
        raise ValueError("feature dimension mismatch")

    trees, scale, kind, _ = _collect_trees(model)
    if kind == "classification":
        classes = [int(c) for c in model.classes_]
        if class_index is None:
            position = int(np.argmax(model.predict_proba(x[None])[0]))
        elif class_index in classes:
            position = classes.index(int(class_index))
        else:
            raise ValueError(f"class {class_index} unknown to the model")
        leaf_value = _leaf_value_fn("classification", position)
        predict = lambda arr: model.predict_proba(arr)[:, position]
    else:
        leaf_value = _leaf_value_fn("regression", 0)
        predict = model.predict

    phi = np.zeros(len(x), dtype=np.float64)
    for z in background:
        for tree in trees:
            _walk_tree(tree, x, z, phi, scale, leaf_value)
    phi /= background.shape[0]

    base = float(np.mean(predict(background)))
    prediction = float(predict(x[None])[0])
    return ShapAttribution(
        base_value=base,
        contributions=_named(phi, feature_names),
        prediction=prediction,
        method="tree-exact-interventional",
        tolerance=1e-6,
    )


def permutation_shap(
    predict_fn: Callable[[np.ndarray], np.ndarray],
    x: Sequence[float],
    background: np.ndarray,
    permutations_per_background: int = 4,
    seed: int = 0,
    feature_names: Optional[Sequence[str]] = None,
) -> ShapAttribution:
    """Sampling fallback: telescoping marginal contributions along permutations.

    Every background row gets ``permutations_per_background`` passes (total
    sample count = rows x passes). Each pass telescopes ``f(x) - f(z)``
    exactly, so summed contributions equal ``prediction - base_value`` up to
    rounding; the permutation count only controls per-feature variance.
    """
    x = np.asarray(x, dtype=np.float64)
    background = np.atleast_2d(np.asarray(background, dtype=np.float64))
    if background.shape[0] == 0:
        raise ValueError("background must be non-empty")
    if background.shape[1] != len(x):
        raise ValueError("feature dimension mismatch")
    rng = np.random.default_rng(seed)
    n = len(x)
    phi = np.zeros(n, dtype=np.float64)

    for z in background:
        for _ in range(permutations_per_background):
            order = rng.permutation(n)
            rows = np.empty((n + 1, n), dtype=np.float64)
            rows[0] = z
            current = z.copy()
            for step, idx in enumerate(order, start=1):
                current[idx] = x[idx]
                rows[step] = current
            values = np.asarray(predict_fn(rows), dtype=np.float64)
            phi[order] += np.diff(values)
    phi /= background.shape[0] * permutations_per_background

    base = float(np.mean(predict_fn(background)))
    prediction = float(predict_fn(x[None])[0])
    return ShapAttribution(
        base_value=base,
        contributions=_named(phi, feature_names),
        prediction=prediction,
        method=f"permutation-sampling(n={background.shape[0] * permutations_per_background})",
        tolerance=1e-6,
    )


def shap_attribution(
    model,
    x: Sequence[float],
    background: np.ndarray,
    feature_names: Optional[Sequence[str]] = None,
    class_index: Optional[int] = None,
    seed: int = 0,
) -> ShapAttribution:
    """Route a fitted estimator to the strongest applicable explainer."""
    from sklearn.ensemble import (
        GradientBoostingRegressor,
        RandomForestClassifier,
        RandomForestRegressor,
    )
    from sklearn.tree import DecisionTreeClassifier, DecisionTreeRegressor

    background = np.atleast_2d(np.asarray(background, dtype=np.float64))
    x_arr = np.asarray(x, dtype=np.float64)
    if background.shape[1] != len(x_arr):
        raise ValueError("feature dimension mismatch")

    coef = getattr(model, "coef_", None)
    if coef is not None and np.asarray(coef).ndim == 1:
        return linear_shap(
            np.asarray(coef, dtype=np.float64),
            float(getattr(model, "intercept_", 0.0)),
            x_arr,
            background,
            feature_names,
        )
    if isinstance(
        model,
        (RandomForestRegressor, GradientBoostingRegressor, DecisionTreeRegressor,
         RandomForestClassifier, DecisionTreeClassifier),
    ):
        return tree_shap(model, x_arr, background, feature_names, class_index=class_index)

    if hasattr(model, "predict_proba"):
        if class_index is None:
            class_index = int(np.argmax(model.predict_proba(x_arr[None])[0]))
        classes = [int(c) for c in model.classes_]
        position = classes.index(class_index)
        predict_fn = lambda arr: model.predict_proba(arr)[:, position]
    else:
        predict_fn = model.predict
    return permutation_shap(predict_fn, x_arr, background, seed=seed, feature_names=feature_names)
