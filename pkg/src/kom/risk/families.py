"""Model family registry for the regression and classification suites."""

from __future__ import annotations

from typing import Optional

REGRESSION_FAMILIES = (
    "elastic-net",
    "gbt-hist",
    "gbt-level",
    "gradient-boosting",
    "random-forest",
    "svr",
)

CLASSIFICATION_FAMILIES = (
    "adaptive-boosting",
    "gbt-hist",
    "gbt-level",
    "gradient-boosting",
    "knn",
    "mlp",
    "random-forest",
    "svm",
)

# Fixed, seeded defaults; every value lands in the emitted model card.
_REGRESSION_DEFAULTS: dict[str, dict] = {
    "gbt-hist": {"max_iter": 100, "max_depth": None, "learning_rate": 0.1},
    "gbt-level": {"n_estimators": 100, "max_depth": 6, "learning_rate": 0.1, "subsample": 0.9},
    "random-forest": {"n_estimators": 100},
    "gradient-boosting": {"n_estimators": 100, "max_depth": 3, "learning_rate": 0.1},
    "svr": {"C": 1.0, "kernel": "rbf"},
    "elastic-net": {"alpha": 0.1, "l1_ratio": 0.5},
}

_CLASSIFICATION_DEFAULTS: dict[str, dict] = {
    "gbt-hist": {"max_iter": 100, "max_depth": None, "learning_rate": 0.1},
    "gbt-level": {"n_estimators": 100, "max_depth": 6, "learning_rate": 0.1, "subsample": 0.9},
    "random-forest": {"n_estimators": 100},
    "gradient-boosting": {"n_estimators": 100, "max_depth": 3, "learning_rate": 0.1},
    "adaptive-boosting": {"n_estimators": 100, "learning_rate": 1.0},
    "svm": {"C": 1.0, "kernel": "rbf"},
    "knn": {"n_neighbors": 5},
    "mlp": {"hidden_layer_sizes": (32,), "max_iter": 500},
}


def default_hyperparameters(family: str, kind: str) -> dict:
    table = _REGRESSION_DEFAULTS if kind == "regression" else _CLASSIFICATION_DEFAULTS
    if family not in table:
        raise ValueError(f"unknown {kind} family: {family}")
    return dict(table[family])


def make_estimator(family: str, kind: str, seed: int, overrides: Optional[dict] = None):
    """Instantiate one family with its defaults, a seed, and optional overrides."""
    params = default_hyperparameters(family, kind)
    if overrides:
        params.update(overrides)

    if kind == "regression":
        if family == "gbt-hist":
            from sklearn.ensemble import HistGradientBoostingRegressor

            return HistGradientBoostingRegressor(random_state=seed, **params)
        if family in ("gbt-level", "gradient-boosting"):
            from sklearn.ensemble import GradientBoostingRegressor

            return GradientBoostingRegressor(random_state=seed, **params)
        if family == "random-forest":
            from sklearn.ensemble import RandomForestRegressor

            return RandomForestRegressor(random_state=seed, **params)
        if family == "svr":
            from sklearn.svm import SVR

            return SVR(**params)
        if family == "elastic-net":
            if params.get("alpha", 0.0) == 0.0:
                # Zero total penalty is ordinary least squares; the coordinate
                # descent solver is unstable there.
                from sklearn.linear_model import LinearRegression

                return LinearRegression()
            from sklearn.linear_model import ElasticNet

            return ElasticNet(random_state=seed, **params)
        raise ValueError(f"unknown regression family: {family}")

    if kind == "classification":
        if family == "gbt-hist":
            from sklearn.ensemble import HistGradientBoostingClassifier

            return HistGradientBoostingClassifier(random_state=seed, **params)
        if family in ("gbt-level", "gradient-boosting"):
            from sklearn.ensemble import GradientBoostingClassifier

            return GradientBoostingClassifier(random_state=seed, **params)
        if family == "random-forest":
            from sklearn.ensemble import RandomForestClassifier

            return RandomForestClassifier(random_state=seed, **params)
        if family == "adaptive-boosting":
            from sklearn.ensemble import AdaBoostClassifier

            return AdaBoostClassifier(random_state=seed, **params)
        if family == "svm":
            from sklearn.svm import SVC

            return SVC(probability=True, random_state=seed, **params)
        if family == "knn":
            from sklearn.neighbors import KNeighborsClassifier

            return KNeighborsClassifier(**params)
        if family == "mlp":
            from sklearn.neural_network import MLPClassifier

            return MLPClassifier(random_state=seed, **params)
        raise ValueError(f"unknown classification family: {family}")

    raise ValueError(f"unknown task kind: {kind}")


def feature_importances(estimator, n_features: int):
    """Per-feature importances where the family defines them, else None."""
    import numpy as np

    if hasattr(estimator, "feature_importances_"):
        return np.asarray(estimator.feature_importances_, dtype=float)
    coef = getattr(estimator, "coef_", None)
    if coef is not None:
        coef = np.asarray(coef, dtype=float)
        if coef.ndim > 1:
            coef = np.abs(coef).mean(axis=0)
        return np.abs(coef)
    return None
