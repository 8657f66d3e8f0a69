"""Cross-validated model suites, Monte Carlo evaluation, and model selection."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from kom.common import derive_seed, seeded_rng
from kom.risk.families import (
    CLASSIFICATION_FAMILIES,
    REGRESSION_FAMILIES,
    default_hyperparameters,
    feature_importances,
    make_estimator,
)
from kom.risk.metrics import classification_metrics, regression_metrics
from kom.risk.preprocess import PreprocessSpec, preprocess, stratified_split, transform


@dataclass
class TaskSpec:
    """One prediction task: a target column and whether it is regression."""

    task_id: str
    kind: str  # "regression" | "classification"
    target: str

    def __post_init__(self):
        if self.kind not in ("regression", "classification"):
            raise ValueError(f"unknown task kind: {self.kind}")


@dataclass
class ModelCard:
    task_id: str
    kind: str
    family: str
    hyperparameters: dict
    cv_metrics: dict  # metric -> {"mean": float, "sd": float}
    selection_rank: int
    seed: int
    data_hash: str
    cohort_mean: Optional[float] = None
    estimator: object = None
    preprocess_spec: PreprocessSpec = None
    feature_names: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "kind": self.kind,
            "family": self.family,
            "hyperparameters": {k: list(v) if isinstance(v, tuple) else v for k, v in self.hyperparameters.items()},
            "cv_metrics": self.cv_metrics,
            "selection_rank": self.selection_rank,
            "seed": self.seed,
            "data_hash": self.data_hash,
            "cohort_mean": self.cohort_mean,
        }


def table_hash(table: pd.DataFrame) -> str:
    h = hashlib.sha256()
    h.update(",".join(map(str, table.columns)).encode())
    h.update(pd.util.hash_pandas_object(table, index=False).values.tobytes())
    return h.hexdigest()


def _feature_frame(table: pd.DataFrame, spec_map: dict, target: str) -> pd.DataFrame:
    feature_cols = [c for c in table.columns if c in spec_map]
    return table[feature_cols]


def _kfold_indices(n: int, folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    order = rng.permutation(n)
    return [np.sort(order[f::folds]) for f in range(folds)]


def _stratified_kfold_indices(
    labels: np.ndarray, folds: int, rng: np.random.Generator
) -> list[np.ndarray]:
    assignment = np.zeros(len(labels), dtype=int)
    for cls in np.unique(labels):
        idx = np.nonzero(labels == cls)[0]
        if len(idx) < folds:
            raise ValueError(f"class {cls} has fewer rows than folds")
        idx = rng.permutation(idx)
        for pos, i in enumerate(idx):
            assignment[i] = pos % folds
    return [np.nonzero(assignment == f)[0] for f in range(folds)]


def _fit_eval_once(
    family: str,
    task: TaskSpec,
    train: pd.DataFrame,
    val: pd.DataFrame,
    spec_map: dict,
    seed: int,
    overrides: Optional[dict],
) -> dict:
    """Fit one family on train rows and score it on validation rows."""
    features_train = _feature_frame(train, spec_map, task.target)
    features_val = _feature_frame(val, spec_map, task.target)
    design_train, fitted = preprocess(features_train, PreprocessSpec(), spec_map=spec_map)
    design_val = transform(features_val, fitted, spec_map=spec_map)

    x_train = design_train.to_numpy(dtype=np.float64)
    x_val = design_val.to_numpy(dtype=np.float64)
    estimator = make_estimator(family, task.kind, seed, overrides)

    if task.kind == "regression":
        y_train = train[task.target].to_numpy(dtype=np.float64)
        y_val = val[task.target].to_numpy(dtype=np.float64)
        estimator.fit(x_train, y_train)
        row = regression_metrics(y_val, estimator.predict(x_val))
    else:
        y_train = train[task.target].to_numpy(dtype=int)
        y_val = val[task.target].to_numpy(dtype=int)
        estimator.fit(x_train, y_train)
        classes = np.asarray(estimator.classes_)
        raw = estimator.predict_proba(x_val)
        n_classes = int(max(y_train.max(), y_val.max())) + 1
        probs = np.zeros((len(y_val), n_classes))
        for j, cls in enumerate(classes):
            probs[:, int(cls)] = raw[:, j]
        row_sums = probs.sum(axis=1, keepdims=True)
        probs = probs / np.where(row_sums == 0, 1.0, row_sums)
        y_pred = probs.argmax(axis=1)
        m = classification_metrics(y_val, y_pred, probs, n_classes=n_classes)
        row = {
            "accuracy": m["accuracy"],
            "weighted_precision": m["weighted_precision"],
            "weighted_recall": m["weighted_recall"],
            "weighted_f1": m["weighted_f1"],
            "macro_auc": m["macro_auc"],
        }
    importances = feature_importances(estimator, x_train.shape[1])
    if importances is not None:
        row["feature_importances"] = dict(zip(design_train.columns, importances.tolist()))
    return row


def _run_suite(
    task: TaskSpec,
    table: pd.DataFrame,
    seed: int,
    families: Sequence[str],
    spec_map: dict,
    folds: int = 5,
    overrides: Optional[dict] = None,
) -> dict:
    rng = seeded_rng(derive_seed(seed, task.task_id, "folds"))
    if task.kind == "regression":
        target = table[task.target].to_numpy(dtype=np.float64)
        if np.ptp(target) == 0:
            raise ValueError(f"degenerate constant target {task.target!r}; suite aborted")
        fold_indices = _kfold_indices(len(table), folds, rng)
    else:
        labels = table[task.target].to_numpy(dtype=int)
        fold_indices = _stratified_kfold_indices(labels, folds, rng)

    results: dict[str, dict] = {}
    for family in families:
        fold_rows = []
        for fold_id, val_idx in enumerate(fold_indices):
            mask = np.zeros(len(table), dtype=bool)
            mask[val_idx] = True
            row = _fit_eval_once(
                family,
                task,
                table.iloc[~mask],
                table.iloc[mask],
                spec_map,
                derive_seed(seed, task.task_id, family, fold_id),
                (overrides or {}).get(family),
            )
            row["fold"] = fold_id
            fold_rows.append(row)
        results[family] = {
            "fold_rows": fold_rows,
            "summary": summarize_rows(fold_rows),
            "hyperparameters": {
                **default_hyperparameters(family, task.kind),
                **((overrides or {}).get(family) or {}),
            },
        }
    return results


def summarize_rows(rows: list[dict]) -> dict:
    """Mean and population sd per numeric metric across rows (None-aware)."""
    summary: dict[str, dict] = {}
    keys = {k for row in rows for k in row if k not in ("fold", "iteration", "flags", "feature_importances")}
    for key in sorted(keys):
        vals = [row[key] for row in rows if isinstance(row.get(key), (int, float))]
        if vals:
            summary[key] = {
                "mean": float(np.mean(vals)),
                "sd": float(np.std(vals)),
                "n": len(vals),
            }
    return summary


def run_regression_suite(
    task: TaskSpec,
    table: pd.DataFrame,
    seed: int = 0,
    families: Optional[Sequence[str]] = None,
    spec_map: Optional[dict] = None,
    overrides: Optional[dict] = None,
) -> dict:
    """Five-fold CV metrics for each regression family on one task."""
    from kom.risk.features import column_spec

    if task.kind != "regression":
        raise ValueError("task is not a regression task")
    return _run_suite(
        task,
        table,
        seed,
        families or REGRESSION_FAMILIES,
        spec_map or column_spec(),
        overrides=overrides,
    )


def run_classification_suite(
    task: TaskSpec,
    table: pd.DataFrame,
    seed: int = 0,
    families: Optional[Sequence[str]] = None,
    spec_map: Optional[dict] = None,
    overrides: Optional[dict] = None,
) -> dict:
    """Five-fold stratified CV metrics for each classification family."""
    from kom.risk.features import column_spec

    if task.kind != "classification":
        raise ValueError("task is not a classification task")
    return _run_suite(
        task,
        table,
        seed,
        families or CLASSIFICATION_FAMILIES,
        spec_map or column_spec(),
        overrides=overrides,
    )


def monte_carlo_cv(
    task: TaskSpec,
    table: pd.DataFrame,
    iterations: int = 100,
    seed: int = 0,
    families: Optional[Sequence[str]] = None,
    train_frac: float = 0.7,
    spec_map: Optional[dict] = None,
    overrides: Optional[dict] = None,
) -> dict:
    """Repeated random-split evaluation: ``iterations`` rows per family.

    Every iteration draws a fresh stratified (classification) or random
    (regression) 70/30 split seeded from the master seed plus the iteration
    index. Per-iteration failures are recorded and the run continues.
    """
    from kom.risk.features import column_spec

    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    spec_map = spec_map or column_spec()
    families = list(families or (REGRESSION_FAMILIES if task.kind == "regression" else CLASSIFICATION_FAMILIES))

    rows: dict[str, list[dict]] = {f: [] for f in families}
    failures: list[dict] = []
    for it in range(iterations):
        split_seed = derive_seed(seed, task.task_id, "mc-split", it)
        if task.kind == "classification":
            train, val = stratified_split(table, task.target, train_frac, seed=split_seed)
        else:
            rng = seeded_rng(split_seed)
            order = rng.permutation(len(table))
            n_train = max(1, min(len(table) - 1, int(round(train_frac * len(table)))))
            train = table.iloc[np.sort(order[:n_train])]
            val = table.iloc[np.sort(order[n_train:])]
        for family in families:
            try:
                row = _fit_eval_once(
                    family, task, train, val, spec_map, derive_seed(seed, family, it),
                    (overrides or {}).get(family),
                )
                row.pop("feature_importances", None)
                row["iteration"] = it
                rows[family].append(row)
            except Exception as exc:  # recorded, run continues
                failures.append({"family": family, "iteration": it, "error": str(exc)})

    return {
        "rows": rows,
        "summary": {f: summarize_rows(r) for f, r in rows.items()},
        "failures": failures,
        "failure_count": len(failures),
        "iterations": iterations,
    }


def _selection_key(kind: str, family: str, summary: dict):
    if kind == "classification":
        acc = summary.get("accuracy", {}).get("mean", float("-inf"))
        auc = summary.get("macro_auc", {}).get("mean", float("-inf"))
        return (-acc, -auc, family)
    r2 = summary.get("r2", {}).get("mean", float("-inf"))
    mae = summary.get("mae", {}).get("mean", float("inf"))
    return (-r2, mae, family)


def select_best_model(
    suite_results: dict,
    task: TaskSpec,
    seed: int = 0,
    data_hash: str = "",
) -> ModelCard:
    """Rank families and return a card for the winner.

    Classification ranks by mean accuracy, then macro AUC, then family id;
    regression by mean R², then lower MAE, then family id. The ordering is a
    pure function of the summaries, so candidate order never matters.
    """
    if not suite_results:
        raise ValueError("no candidate families")
    ranked = sorted(
        suite_results.items(), key=lambda kv: _selection_key(task.kind, kv[0], kv[1]["summary"])
    )
    family, payload = ranked[0]
    return ModelCard(
        task_id=task.task_id,
        kind=task.kind,
        family=family,
        hyperparameters=payload.get("hyperparameters", default_hyperparameters(family, task.kind)),
        cv_metrics=payload["summary"],
        selection_rank=1,
        seed=seed,
        data_hash=data_hash,
    )


def fit_final_model(
    card: ModelCard,
    task: TaskSpec,
    table: pd.DataFrame,
    spec_map: Optional[dict] = None,
) -> ModelCard:
    """Fit the selected family on the full table and attach it to the card."""
    from kom.risk.features import column_spec

    spec_map = spec_map or column_spec()
    features = _feature_frame(table, spec_map, task.target)
    design, fitted = preprocess(features, PreprocessSpec(), spec_map=spec_map)
    x = design.to_numpy(dtype=np.float64)
    overrides = {
        k: tuple(v) if isinstance(v, list) else v for k, v in card.hyperparameters.items()
    }
    estimator = make_estimator(card.family, task.kind, derive_seed(card.seed, task.task_id, "final"), overrides)
    if task.kind == "regression":
        y = table[task.target].to_numpy(dtype=np.float64)
    else:
        y = table[task.target].to_numpy(dtype=int)
    estimator.fit(x, y)
    card.estimator = estimator
    card.preprocess_spec = fitted
    card.feature_names = list(design.columns)
    card.cohort_mean = float(np.mean(y))
    card.data_hash = card.data_hash or table_hash(table)
    return card
