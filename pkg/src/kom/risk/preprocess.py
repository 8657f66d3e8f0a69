"""Tabular preprocessing: incomplete-case removal, one-hot encoding, z-scores."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from kom.common import seeded_rng
from kom.risk.features import column_spec


@dataclass
class PreprocessSpec:
    """Preprocessing policy plus, after fitting, the learned statistics.

    Standardization uses training-row means and population standard
    deviations; transforms of new rows always reuse the stored stats.
    """

    drop_incomplete: bool = True
    standardize: bool = True
    unknown_category: str = "error"  # or "ignore" (all-zero indicator row)
    stats: dict = field(default_factory=dict)  # column -> {"mean", "std"}
    categories: dict = field(default_factory=dict)  # column -> ordered levels
    columns: list = field(default_factory=list)  # design-matrix column order
    n_dropped: int = 0
    fitted: bool = False


def _validate_columns(df: pd.DataFrame, spec_map: dict) -> None:
    missing = [c for c in df.columns if c not in spec_map]
    if missing:
        raise ValueError(f"columns not covered by the column spec: {missing}")


def preprocess(
    table: pd.DataFrame,
    spec: Optional[PreprocessSpec] = None,
    spec_map: Optional[dict] = None,
) -> tuple[pd.DataFrame, PreprocessSpec]:
    """Fit the preprocessing on a feature table and return the design matrix.

    Incomplete rows are dropped (count recorded on the returned spec),
    categoricals are one-hot expanded, and numeric columns are standardized
    with population statistics.
    """
    spec = spec or PreprocessSpec()
    spec_map = spec_map or column_spec()
    _validate_columns(table, spec_map)

    df = table.copy()
    if spec.drop_incomplete:
        before = len(df)
        df = df.dropna()
        spec.n_dropped = before - len(df)
    if len(df) == 0:
        raise ValueError("no complete rows left after dropping incomplete cases")

    pieces: list[pd.DataFrame] = []
    spec.stats = {}
    spec.categories = {}
    for col in table.columns:
        kind = spec_map[col]["kind"]
        if kind == "categorical":
            levels = spec_map[col].get("levels") or sorted(df[col].astype(str).unique())
            spec.categories[col] = list(levels)
            seen = set(df[col].astype(str).unique()) - set(levels)
            if seen:
                raise ValueError(f"column {col}: values outside declared levels: {sorted(seen)}")
            onehot = pd.DataFrame(
                {f"{col}={lv}": (df[col].astype(str) == lv).astype(float) for lv in levels},
                index=df.index,
            )
            pieces.append(onehot)
        else:
            vals = df[col].astype(float)
            mean = float(vals.mean())
            std = float(vals.std(ddof=0))
            spec.stats[col] = {"mean": mean, "std": std}
            if spec.standardize and std > 0:
                vals = (vals - mean) / std
            elif spec.standardize:
                vals = vals - mean
            pieces.append(vals.to_frame(col))

    design = pd.concat(pieces, axis=1)
    spec.columns = list(design.columns)
    spec.fitted = True
    return design, spec


def transform(table: pd.DataFrame, spec: PreprocessSpec, spec_map: Optional[dict] = None) -> pd.DataFrame:
    """Apply a fitted spec to new rows without re-estimating anything."""
    if not spec.fitted:
        raise ValueError("spec has not been fitted")
    spec_map = spec_map or column_spec()
    df = table.copy()
    if spec.drop_incomplete:
        df = df.dropna()

    pieces: list[pd.DataFrame] = []
    for col in table.columns:
        kind = spec_map[col]["kind"]
        if kind == "categorical":
            levels = spec.categories[col]
            unseen = set(df[col].astype(str).unique()) - set(levels)
            if unseen and spec.unknown_category == "error":
                raise ValueError(f"column {col}: unseen categorical level(s) {sorted(unseen)}")
            onehot = pd.DataFrame(
                {f"{col}={lv}": (df[col].astype(str) == lv).astype(float) for lv in levels},
                index=df.index,
            )
            pieces.append(onehot)
        else:
            stats = spec.stats[col]
            vals = df[col].astype(float)
            if spec.standardize and stats["std"] > 0:
                vals = (vals - stats["mean"]) / stats["std"]
            elif spec.standardize:
                vals = vals - stats["mean"]
            pieces.append(vals.to_frame(col))
    design = pd.concat(pieces, axis=1)
    return design[spec.columns]


def balance_classes(
    table: pd.DataFrame, target: str, n_per_class: int = 1000, seed: int = 0
) -> pd.DataFrame:
    """Resample so every class of ``target`` has exactly ``n_per_class`` rows.

    Larger classes are downsampled without replacement, smaller ones upsampled
    with replacement. Raises if any expected class has no rows.
    """
    rng = seeded_rng(seed)
    groups = []
    counts = table[target].value_counts()
    for cls in sorted(counts.index.tolist()):
        rows = table[table[target] == cls]
        if len(rows) == 0:
            raise ValueError(f"class {cls!r} has no rows")
        if len(rows) >= n_per_class:
            idx = rng.choice(len(rows), size=n_per_class, replace=False)
        else:
            idx = rng.choice(len(rows), size=n_per_class, replace=True)
        groups.append(rows.iloc[np.sort(idx)])
    if not groups:
        raise ValueError("table is empty")
    return pd.concat(groups, axis=0).reset_index(drop=True)


def stratified_split(
    table: pd.DataFrame, target: str, train_frac: float = 0.7, seed: int = 0
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Disjoint, exhaustive train/validation split preserving class proportions.

    Each class contributes ``round(train_frac * n_class)`` training rows (so
    proportions hold within one row), and both sides must end up non-empty.
    """
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must be strictly between 0 and 1")
    rng = seeded_rng(seed)
    train_parts, val_parts = [], []
    for cls in sorted(table[target].unique().tolist()):
        rows = table[table[target] == cls]
        if len(rows) < 2:
            raise ValueError(f"class {cls!r} has fewer than 2 rows")
        order = rng.permutation(len(rows))
        n_train = int(round(train_frac * len(rows)))
        n_train = min(max(n_train, 1), len(rows) - 1)
        train_parts.append(rows.iloc[order[:n_train]])
        val_parts.append(rows.iloc[order[n_train:]])
    train = pd.concat(train_parts).sort_index()
    val = pd.concat(val_parts).sort_index()
    return train, val
