"""The 31-parameter feature manifest and prediction target catalog.

The manifest ships as JSON config so deployments can substitute their own
column set without code changes.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Optional

KOOS_SUBSCALES = ("pain", "symptoms", "adl", "sport", "qol")
KNEES = ("left", "right")
VISITS = ("v01", "v06")


def feature_manifest(path: Optional[str | Path] = None) -> dict:
    """Load the versioned feature manifest (bundled default or an override file)."""
    if path is not None:
        return json.loads(Path(path).read_text())
    data = resources.files("kom.risk").joinpath("data/feature_manifest.json").read_text()
    return json.loads(data)


def _column_names(manifest: dict) -> list[str]:
    return [f["name"] for f in manifest["features"]]


_DEFAULT = None


def _default_manifest() -> dict:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = feature_manifest()
    return _DEFAULT


def default_feature_columns() -> list[str]:
    return _column_names(_default_manifest())


def column_spec(manifest: Optional[dict] = None) -> dict[str, dict]:
    m = manifest or _default_manifest()
    return {f["name"]: f for f in m["features"]}


def regression_targets() -> list[str]:
    return [
        f"koos_{s}_{k}_{v}" for v in VISITS for k in KNEES for s in KOOS_SUBSCALES
    ]


def classification_targets() -> list[str]:
    return [f"kl_{k}_{v}" for v in VISITS for k in KNEES]


FEATURE_COLUMNS = default_feature_columns
TARGET_COLUMNS = {
    "regression": regression_targets,
    "classification": classification_targets,
}
