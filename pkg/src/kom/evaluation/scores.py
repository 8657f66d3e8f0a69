"""Score normalization, rubric schema, and approval-rate computation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

RUBRIC_DIMENSIONS = (
    "evidence-based-practice",
    "completeness",
    "exercise-prescription",
    "nutrition-prescription",
    "personalization",
    "accessibility-feasibility",
    "safety",
)


@dataclass(frozen=True)
class RubricScore:
    """One rater's seven-dimension 1-5 scoring of one plan."""

    plan_id: str
    rater_id: str
    scores: dict

    def __post_init__(self):
        if set(self.scores) != set(RUBRIC_DIMENSIONS):
            missing = set(RUBRIC_DIMENSIONS) - set(self.scores)
            extra = set(self.scores) - set(RUBRIC_DIMENSIONS)
            raise ValueError(f"rubric dimensions mismatch (missing={sorted(missing)}, extra={sorted(extra)})")
        for dim, value in self.scores.items():
            if not isinstance(value, int) or not 1 <= value <= 5:
                raise ValueError(f"{dim}: score must be an integer in 1-5, got {value!r}")

    def to_dict(self) -> dict:
        return {"plan_id": self.plan_id, "rater_id": self.rater_id, "scores": dict(self.scores)}

    @classmethod
    def from_dict(cls, d: dict) -> "RubricScore":
        return cls(plan_id=d["plan_id"], rater_id=d["rater_id"], scores=dict(d["scores"]))


def aggregate_rubric(rows: Sequence[RubricScore]) -> dict:
    """Mean across raters per dimension; composite = sum of the seven means."""
    if not rows:
        raise ValueError("no rubric rows")
    per_dimension = {
        dim: float(np.mean([r.scores[dim] for r in rows])) for dim in RUBRIC_DIMENSIONS
    }
    return {
        "per_dimension": per_dimension,
        "composite": float(sum(per_dimension.values())),
        "n_rows": len(rows),
        "n_plans": len({r.plan_id for r in rows}),
        "n_raters": len({r.rater_id for r in rows}),
    }


def zscore_normalize_rows(scores: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Row-wise z-scores with population sigma.

    Needs at least two columns. Constant rows map to all zeros and their
    indices come back as flags.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2:
        raise ValueError("score matrix must be 2-D")
    if s.shape[1] < 2:
        raise ValueError("z-score normalization needs at least 2 columns")
    means = s.mean(axis=1, keepdims=True)
    stds = s.std(axis=1, ddof=0, keepdims=True)
    flagged = [int(i) for i in np.nonzero(stds[:, 0] == 0.0)[0]]
    safe = np.where(stds == 0.0, 1.0, stds)
    z = (s - means) / safe
    z[stds[:, 0] == 0.0, :] = 0.0
    return z, flagged


def approval_rate(gradings: Sequence, reference: Sequence) -> float:
    """Exact-match fraction between predicted and adjudicated gradings."""
    gradings = list(gradings)
    reference = list(reference)
    if len(gradings) != len(reference):
        raise ValueError(f"length mismatch: {len(gradings)} vs {len(reference)}")
    if not gradings:
        raise ValueError("empty inputs")
    matches = sum(1 for g, r in zip(gradings, reference) if g == r)
    return matches / len(gradings)
