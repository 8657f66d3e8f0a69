"""Synthetic 31-feature cohort tables for desk-scale runs."""

from __future__ import annotations

import numpy as np
import pandas as pd

from kom.common import seeded_rng
from kom.risk.features import KNEES, KOOS_SUBSCALES, VISITS


def make_risk_table(n: int = 300, seed: int = 0, with_targets: bool = True) -> pd.DataFrame:
    """Cohort table with plausible ranges and learnable target structure.

    Outcomes derive from a latent progression score (driven by age, BMI,
    baseline KL and KOOS, muscle strength) plus noise, so the model suites
    have signal to find.
    """
    rng = seeded_rng(seed)
    age = rng.uniform(45, 80, n)
    sex = rng.choice(["F", "M"], n)
    height = np.where(sex == "M", rng.normal(175, 7, n), rng.normal(162, 6, n))
    bmi = rng.uniform(20, 38, n)
    weight = bmi * (height / 100.0) ** 2
    torque_l = np.clip(rng.normal(110, 30, n) - 0.8 * (age - 60), 20, None)
    torque_r = np.clip(torque_l + rng.normal(0, 8, n), 20, None)
    kl_l = rng.integers(0, 5, n)
    kl_r = np.clip(kl_l + rng.integers(-1, 2, n), 0, 4)

    df = pd.DataFrame(
        {
            "age": age,
            "sex": sex,
            "body_weight_kg": weight,
            "height_cm": height,
            "bmi": bmi,
            "peak_knee_extension_torque_left": torque_l,
            "peak_knee_extension_torque_right": torque_r,
            "kl_grade_left": kl_l.astype(float),
            "kl_grade_right": kl_r.astype(float),
            "jsn_medial_left": np.clip(kl_l - rng.integers(0, 2, n), 0, 3).astype(float),
            "jsn_medial_right": np.clip(kl_r - rng.integers(0, 2, n), 0, 3).astype(float),
            "jsn_lateral_left": rng.integers(0, 4, n).astype(float),
            "jsn_lateral_right": rng.integers(0, 4, n).astype(float),
            "osteophyte_score_left": np.clip(kl_l + rng.integers(-1, 2, n), 0, 4).astype(float),
            "osteophyte_score_right": np.clip(kl_r + rng.integers(-1, 2, n), 0, 4).astype(float),
            "sclerosis_score_left": rng.integers(0, 13, n).astype(float),
            "sclerosis_score_right": rng.integers(0, 13, n).astype(float),
            "physical_activity_score": rng.uniform(20, 320, n),
            "smoking_status": rng.choice(["never", "former", "current"], n, p=[0.6, 0.3, 0.1]),
            "prior_knee_injury": rng.choice(["no", "yes"], n, p=[0.7, 0.3]),
            "comorbidity_count": rng.integers(0, 5, n).astype(float),
        }
    )

    for subscale in KOOS_SUBSCALES:
        for knee in KNEES:
            kl = df[f"kl_grade_{knee}"]
            base = 95 - 9 * kl - 0.6 * (df["bmi"] - 24) + rng.normal(0, 6, n)
            df[f"koos_{subscale}_{knee}"] = np.clip(base + rng.normal(0, 4, n), 0, 100)

    if with_targets:
        torque = {"left": torque_l, "right": torque_r}
        for knee in KNEES:
            kl = df[f"kl_grade_{knee}"]
            progression = (
                0.08 * (df["age"] - 60)
                + 0.10 * (df["bmi"] - 27)
                - 0.010 * (torque[knee] - 100)
                + 0.5 * df[f"jsn_medial_{knee}"]
            )
            for visit, horizon in zip(VISITS, (1.0, 2.2)):
                drift = horizon * progression + rng.normal(0, 1.5 * horizon, n)
                kl_next = np.clip(np.round(kl + np.maximum(0.0, drift * 0.35)), 0, 4)
                df[f"kl_{knee}_{visit}"] = kl_next.astype(int)
                for subscale in KOOS_SUBSCALES:
                    current = df[f"koos_{subscale}_{knee}"]
                    target = current - 4.0 * horizon * progression + rng.normal(0, 5, n)
                    df[f"koos_{subscale}_{knee}_{visit}"] = np.clip(target, 0, 100)

    return df
