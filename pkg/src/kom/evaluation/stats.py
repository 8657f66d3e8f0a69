"""Statistical tests: Shapiro-Wilk normality, Mann-Whitney U, group comparison."""

from __future__ import annotations

import math
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.stats import norm as _norm
from scipy.stats import t as _t_dist

EXACT_ENUMERATION_LIMIT = 400_000  # max C(n+m, n) for exact Mann-Whitney


def shapiro_wilk(sample: Sequence[float]) -> dict:
    """W statistic and upper-tail p-value via the polynomial approximation
    to the coefficient vector and the log-normalizing transforms (AS R94).
    """
    x = np.sort(np.asarray(sample, dtype=np.float64))
    n = len(x)
    if n < 3:
        raise ValueError("Shapiro-Wilk needs n >= 3")
    if x[0] == x[-1]:
        raise ValueError("all sample values are identical")

    m = _norm.ppf((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    mm = float(m @ m)
    u = 1.0 / math.sqrt(n)
    a = np.zeros(n)
    if n == 3:
        a[0], a[2] = -math.sqrt(0.5), math.sqrt(0.5)
    else:
        # Degree-5 corrections (no constant term) for the extreme coefficients.
        poly1 = (-2.706056, 4.434685, -2.071190, -0.147981, 0.221157, 0.0)
        poly2 = (-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, 0.0)
        c = m / math.sqrt(mm)
        a_n = float(np.polyval(poly1, u) + c[-1])
        if n > 5:
            a_n1 = float(np.polyval(poly2, u) + c[-2])
            phi = (mm - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * a_n**2 - 2 * a_n1**2)
            a = m / math.sqrt(phi)
            a[-1], a[0] = a_n, -a_n
            a[-2], a[1] = a_n1, -a_n1
        else:
            phi = (mm - 2 * m[-1] ** 2) / (1 - 2 * a_n**2)
            a = m / math.sqrt(phi)
            a[-1], a[0] = a_n, -a_n

    w_num = float(a @ x) ** 2
    w_den = float(np.sum((x - x.mean()) ** 2))
    w = w_num / w_den
    w = min(w, 1.0)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        p = min(max(p, 0.0), 1.0)
        return {"W": w, "p": p, "n": n}

    if n <= 11:
        gamma = -2.273 + 0.459 * n
        if 1.0 - w >= math.exp(gamma):
            return {"W": w, "p": 0.0, "n": n}
        stat = -math.log(gamma - math.log(1.0 - w))
        mu = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
        sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
    else:
        ln_n = math.log(n)
        stat = math.log(1.0 - w)
        mu = 0.0038915 * ln_n**3 - 0.083751 * ln_n**2 - 0.31082 * ln_n - 1.5861
        sigma = math.exp(0.0030302 * ln_n**2 - 0.082676 * ln_n - 0.4803)

    z = (stat - mu) / sigma
    p = float(1.0 - _norm.cdf(z))
    return {"W": w, "p": p, "n": n}


def shapiro_wilk_critical_value(n: int, alpha: float = 0.05) -> float:
    """W below which the test rejects at level ``alpha`` (inverts the p transform)."""
    if n <= 3:
        raise ValueError("critical-value inversion needs n > 3")
    z = float(_norm.ppf(1.0 - alpha))
    if n <= 11:
        gamma = -2.273 + 0.459 * n
        mu = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
        sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
        stat = mu + sigma * z
        return 1.0 - math.exp(gamma - math.exp(-stat))
    ln_n = math.log(n)
    mu = 0.0038915 * ln_n**3 - 0.083751 * ln_n**2 - 0.31082 * ln_n - 1.5861
    sigma = math.exp(0.0030302 * ln_n**2 - 0.082676 * ln_n - 0.4803)
    return 1.0 - math.exp(mu + sigma * z)


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> dict:
    """Two-sided Mann-Whitney U with midranks for ties.

    When the number of group labelings is small enough, the p-value is the
    exact permutation tail probability of ``|U - nm/2|``; otherwise a
    tie-corrected normal approximation with continuity correction applies.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    rank_sum_a = float(ranks[:n].sum())
    u_a = rank_sum_a - n * (n + 1) / 2.0
    center = n * m / 2.0

    total = math.comb(n + m, n)
    if total <= EXACT_ENUMERATION_LIMIT:
        observed_dev = abs(u_a - center)
        count = 0
        base = n * (n + 1) / 2.0
        for combo in combinations(range(n + m), n):
            u = ranks[list(combo)].sum() - base
            if abs(u - center) >= observed_dev - 1e-12:
                count += 1
        p = count / total
        method = "exact-enumeration"
    else:
        ties = np.unique(pooled, return_counts=True)[1]
        tie_term = float(np.sum(ties**3 - ties))
        big_n = n + m
        var_u = n * m / 12.0 * ((big_n + 1) - tie_term / (big_n * (big_n - 1)))
        if var_u <= 0:
            p = 1.0
        else:
            z = (abs(u_a - center) - 0.5) / math.sqrt(var_u)
            p = float(2.0 * (1.0 - _norm.cdf(max(z, 0.0))))
        p = min(p, 1.0)
        method = "normal-approximation"

    return {"U": u_a, "p": p, "method": method, "n": n, "m": m}


def t_test_independent(a: Sequence[float], b: Sequence[float]) -> dict:
    """Classic equal-variance two-sample t-test."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, m = len(a), len(b)
    if n < 2 or m < 2:
        raise ValueError("t-test needs at least 2 observations per group")
    pooled_var = ((n - 1) * a.var(ddof=1) + (m - 1) * b.var(ddof=1)) / (n + m - 2)
    if pooled_var == 0:
        return {"t": 0.0, "p": 1.0, "df": n + m - 2}
    t = (a.mean() - b.mean()) / math.sqrt(pooled_var * (1.0 / n + 1.0 / m))
    df = n + m - 2
    p = float(2.0 * _t_dist.sf(abs(t), df))
    return {"t": float(t), "p": p, "df": df}


def compare_groups(
    a: Sequence[float],
    b: Sequence[float],
    kind: str = "continuous",
    alpha: float = 0.05,
) -> dict:
    """Test-selection protocol for one between-group comparison.

    Ordinal variables always use Mann-Whitney U. Continuous variables pass
    through a Shapiro-Wilk gate on both samples: both normal means an
    independent t-test, otherwise Mann-Whitney U. Significance at p < alpha.
    """
    if kind not in ("continuous", "ordinal"):
        raise ValueError("kind must be 'continuous' or 'ordinal'")
    a = list(a)
    b = list(b)
    if len(a) < 3 or len(b) < 3:
        raise ValueError("each sample needs at least 3 observations")

    normality = None
    if kind == "ordinal":
        result = mann_whitney_u(a, b)
        test, statistic, p = "mann-whitney-u", result["U"], result["p"]
    else:
        try:
            sw_a = shapiro_wilk(a)
            sw_b = shapiro_wilk(b)
            normality = {"a": sw_a, "b": sw_b}
            both_normal = sw_a["p"] > alpha and sw_b["p"] > alpha
        except ValueError:
            normality = {"error": "degenerate sample; normality rejected"}
            both_normal = False
        if both_normal:
            result = t_test_independent(a, b)
            test, statistic, p = "t-test", result["t"], result["p"]
        else:
            result = mann_whitney_u(a, b)
            test, statistic, p = "mann-whitney-u", result["U"], result["p"]

    return {
        "test": test,
        "statistic": statistic,
        "p": p,
        "significant": p < alpha,
        "alpha": alpha,
        "kind": kind,
        "normality": normality,
        "detail": result,
    }
