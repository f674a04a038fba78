"""Paired statistics for comparing optimisers."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.stats import rankdata

EXACT_MAX_N = 25


class WilcoxonResult(NamedTuple):
    statistic: float  # sum of ranks of positive differences (a - b)
    p_value: float
    n: int  # pairs left after dropping zero differences
    degenerate: bool
    method: str


def _exact_tail(ranks2: np.ndarray, t2: int) -> tuple[float, float]:
    """P(T <= t) and P(T >= t) under random signs; ranks doubled to integers."""
    total = int(ranks2.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in ranks2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    counts /= counts.sum()
    return float(counts[:t2 + 1].sum()), float(counts[t2:].sum())


def wilcoxon_signed_rank(a, b=None, method: str = "auto") -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    ``a`` may be a list of ``(a, b)`` pairs when ``b`` is omitted. Zero
    differences are dropped and tied magnitudes get average ranks. ``method``
    is ``"exact"``, ``"approx"`` or ``"auto"`` (exact up to 25 pairs).
    """
    if b is None:
        pairs = np.asarray(a, dtype=float).reshape(-1, 2)
        a, b = pairs[:, 0], pairs[:, 1]
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if diff.size == 0:
        raise ValueError("need at least one pair")
    diff = diff[diff != 0]
    n = len(diff)
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, True, "degenerate")

    ranks = rankdata(np.abs(diff))
    t_plus = float(ranks[diff > 0].sum())
    if method == "auto":
        method = "exact" if n <= EXACT_MAX_N else "approx"

    if method == "exact":
        ranks2 = np.rint(2 * ranks).astype(np.int64)
        lo, hi = _exact_tail(ranks2, int(round(2 * t_plus)))
        p = min(1.0, 2.0 * min(lo, hi))
    elif method == "approx":
        mean = n * (n + 1) / 4.0
        _, ties = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - (ties**3 - ties).sum() / 48.0
        if var <= 0:
            return WilcoxonResult(t_plus, 1.0, n, True, method)
        z = max(0.0, abs(t_plus - mean) - 0.5) / math.sqrt(var)
        p = min(1.0, math.erfc(z / math.sqrt(2.0)))
    else:
        raise ValueError(f"unknown method {method!r}")
    return WilcoxonResult(t_plus, p, n, False, method)


def mean_var(values) -> tuple[float, float]:
    """Mean and sample variance (0 for a single value)."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return float("nan"), float("nan")
    return float(x.mean()), float(x.var(ddof=1)) if x.size > 1 else 0.0
