"""LOC-driven modulation of selection probabilities around any base policy."""

from __future__ import annotations

import numpy as np

ZERO_SUM = 1e-15


def modulate(probs, lo, loc) -> np.ndarray:
    """Scale ``probs`` by ``1 - loc[i, :]`` for every trapped operator ``i`` in ``lo``,
    then renormalise.

    If every candidate is annihilated the result is uniform over the operators
    not in ``lo`` (over all of them when ``lo`` covers everything).
    """
    p = np.array(probs, dtype=float)
    if not lo:
        return p
    loc = np.asarray(loc, dtype=float)
    for i in sorted(lo):
        p *= np.clip(1.0 - loc[i], 0.0, 2.0)
    total = p.sum()
    if total <= ZERO_SUM:
        p = np.ones(len(p))
        if len(lo) < len(p):
            p[sorted(lo)] = 0.0
        total = p.sum()
    return p / total


def update_trapped_set(lo: frozenset, op_index: int, reward: float) -> frozenset:
    if reward > 0:
        return frozenset()
    return frozenset(lo) | {op_index}
