"""Stateless adaptive operator selection: probability matching and adaptive pursuit.

Operator positions here are 0-based indices into the caller's operator list.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

POLICY_KINDS = ("PM", "AP", "Uniform")


def default_p_min(k: int) -> float:
    return 0.5 / (k - 1) if k > 1 else 1.0


@dataclass
class PolicyState:
    kind: str
    quality: np.ndarray
    probs: np.ndarray
    alpha: float = 0.2
    beta: float = 0.2
    p_min: float = field(default=0.0)

    @property
    def k(self) -> int:
        return len(self.quality)

    @property
    def p_max(self) -> float:
        return 1.0 - (self.k - 1) * self.p_min


def make_policy(kind: str, k: int, alpha=0.2, beta=0.2, p_min=None) -> PolicyState:
    """Fresh policy over ``k`` operators: Q = 1 everywhere, uniform probabilities."""
    if kind not in POLICY_KINDS:
        raise ValueError(f"unknown policy kind {kind!r}; expected one of {POLICY_KINDS}")
    if k < 1:
        raise ValueError("need at least one operator")
    if p_min is None:
        p_min = default_p_min(k)
    if not 0 < p_min <= 1.0 / k + 1e-15:
        raise ValueError(f"p_min must lie in (0, 1/K]; got {p_min}")
    for name, v in (("alpha", alpha), ("beta", beta)):
        if not 0 < v <= 1:
            raise ValueError(f"{name} must lie in (0, 1]; got {v}")
    return PolicyState(kind, np.ones(k), np.full(k, 1.0 / k), float(alpha), float(beta), float(p_min))


def credit(f_before: float, f_after: float) -> float:
    """Fitness-improvement credit for minimisation; never negative."""
    return max(0.0, f_before - f_after)


def record_update(state: PolicyState, op_index: int, reward: float) -> PolicyState:
    if state.kind != "Uniform":
        q = state.quality
        q[op_index] = state.alpha * reward + (1.0 - state.alpha) * q[op_index]
    return state


def decision_making(state: PolicyState) -> np.ndarray:
    """Selection probabilities for the next pick (returns a copy)."""
    k = state.k
    if state.kind == "PM":
        total = state.quality.sum()
        ratio = state.quality / total if total > 0 else np.full(k, 1.0 / k)
        state.probs = state.p_min + (1.0 - k * state.p_min) * ratio
    elif state.kind == "AP":
        best = int(np.argmax(state.quality))
        target = np.full(k, state.p_min)
        target[best] = state.p_max
        state.probs = state.beta * target + (1.0 - state.beta) * state.probs
    else:
        state.probs = np.full(k, 1.0 / k)
    return state.probs.copy()


def select_operator(probs, rng: np.random.Generator) -> int:
    """Draw index i with probability probs[i]; consumes exactly one uniform."""
    probs = np.asarray(probs, dtype=float)
    total = probs.sum()
    if not total > 0 or (probs < 0).any():
        raise ValueError(f"not a probability vector: {probs}")
    cum = np.cumsum(probs) / total
    u = rng.random()
    return int(min(np.searchsorted(cum, u, side="right"), len(probs) - 1))
