"""Local optima correlation between search operators.

A trap vector records, per operator, whether a solution is a local optimum of
that operator (+1) or not (-1). Stacking trap vectors of sampled solutions
gives a trap matrix; the LOC matrix is the mean product of its columns.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.stats import kendalltau

from ._rng import substream
from .cvrp import Instance, RoutePlan, initial_solution
from .operators import (
    IMPROVE_EPS,
    _decode,
    _layout,
    _neighbourhood,
    apply_move,
    is_trapped,
    operator_spec,
)
from .search import perturb


@dataclass(frozen=True)
class TrapMatrix:
    ops: tuple[int, ...]
    rows: np.ndarray  # (N, K) of +-1, int8

    def __len__(self):
        return len(self.rows)


@dataclass(frozen=True)
class LocMatrix:
    ops: tuple[int, ...]
    values: np.ndarray  # (K, K)

    @property
    def k(self) -> int:
        return len(self.ops)


def trap_vector(instance: Instance, plan: RoutePlan, ops) -> np.ndarray:
    return np.array([1 if is_trapped(instance, plan, op) else -1 for op in ops], dtype=np.int8)


def loc_matrix(traps) -> LocMatrix:
    rows = traps.rows if isinstance(traps, TrapMatrix) else np.asarray(traps)
    ops = traps.ops if isinstance(traps, TrapMatrix) else tuple(range(1, rows.shape[1] + 1))
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError("LOC needs a non-empty N x K trap matrix")
    o = rows.astype(float)
    # entries of o.T @ o are exact integers, so symmetry and the unit diagonal are exact
    return LocMatrix(tuple(ops), (o.T @ o) / o.shape[0])


def sample_trap_matrix(
    instance: Instance,
    ops,
    max_ite: int,
    seed: int = 0,
    max_records: int | None = None,
    perturbation_strength: int = 5,
) -> tuple[TrapMatrix, int]:
    """Walk through solution space recording trap vectors.

    Every step evaluates the full neighbourhood of every operator, records the
    trap vector unless all operators are trapped, then moves to a neighbour
    drawn uniformly from the union of all strictly improving neighbours. When
    everything is trapped the plan is perturbed instead (and not recorded).
    Stops after ``max_ite`` steps or ``max_records`` recorded rows.
    """
    ops = tuple(int(o) for o in ops)
    specs = [operator_spec(o) for o in ops]
    step_rng = substream(seed, "sample")
    perturb_rng = substream(seed, "perturb")
    plan = initial_solution(instance, None, seed=substream(seed, "init"))
    rows = []
    steps = 0
    while steps < max_ite and (max_records is None or len(rows) < max_records):
        steps += 1
        L = _layout(instance, plan)
        hits = []
        for spec in specs:
            nb = _neighbourhood(L, spec)
            hits.append((spec, nb, np.flatnonzero(nb.delta < -IMPROVE_EPS)))
        counts = np.array([len(h) for *_, h in hits])
        if not counts.any():
            plan = perturb(instance, plan, perturbation_strength, perturb_rng)
            continue
        rows.append(np.where(counts == 0, 1, -1).astype(np.int8))
        u = int(step_rng.integers(counts.sum()))
        which = int(np.searchsorted(np.cumsum(counts), u, side="right"))
        spec, nb, idx = hits[which]
        u -= int(counts[:which].sum())
        plan = apply_move(plan, _decode(L, spec, nb.coords[idx[u]]))
    traps = np.array(rows, dtype=np.int8).reshape(len(rows), len(ops))
    return TrapMatrix(ops, traps), steps


def kendall_similarity(a, b) -> float:
    """Mean row-wise Kendall tau-b between two LOC matrices.

    Rows where tau is undefined (a constant row) count as 0.
    """
    a = np.asarray(getattr(a, "values", a), dtype=float)
    b = np.asarray(getattr(b, "values", b), dtype=float)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"LOC matrices differ in shape: {a.shape} vs {b.shape}")
    taus = []
    for ra, rb in zip(a, b):
        tau = kendalltau(ra, rb, variant="b").statistic
        taus.append(0.0 if np.isnan(tau) else float(tau))
    return float(np.mean(taus))


def mean_loc(mats) -> LocMatrix:
    mats = list(mats)
    ops = mats[0].ops
    if any(m.ops != ops for m in mats):
        raise ValueError("LOC matrices cover different operator lists")
    return LocMatrix(ops, np.mean([m.values for m in mats], axis=0))


# --- CSV ---------------------------------------------------------------------


def _header_lines(comments):
    return "".join(f"# {c}\n" for c in comments or ())


def loc_to_csv(loc: LocMatrix, comments=()) -> str:
    buf = io.StringIO()
    buf.write(_header_lines(comments))
    buf.write(",".join(str(o) for o in loc.ops) + "\n")
    for row in loc.values:
        buf.write(",".join(format(float(v), ".17g") for v in row) + "\n")
    return buf.getvalue()


def _data_lines(text):
    return [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def loc_from_csv(text: str) -> LocMatrix:
    lines = _data_lines(text)
    if not lines:
        raise ValueError("empty LOC file")
    ops = tuple(int(x) for x in lines[0].split(","))
    values = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    if values.shape != (len(ops), len(ops)):
        raise ValueError(f"LOC file has {len(ops)} operators but a {values.shape} body")
    return LocMatrix(ops, values)


def read_loc(path) -> LocMatrix:
    with open(path) as fh:
        return loc_from_csv(fh.read())


def traps_to_csv(traps: TrapMatrix, comments=()) -> str:
    buf = io.StringIO()
    buf.write(_header_lines(comments))
    buf.write(",".join(str(o) for o in traps.ops) + "\n")
    for row in traps.rows:
        buf.write(",".join(str(int(v)) for v in row) + "\n")
    return buf.getvalue()


def traps_from_csv(text: str) -> TrapMatrix:
    lines = _data_lines(text)
    ops = tuple(int(x) for x in lines[0].split(","))
    rows = np.array([[int(x) for x in ln.split(",")] for ln in lines[1:]], dtype=np.int8)
    return TrapMatrix(ops, rows.reshape(len(lines) - 1, len(ops)))
