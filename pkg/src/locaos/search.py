"""Local search drivers with adaptive operator selection, with and without LOC."""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .aos import credit, decision_making, make_policy, record_update, select_operator
from .aos_loc import modulate, update_trapped_set
from .cvrp import Instance, RoutePlan, evaluate, initial_solution
from .operators import FIRST_IMPROVEMENT, improving_step

DEFAULT_MAX_ITE_GENERATED = 40000
DEFAULT_MAX_ITE_BENCHMARK = 2000


@dataclass
class SearchConfig:
    max_ite: int = DEFAULT_MAX_ITE_GENERATED
    policy: str = "AP"
    seed: int = 0
    alpha: float = 0.2
    beta: float = 0.2
    p_min: float | None = None
    perturbation_strength: int = 5
    loc_file: str | None = None
    keep_probs: bool = True

    def __post_init__(self):
        if self.max_ite < 1:
            raise ValueError("max_ite must be >= 1")
        if self.perturbation_strength < 1:
            raise ValueError("perturbation_strength must be >= 1")


@dataclass
class SearchTrace:
    ite: list[int] = field(default_factory=list)
    op: list[int] = field(default_factory=list)
    reward: list[float] = field(default_factory=list)
    trapped: list[bool] = field(default_factory=list)
    distance: list[float] = field(default_factory=list)
    best: list[float] = field(default_factory=list)
    perturbed: list[bool] = field(default_factory=list)
    probs: list[np.ndarray] = field(default_factory=list)
    initial_distance: float = float("nan")
    best_plan: RoutePlan | None = None
    best_distance: float = float("inf")
    final_plan: RoutePlan | None = None
    trapped_after_trapped_count: int = 0
    perturbation_count: int = 0
    wall_time: float = 0.0

    def __len__(self):
        return len(self.ite)

    def summary(self) -> dict:
        return dict(
            iterations=len(self),
            initial_distance=self.initial_distance,
            best_distance=self.best_distance,
            trapped_after_trapped_count=self.trapped_after_trapped_count,
            trapped_count=int(sum(self.trapped)),
            perturbation_count=self.perturbation_count,
            wall_time=self.wall_time,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("ite,op,reward,trapped,distance,best,perturbed\n")
        for row in zip(self.ite, self.op, self.reward, self.trapped,
                       self.distance, self.best, self.perturbed):
            i, o, r, t, d, b, p = row
            buf.write(f"{i},{o},{r:.17g},{int(t)},{d:.17g},{b:.17g},{int(p)}\n")
        return buf.getvalue()


def perturb(instance: Instance, plan: RoutePlan, strength: int, rng) -> RoutePlan:
    """Apply ``strength`` random capacity-feasible single-customer relocations.

    A customer with nowhere feasible to go leaves the plan unchanged for that draw.
    """
    rng = np.random.default_rng(rng)
    routes = [list(r) for r in plan.routes]
    dem, cap = instance.demands, instance.capacity
    for _ in range(strength):
        where = {c: (r, i) for r, route in enumerate(routes) for i, c in enumerate(route)}
        customers = sorted(where)
        c = customers[rng.integers(len(customers))]
        r, i = where[c]
        loads = [sum(dem[x] for x in route) for route in routes]
        # (route, final index) targets, own position excluded
        targets = [(r, k) for k in range(len(routes[r])) if k != i]
        for b, route in enumerate(routes):
            if b != r and loads[b] + dem[c] <= cap:
                targets.extend((b, k) for k in range(len(route) + 1))
        if not targets:
            continue
        b, k = targets[rng.integers(len(targets))]
        routes[r].pop(i)
        routes[b].insert(k, c)
        if not routes[r]:
            del routes[r]
    return RoutePlan(tuple(tuple(x) for x in routes))


def _run(instance: Instance, ops, config: SearchConfig, loc=None) -> SearchTrace:
    started = time.perf_counter()
    ops = [int(o) for o in ops]
    k = len(ops)
    if loc is not None:
        loc = np.asarray(loc, dtype=float)
        if loc.shape != (k, k):
            raise ValueError(f"LOC matrix is {loc.shape[0]}x{loc.shape[1]} but {k} operators are configured")

    policy = make_policy(config.policy, k, config.alpha, config.beta, config.p_min)
    select_rng = substream(config.seed, "select")
    op_rng = substream(config.seed, "operator")
    perturb_rng = substream(config.seed, "perturb")

    plan = initial_solution(instance, None, seed=substream(config.seed, "init"))
    f = evaluate(instance, plan)
    trace = SearchTrace(initial_distance=f, best_plan=plan, best_distance=f)
    lo: frozenset = frozenset()

    for ite in range(1, config.max_ite + 1):
        probs = decision_making(policy)
        if loc is not None:
            probs = modulate(probs, lo, loc)
        idx = select_operator(probs, select_rng)
        step = improving_step(instance, plan, ops[idx], FIRST_IMPROVEMENT, op_rng)
        f_new = evaluate(instance, step.plan, check=False) if step.improved else f
        reward = credit(f, f_new)
        record_update(policy, idx, reward)

        trapped = not step.improved
        if trapped and lo:
            trace.trapped_after_trapped_count += 1
        lo = update_trapped_set(lo, idx, reward)
        plan, f = step.plan, f_new
        if f < trace.best_distance:
            trace.best_distance, trace.best_plan = f, plan

        trace.ite.append(ite)
        trace.op.append(ops[idx])
        trace.reward.append(reward)
        trace.trapped.append(trapped)
        trace.distance.append(f)
        trace.best.append(trace.best_distance)
        if config.keep_probs:
            trace.probs.append(probs)

        stuck = len(lo) == k
        trace.perturbed.append(stuck)
        if stuck:
            plan = perturb(instance, plan, config.perturbation_strength, perturb_rng)
            f = evaluate(instance, plan)
            lo = frozenset()
            trace.perturbation_count += 1

    trace.final_plan = plan
    trace.wall_time = time.perf_counter() - started
    return trace


def run_base(instance: Instance, ops, config: SearchConfig) -> SearchTrace:
    """Local search where the base policy alone picks the operator each iteration."""
    return _run(instance, ops, config)


def run_loc_assisted(instance: Instance, ops, config: SearchConfig, loc) -> SearchTrace:
    """As :func:`run_base`, with probabilities damped for operators likely trapped.

    ``loc`` is a K x K array (or anything with a ``values`` attribute) aligned with ``ops``.
    """
    values = getattr(loc, "values", loc)
    return _run(instance, ops, config, loc=values)
