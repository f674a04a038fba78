import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_instance, random_plan
from locaos.cvrp import Instance, RoutePlan, check_plan, evaluate
from locaos.operators import (
    ALL_OPERATORS,
    CATALOG,
    FIRST_IMPROVEMENT,
    RANDOM_IMPROVEMENT,
    Move,
    StaleMove,
    apply_move,
    catalog_rows,
    enumerate_moves,
    improving_moves,
    improving_step,
    is_trapped,
    move_delta,
    neighbourhood_deltas,
    parse_operator_list,
)
from oracles import canon, leg_sum, neighbours, trapped

LINE = Instance("line", 0, ((0, 0), (1, 0), (2, 0), (3, 0), (4, 0)), (0, 1, 1, 1, 1), 10)


def test_catalog_shape():
    assert ALL_OPERATORS == tuple(range(1, 18))
    kinds = {i: s.kind for i, s in CATALOG.items()}
    assert kinds[1] == "2opt" and kinds[4] == "cross" and kinds[11] == "cyclic"
    assert [CATALOG[i].lengths for i in (12, 13, 14, 15, 16, 17)] == [
        (1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2)]
    assert [r["id"] for r in catalog_rows()] == list(range(1, 18))


def test_parse_operator_list():
    assert parse_operator_list("1-17") == list(range(1, 18))
    assert parse_operator_list("all") == list(range(1, 18))
    assert parse_operator_list("1,2,5-7") == [1, 2, 5, 6, 7]
    with pytest.raises(ValueError):
        parse_operator_list("0,1")
    with pytest.raises(ValueError):
        parse_operator_list("1,1")


def test_two_opt_three_sections():
    inst = Instance("t", 0, ((0, 0), (1, 0), (2, 0), (3, 0)), (0, 1, 1, 1), 10)
    plan = RoutePlan(((1, 2, 3),))
    got = {apply_move(plan, m).routes for m in enumerate_moves(inst, plan, 1)}
    assert got == {((2, 1, 3),), ((1, 3, 2),), ((3, 2, 1),)}
    assert len(enumerate_moves(inst, plan, 1)) == 3


@pytest.mark.parametrize("p,q", [(1, 1), (2, 3), (4, 2), (5, 5)])
def test_exchange_count(p, q):
    n = p + q
    inst = Instance("x", 0, tuple((float(i), 0.0) for i in range(n + 1)), (0,) + (1,) * n, 100)
    plan = RoutePlan((tuple(range(1, p + 1)), tuple(range(p + 1, n + 1))))
    assert len(enumerate_moves(inst, plan, 5)) == p * q


def test_exchange_capacity_filter():
    inst = Instance("x", 0, ((0, 0), (1, 0), (2, 0), (3, 0)), (0, 2, 2, 3), 4)
    plan = RoutePlan(((1, 2), (3,)))
    # swapping 3 into a route that keeps another customer overloads it
    assert enumerate_moves(inst, plan, 5) == []


def test_apply_fixtures():
    plan = RoutePlan(((1, 2, 3, 4),))
    assert apply_move(plan, Move(1, (0,), (1,), (2,))).routes == ((1, 3, 2, 4),)
    plan = RoutePlan(((1, 2, 3), (4, 5)))
    assert apply_move(plan, Move(4, (0, 1), (1, 1), ())).routes == ((1, 5), (4, 2, 3))
    assert apply_move(plan, Move(4, (0, 1), (1, 1), (), reversed=True)).routes == ((1, 4), (3, 2, 5))
    plan = RoutePlan(((1,), (2, 3)))
    # relocating the only customer drops the emptied route
    assert apply_move(plan, Move(8, (0, 1), (0, 2), (1,))).routes == ((2, 3, 1),)


def test_stale_move():
    plan = RoutePlan(((1, 2, 3),))
    with pytest.raises(StaleMove):
        apply_move(plan, Move(1, (0,), (2,), (2,)))
    with pytest.raises(StaleMove):
        apply_move(plan, Move(5, (0, 1), (0, 0), (1, 1)))
    moves = enumerate_moves(LINE, RoutePlan(((1, 2), (3, 4))), 5)
    with pytest.raises(StaleMove):
        apply_move(RoutePlan(((1, 2, 3), (4,))), moves[0])


def test_collinear_zero_delta():
    inst = Instance("c", 0, ((0, 0), (0, 0), (1, 0), (2, 0)), (0, 1, 1, 1), 10)
    plan = RoutePlan(((1, 2, 3),))
    # customers (0,0),(1,0),(2,0) from a depot at (0,0): 0+1+1+2 before, 0+2+1+1 after
    assert move_delta(inst, plan, Move(1, (0,), (1,), (2,))) == pytest.approx(0.0, abs=1e-12)


def test_symmetric_reversal_zero():
    inst = Instance("s", 0, ((0, 0), (1, 1), (1, -1)), (0, 1, 1), 10)
    assert move_delta(inst, RoutePlan(((1, 2),)), Move(1, (0,), (0,), (2,))) == pytest.approx(0, abs=1e-12)


def test_crossing_fixture():
    # square with a crossing tour: depot (0,0) -> (1,1) -> (1,0) -> (0,1) -> depot
    inst = Instance("sq", 0, ((0, 0), (1, 1), (1, 0), (0, 1), (0.5, 2)), (0, 1, 1, 1, 1), 10)
    plan = RoutePlan(((2, 3, 1, 4),))
    assert not is_trapped(inst, plan, 1)
    step = improving_step(inst, plan, 1, seed=0)
    assert step.improved
    assert evaluate(inst, step.plan) < evaluate(inst, plan) - 1e-9
    assert step.delta == pytest.approx(evaluate(inst, step.plan) - evaluate(inst, plan), abs=1e-9)


def test_single_customer_trapped():
    inst = Instance("one", 0, ((0, 0), (1, 2)), (0, 1), 1)
    plan = RoutePlan(((1,),))
    for op in ALL_OPERATORS:
        assert is_trapped(inst, plan, op)
        assert improving_step(inst, plan, op, seed=0) == (plan, False, 0.0)


def _oracle_case(rng):
    n = int(rng.integers(2, 9))
    inst = random_instance(rng, n, depot_random=rng.random() < 0.3)
    return inst, random_plan(rng, inst)


def test_enumeration_complete_against_bruteforce():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(40):
        inst, plan = _oracle_case(rng)
        for op in ALL_OPERATORS:
            moves = enumerate_moves(inst, plan, op)
            mine = {canon(apply_move(plan, m).routes) for m in moves} - {canon(plan.routes)}
            ref = neighbours(op, plan.routes, inst.demands, inst.capacity)
            assert mine == ref, (op, plan.routes)
            checked += 1
    assert checked == 40 * 17


def test_is_trapped_against_bruteforce():
    rng = np.random.default_rng(99)
    outcomes = []
    for _ in range(300):
        inst, plan = _oracle_case(rng)
        op = int(rng.integers(1, 18))
        want = trapped(op, inst.coords, inst.depot, inst.demands, inst.capacity, plan.routes)
        assert is_trapped(inst, plan, op) == want
        assert improving_step(inst, plan, op, seed=1).improved == (not want)
        outcomes.append(want)
    # both answers must be exercised
    assert 30 <= sum(outcomes) <= 270


@given(st.integers(0, 2**32 - 1), st.sampled_from(ALL_OPERATORS))
@settings(max_examples=150, deadline=None)
def test_moves_feasible_and_deltas_exact(seed, op):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, int(rng.integers(3, 11)))
    plan = random_plan(rng, inst)
    f = evaluate(inst, plan)
    moves, deltas = neighbourhood_deltas(inst, plan, op)
    custs = sorted(c for r in plan.routes for c in r)
    for m, d in zip(moves, deltas):
        new = apply_move(plan, m)
        check_plan(inst, new)
        assert sorted(c for r in new.routes for c in r) == custs
        full = leg_sum(inst.coords, inst.depot, new.routes) - f
        assert abs(d - full) <= 1e-9
        assert abs(move_delta(inst, plan, m) - full) <= 1e-9


def test_delta_on_random_ten_customer_plans(rng):
    for _ in range(30):
        inst = random_instance(rng, 10)
        plan = random_plan(rng, inst)
        op = int(rng.integers(1, 18))
        moves = enumerate_moves(inst, plan, op, order_seed=int(rng.integers(1000)))
        if not moves:
            continue
        m = moves[0]
        full = evaluate(inst, apply_move(plan, m)) - evaluate(inst, plan)
        assert abs(move_delta(inst, plan, m) - full) <= 1e-9


@given(st.integers(0, 2**32 - 1), st.sampled_from(ALL_OPERATORS),
       st.sampled_from([FIRST_IMPROVEMENT, RANDOM_IMPROVEMENT]))
@settings(max_examples=120, deadline=None)
def test_improving_step_consistent(seed, op, mode):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, int(rng.integers(2, 12)))
    plan = random_plan(rng, inst)
    step = improving_step(inst, plan, op, mode=mode, seed=seed)
    assert step.improved == (not is_trapped(inst, plan, op))
    check_plan(inst, step.plan)
    if step.improved:
        assert step.delta < -1e-12
        assert abs(evaluate(inst, step.plan) - evaluate(inst, plan) - step.delta) <= 1e-9
        reachable = {apply_move(plan, m).routes for m in improving_moves(inst, plan, op)[0]}
        assert step.plan.routes in reachable
    else:
        assert step.plan == plan and step.delta == 0.0


def test_first_improvement_follows_seeded_order(rng):
    inst = random_instance(rng, 10)
    plan = random_plan(rng, inst)
    f = evaluate(inst, plan)
    for op in (1, 4, 8):
        order = enumerate_moves(inst, plan, op, order_seed=5)
        first = next((m for m in order if evaluate(inst, apply_move(plan, m)) < f - 1e-12), None)
        step = improving_step(inst, plan, op, FIRST_IMPROVEMENT, seed=5)
        if first is None:
            assert not step.improved
        else:
            assert step.plan == apply_move(plan, first)


def test_random_improvement_covers_all_improving(rng):
    inst = random_instance(rng, 9, capacity=40)
    plan = RoutePlan((tuple(inst.customers),))
    moves, _ = improving_moves(inst, plan, 1)
    assert len(moves) >= 2
    seen = {improving_step(inst, plan, 1, RANDOM_IMPROVEMENT, seed=s).plan for s in range(400)}
    assert seen == {apply_move(plan, m) for m in moves}
