import numpy as np
import pytest

from locaos.cvrp import Instance, RoutePlan


def random_instance(rng, n, capacity=None, spread_demand=True, depot_random=False):
    """Small random instance; demands 1..4 so a few routes are needed."""
    xy = rng.random((n + 1, 2))
    dem = rng.integers(1, 5, size=n) if spread_demand else np.ones(n, dtype=int)
    depot = int(rng.integers(n + 1)) if depot_random else 0
    demands = [0] * (n + 1)
    custs = [i for i in range(n + 1) if i != depot]
    for c, q in zip(custs, dem):
        demands[c] = int(q)
    if capacity is None:
        capacity = int(max(dem.max(), rng.integers(4, 12)))
    return Instance("rand", depot, tuple(map(tuple, xy)), tuple(demands), capacity)


def random_plan(rng, instance):
    """Random feasible partition of the customers into routes."""
    custs = list(instance.customers)
    routes, cur, load = [], [], 0
    for c in (custs[i] for i in rng.permutation(len(custs))):
        q = instance.demands[c]
        if cur and (load + q > instance.capacity or rng.random() < 0.25):
            routes.append(cur)
            cur, load = [], 0
        cur.append(c)
        load += q
    routes.append(cur)
    return RoutePlan(tuple(tuple(r) for r in routes))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def acceptance(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
