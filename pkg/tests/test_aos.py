import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locaos.aos import credit, decision_making, default_p_min, make_policy, record_update, select_operator
from locaos.aos_loc import modulate, update_trapped_set


def test_credit():
    assert credit(10.0, 7.5) == 2.5
    assert credit(10.0, 10.0) == 0.0
    assert credit(10.0, 11.0) == 0.0


def test_record_update_fixture():
    state = make_policy("PM", 3)
    record_update(state, 1, 2.0)
    assert state.quality[1] == pytest.approx(1.2, abs=1e-12)
    assert state.quality[0] == 1.0
    uni = make_policy("Uniform", 3)
    record_update(uni, 1, 2.0)
    assert (uni.quality == 1.0).all()


def test_pm_fixture():
    state = make_policy("PM", 2, p_min=0.25)
    state.quality[:] = [1.0, 0.0]
    assert np.abs(decision_making(state) - [0.75, 0.25]).max() <= 1e-12


def test_ap_fixture():
    state = make_policy("AP", 2, beta=0.2, p_min=0.25)
    state.quality[:] = [2.0, 1.0]
    assert state.p_max == 0.75
    assert np.abs(decision_making(state) - [0.55, 0.45]).max() <= 1e-12


def test_defaults():
    state = make_policy("AP", 17)
    assert state.p_min == pytest.approx(0.5 / 16)
    assert (state.probs == 1 / 17).all()
    assert (state.quality == 1).all()
    assert default_p_min(1) == 1.0


@pytest.mark.parametrize("kw", [dict(kind="XX"), dict(k=0), dict(p_min=0.6), dict(alpha=0.0), dict(beta=1.5)])
def test_make_policy_validation(kw):
    args = dict(kind="PM", k=2) | kw
    with pytest.raises(ValueError):
        make_policy(**args)


def test_pm_floor_and_sum_random():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        k = int(rng.integers(2, 18))
        state = make_policy("PM", k)
        state.quality[:] = rng.random(k) * rng.choice([1e-6, 1, 1e6])
        p = decision_making(state)
        assert abs(p.sum() - 1) <= 1e-9
        assert (p >= state.p_min - 1e-15).all()


@given(st.lists(st.floats(0.01, 100), min_size=2, max_size=17), st.floats(0.01, 1e4))
@settings(max_examples=100)
def test_pm_scale_invariant(q, c):
    a = make_policy("PM", len(q))
    b = make_policy("PM", len(q))
    a.quality[:] = q
    b.quality[:] = np.array(q) * c
    assert np.abs(decision_making(a) - decision_making(b)).max() <= 1e-12


@given(st.lists(st.floats(0, 10), min_size=2, max_size=17), st.integers(1, 60))
@settings(max_examples=100)
def test_ap_converges_to_argmax(q, rounds):
    state = make_policy("AP", len(q))
    state.quality[:] = q
    for _ in range(rounds):
        p = decision_making(state)
    best = int(np.argmax(q))
    assert abs(p.sum() - 1) <= 1e-9
    assert p[best] == p.max()
    assert (p >= state.p_min - 1e-12).all() and p[best] <= state.p_max + 1e-12


def test_select_frequencies_uniform():
    rng = np.random.default_rng(3)
    k, n = 5, 100_000
    counts = np.bincount([select_operator(np.full(k, 1 / k), rng) for _ in range(n)], minlength=k)
    sigma = np.sqrt(n * (1 / k) * (1 - 1 / k))
    assert (np.abs(counts - n / k) <= 3 * sigma).all()


def test_select_never_picks_zero():
    rng = np.random.default_rng(0)
    picks = {select_operator([0.0, 0.3, 0.0, 0.7], rng) for _ in range(2000)}
    assert picks == {1, 3}
    with pytest.raises(ValueError):
        select_operator([0.0, 0.0], rng)


# --- LOC modulation ----------------------------------------------------------


def test_modulate_fixture():
    loc = np.array([[1.0, 0.5, -0.5], [0.5, 1.0, 0.0], [-0.5, 0.0, 1.0]])
    out = modulate(np.full(3, 1 / 3), {0}, loc)
    assert np.abs(out - [0.0, 0.25, 0.75]).max() <= 1e-12


def test_modulate_identity_loc():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    out = modulate(p, {0}, np.eye(4))
    assert out[0] == 0
    assert np.abs(out[1:] - p[1:] / p[1:].sum()).max() <= 1e-12


def test_modulate_empty_lo_is_identity():
    p = np.array([0.2, 0.8])
    assert (modulate(p, frozenset(), np.ones((2, 2))) == p).all()


def test_modulate_fallback():
    out = modulate([0.5, 0.5, 0.0], {0}, np.array([[1, 1, 0.5], [1, 1, 0], [0.5, 0, 1]]))
    assert (out == [0, 0.5, 0.5]).all()
    # everything trapped: uniform over all
    assert (modulate([0.5, 0.5], {0, 1}, np.ones((2, 2))) == [0.5, 0.5]).all()


def _random_triple(rng):
    k = int(rng.integers(2, 18))
    p = rng.dirichlet(np.ones(k))
    rows = rng.choice([-1, 1], size=(int(rng.integers(1, 30)), k))
    loc = rows.T @ rows / len(rows)
    lo = set(rng.choice(k, size=int(rng.integers(0, k + 1)), replace=False).tolist())
    return p, lo, loc


def test_modulate_random_valid_and_suppresses_diagonal():
    rng = np.random.default_rng(11)
    fallbacks = 0
    for _ in range(10_000):
        p, lo, loc = _random_triple(rng)
        out = modulate(p, lo, loc)
        assert abs(out.sum() - 1) <= 1e-9 and (out >= 0).all()
        raw = p.copy()
        for i in lo:
            raw = raw * np.clip(1 - loc[i], 0, 2)
        if raw.sum() > 1e-15:
            assert all(out[i] == 0 for i in lo)
        else:
            fallbacks += 1
    assert fallbacks < 10_000


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=200)
def test_modulate_order_independent(seed):
    rng = np.random.default_rng(seed)
    p, lo, loc = _random_triple(rng)
    a = modulate(p, sorted(lo), loc)
    b = modulate(p, sorted(lo, reverse=True), loc)
    assert np.abs(a - b).max() <= 1e-12


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=200)
def test_modulate_monotone_in_loc(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(3, 10))
    p = np.full(k, 1 / k)
    loc = rng.uniform(-1, 1, size=(k, k))
    loc[0, 0] = 1.0
    out = modulate(p, {0}, loc)
    for j1 in range(1, k):
        for j2 in range(1, k):
            if loc[0, j1] > loc[0, j2]:
                assert out[j1] <= out[j2] + 1e-15


def test_update_trapped_set():
    assert update_trapped_set(frozenset({2, 5}), 3, 1.7) == frozenset()
    assert update_trapped_set(frozenset(), 3, 0.0) == frozenset({3})
    assert update_trapped_set(frozenset({3}), 3, 0.0) == frozenset({3})
