"""The 17 CVRP search operators and their neighbourhoods.

Each operator defines a neighbourhood of capacity-feasible plans. Full
neighbourhoods are evaluated in one shot over a padded ``routes x positions``
layout, so deciding whether an operator is trapped (no strictly better
neighbour) costs a handful of numpy calls rather than a Python loop per move.

Move positions are 0-based and refer to the plan the move was enumerated on.
Per kind:

========== ================= ======================= =======================
kind       routes            positions               lengths
========== ================= ======================= =======================
2opt       (r,)              (start,)                (section length >= 2,)
swap1      (r,)              (i, j), i < j           (1, 1)
relocate1  (r,)              (from, to-final-index)  (1,)
cross      (a, b), a < b     (cut_a, cut_b)          (tail_a, tail_b)
exchange   (a, b), a < b     (start_a, start_b)      (len_a, len_b)
relocate   (a, b), a != b    (start_a, insert_at_b)  (len,)
cyclic     (a, b, c)         (i, j, k)               (1, 1, 1)
========== ================= ======================= =======================

A cross move keeps the first ``cut`` customers of each route. Forward:
``a' = a[:i] + b[j:]``, ``b' = b[:j] + a[i:]``. Reversed:
``a' = a[:i] + reversed(b[:j])``, ``b' = reversed(a[i:]) + b[j:]``.
A cyclic move sends ``a[i]`` to ``b``'s slot ``j``, ``b[j]`` to ``c``'s slot
``k`` and ``c[k]`` to ``a``'s slot ``i``; both cycle directions appear as
``(a, b, c)`` and ``(a, c, b)`` with ``a`` the smallest route index.
Asymmetric exchange takes the ``len_a`` section from the lower-indexed route.
Routes emptied by a move are dropped from the resulting plan.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .cvrp import Instance, RoutePlan

# delta below -IMPROVE_EPS counts as a strict improvement
IMPROVE_EPS = 1e-12

FIRST_IMPROVEMENT = "first_improvement"
RANDOM_IMPROVEMENT = "random_improvement"


class OperatorSpec(NamedTuple):
    id: int
    name: str
    kind: str
    n_routes: int
    lengths: tuple[int, ...]


CATALOG: dict[int, OperatorSpec] = {
    s.id: s
    for s in [
        OperatorSpec(1, "2opt", "2opt", 1, ()),
        OperatorSpec(2, "symmetric-exchange-intra", "swap1", 1, (1, 1)),
        OperatorSpec(3, "relocate-intra", "relocate1", 1, (1,)),
        OperatorSpec(4, "cross", "cross", 2, ()),
        OperatorSpec(5, "symmetric-exchange-1", "exchange", 2, (1, 1)),
        OperatorSpec(6, "symmetric-exchange-2", "exchange", 2, (2, 2)),
        OperatorSpec(7, "symmetric-exchange-3", "exchange", 2, (3, 3)),
        OperatorSpec(8, "relocate-1", "relocate", 2, (1,)),
        OperatorSpec(9, "relocate-2", "relocate", 2, (2,)),
        OperatorSpec(10, "relocate-3", "relocate", 2, (3,)),
        OperatorSpec(11, "cyclic-exchange", "cyclic", 3, (1, 1, 1)),
        OperatorSpec(12, "asymmetric-exchange-1-2", "exchange", 2, (1, 2)),
        OperatorSpec(13, "asymmetric-exchange-2-1", "exchange", 2, (2, 1)),
        OperatorSpec(14, "asymmetric-exchange-1-3", "exchange", 2, (1, 3)),
        OperatorSpec(15, "asymmetric-exchange-3-1", "exchange", 2, (3, 1)),
        OperatorSpec(16, "asymmetric-exchange-2-3", "exchange", 2, (2, 3)),
        OperatorSpec(17, "asymmetric-exchange-3-2", "exchange", 2, (3, 2)),
    ]
}

ALL_OPERATORS: tuple[int, ...] = tuple(CATALOG)


def operator_spec(op) -> OperatorSpec:
    try:
        return CATALOG[int(op)]
    except (KeyError, ValueError, TypeError):
        raise ValueError(f"unknown operator id {op!r}; expected 1..{len(CATALOG)}") from None


def parse_operator_list(text: str) -> list[int]:
    """Parse ``"1-17"``, ``"1,2,5-7"`` or ``"all"`` into operator ids."""
    text = text.strip()
    if text.lower() == "all":
        return list(ALL_OPERATORS)
    ops: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = (int(x) for x in part.split("-", 1))
            ops.extend(range(lo, hi + 1))
        elif part:
            ops.append(int(part))
    for op in ops:
        operator_spec(op)
    if len(set(ops)) != len(ops):
        raise ValueError(f"duplicate operator ids in {text!r}")
    return ops


class StaleMove(ValueError):
    """The move does not fit the plan it is applied to."""


@dataclass(frozen=True)
class Move:
    op: int
    routes: tuple[int, ...]
    positions: tuple[int, ...]
    lengths: tuple[int, ...]
    reversed: bool = False
    # lengths of the referenced routes when the move was enumerated
    shape: tuple[int, ...] = ()


# --- scalar application and delta -------------------------------------------


def _check_fits(plan: RoutePlan, move: Move):
    if any(r >= len(plan.routes) for r in move.routes):
        raise StaleMove(f"{move} references a missing route")
    if move.shape and tuple(len(plan.routes[r]) for r in move.routes) != move.shape:
        raise StaleMove(f"{move} was enumerated on a differently shaped plan")


def apply_move(plan: RoutePlan, move: Move) -> RoutePlan:
    """Return the plan obtained by applying ``move``; ``plan`` is not modified."""
    _check_fits(plan, move)
    kind = operator_spec(move.op).kind
    routes = [list(r) for r in plan.routes]

    if kind == "2opt":
        (r,), (i,), (n,) = move.routes, move.positions, move.lengths
        seq = routes[r]
        if n < 2 or i + n > len(seq):
            raise StaleMove(f"{move}: section out of bounds")
        seq[i:i + n] = seq[i:i + n][::-1]
    elif kind == "swap1":
        (r,), (i, j) = move.routes, move.positions
        seq = routes[r]
        if not 0 <= i < j < len(seq):
            raise StaleMove(f"{move}: positions out of bounds")
        seq[i], seq[j] = seq[j], seq[i]
    elif kind == "relocate1":
        (r,), (i, k) = move.routes, move.positions
        seq = routes[r]
        if i == k or not (0 <= i < len(seq) and 0 <= k < len(seq)):
            raise StaleMove(f"{move}: positions out of bounds")
        seq.insert(k, seq.pop(i))
    elif kind == "cross":
        (a, b), (i, j) = move.routes, move.positions
        A, B = routes[a], routes[b]
        if a == b or not (0 <= i <= len(A) and 0 <= j <= len(B)):
            raise StaleMove(f"{move}: cut out of bounds")
        if move.reversed:
            routes[a] = A[:i] + B[:j][::-1]
            routes[b] = A[i:][::-1] + B[j:]
        else:
            routes[a] = A[:i] + B[j:]
            routes[b] = B[:j] + A[i:]
    elif kind == "exchange":
        (a, b), (i, j), (la, lb) = move.routes, move.positions, move.lengths
        A, B = routes[a], routes[b]
        if a == b or i + la > len(A) or j + lb > len(B) or min(i, j) < 0:
            raise StaleMove(f"{move}: section out of bounds")
        routes[a] = A[:i] + B[j:j + lb] + A[i + la:]
        routes[b] = B[:j] + A[i:i + la] + B[j + lb:]
    elif kind == "relocate":
        (a, b), (i, k), (n,) = move.routes, move.positions, move.lengths
        A, B = routes[a], routes[b]
        if a == b or i < 0 or i + n > len(A) or not 0 <= k <= len(B):
            raise StaleMove(f"{move}: section out of bounds")
        seg = A[i:i + n]
        routes[a] = A[:i] + A[i + n:]
        routes[b] = B[:k] + seg + B[k:]
    elif kind == "cyclic":
        (a, b, c), (i, j, k) = move.routes, move.positions
        if len({a, b, c}) != 3:
            raise StaleMove(f"{move}: routes must be distinct")
        A, B, C = routes[a], routes[b], routes[c]
        if not (0 <= i < len(A) and 0 <= j < len(B) and 0 <= k < len(C)):
            raise StaleMove(f"{move}: positions out of bounds")
        A[i], B[j], C[k] = C[k], A[i], B[j]
    else:  # pragma: no cover
        raise AssertionError(kind)
    return RoutePlan(tuple(tuple(r) for r in routes))


def _ext(instance, route):
    return [instance.depot, *route, instance.depot]


def move_delta(instance: Instance, plan: RoutePlan, move: Move) -> float:
    """Change in total distance caused by ``move``, from the affected legs only."""
    _check_fits(plan, move)
    d = instance.dist
    kind = operator_spec(move.op).kind

    if kind == "2opt":
        (r,), (i,), (n,) = move.routes, move.positions, move.lengths
        e = _ext(instance, plan.routes[r])
        j = i + n - 1
        return float(d[e[i], e[j + 1]] + d[e[i + 1], e[j + 2]] - d[e[i], e[i + 1]] - d[e[j + 1], e[j + 2]])
    if kind == "swap1":
        (r,), (i, j) = move.routes, move.positions
        e = _ext(instance, plan.routes[r])
        pi, ci, ni, pj, cj, nj = e[i], e[i + 1], e[i + 2], e[j], e[j + 1], e[j + 2]
        if j == i + 1:
            return float(d[pi, cj] + d[ci, nj] - d[pi, ci] - d[cj, nj])
        return float(d[pi, cj] + d[cj, ni] + d[pj, ci] + d[ci, nj]
                     - d[pi, ci] - d[ci, ni] - d[pj, cj] - d[cj, nj])
    if kind == "relocate1":
        (r,), (i, k) = move.routes, move.positions
        e = _ext(instance, plan.routes[r])
        x = e[i + 1]
        gain = d[e[i], x] + d[x, e[i + 2]] - d[e[i], e[i + 2]]
        u, v = (e[k], e[k + 1]) if k < i else (e[k + 1], e[k + 2])
        return float(d[u, x] + d[x, v] - d[u, v] - gain)
    if kind == "cross":
        (a, b), (i, j) = move.routes, move.positions
        ea, eb = _ext(instance, plan.routes[a]), _ext(instance, plan.routes[b])
        old = d[ea[i], ea[i + 1]] + d[eb[j], eb[j + 1]]
        if move.reversed:
            return float(d[ea[i], eb[j]] + d[ea[i + 1], eb[j + 1]] - old)
        return float(d[ea[i], eb[j + 1]] + d[eb[j], ea[i + 1]] - old)
    if kind == "exchange":
        (a, b), (i, j), (la, lb) = move.routes, move.positions, move.lengths
        ea, eb = _ext(instance, plan.routes[a]), _ext(instance, plan.routes[b])
        fa, ta, pa, na = ea[i + 1], ea[i + la], ea[i], ea[i + la + 1]
        fb, tb, pb, nb = eb[j + 1], eb[j + lb], eb[j], eb[j + lb + 1]
        return float(d[pa, fb] + d[tb, na] + d[pb, fa] + d[ta, nb]
                     - d[pa, fa] - d[ta, na] - d[pb, fb] - d[tb, nb])
    if kind == "relocate":
        (a, b), (i, k), (n,) = move.routes, move.positions, move.lengths
        ea, eb = _ext(instance, plan.routes[a]), _ext(instance, plan.routes[b])
        f, t, p, nx = ea[i + 1], ea[i + n], ea[i], ea[i + n + 1]
        gain = d[p, f] + d[t, nx] - d[p, nx]
        return float(d[eb[k], f] + d[t, eb[k + 1]] - d[eb[k], eb[k + 1]] - gain)
    if kind == "cyclic":
        (a, b, c), (i, j, k) = move.routes, move.positions
        ea, eb, ec = (_ext(instance, plan.routes[r]) for r in (a, b, c))

        def swap_in(e, p, x):
            return d[e[p], x] + d[x, e[p + 2]] - d[e[p], e[p + 1]] - d[e[p + 1], e[p + 2]]

        return float(swap_in(ea, i, ec[k + 1]) + swap_in(eb, j, ea[i + 1]) + swap_in(ec, k, eb[j + 1]))
    raise AssertionError(kind)  # pragma: no cover


# --- vectorized neighbourhoods -----------------------------------------------


class _Layout:
    """Padded array view of a plan: ``E[r, p + 1]`` is the p-th customer of route r,
    every other cell holds the depot."""

    def __init__(self, instance: Instance, plan: RoutePlan):
        self.instance = instance
        self.plan = plan
        self.D = instance.dist
        self.Q = instance.capacity
        self.R = R = len(plan.routes)
        self.n = np.array([len(r) for r in plan.routes], dtype=np.intp)
        self.M = M = int(self.n.max()) if R else 0
        W = M + 5
        E = np.full((R, W), instance.depot, dtype=np.intp)
        for r, route in enumerate(plan.routes):
            E[r, 1:len(route) + 1] = route
        self.E = E
        dem = instance.demand_array[E]
        self.pre = np.concatenate([np.zeros((R, 1)), np.cumsum(dem[:, 1:], axis=1)], axis=1)
        self.load = self.pre[np.arange(R), self.n]
        self.dem = dem[:, 1:M + 1]
        # edge[r, q] = cost of the leg E[r, q] -> E[r, q + 1]
        self.edge = self.D[E[:, :-1], E[:, 1:]]
        self.pos = np.arange(M)
        self.valid = self.pos[None, :] < self.n[:, None]

    def seg(self, length):
        """First/last node, predecessor, successor, inner-boundary cost and demand
        of the section of ``length`` starting at each position."""
        M, E = self.M, self.E
        first = E[:, 1:M + 1]
        last = E[:, length:M + length]
        before = E[:, 0:M]
        after = E[:, length + 1:M + length + 1]
        cut = self.edge[:, 0:M] + self.edge[:, length:M + length]
        demand = self.pre[:, length:M + length] - self.pre[:, 0:M]
        ok = self.pos[None, :] + length <= self.n[:, None]
        return first, last, before, after, cut, demand, ok


_cache: tuple = (None, None)


def _layout(instance: Instance, plan: RoutePlan) -> _Layout:
    global _cache
    key, lay = _cache
    if key is not None and key[0] is instance and key[1] == plan:
        return lay
    lay = _Layout(instance, plan)
    _cache = ((instance, plan), lay)
    return lay


class _Neighbourhood(NamedTuple):
    coords: np.ndarray  # (m, k) integer coordinates in canonical order
    delta: np.ndarray  # (m,)


def _nb_2opt(L: _Layout):
    D, E, M = L.D, L.E, L.M
    P, C, N = E[:, 0:M], E[:, 1:M + 1], E[:, 2:M + 2]
    e_in, e_out = L.edge[:, 0:M], L.edge[:, 1:M + 1]
    delta = (D[P[:, :, None], C[:, None, :]] + D[C[:, :, None], N[:, None, :]]
             - e_in[:, :, None] - e_out[:, None, :])
    I, J = L.pos[:, None], L.pos[None, :]
    mask = (I < J)[None] & L.valid[:, None, :]
    return mask, delta


def _nb_swap1(L: _Layout):
    D, E, M = L.D, L.E, L.M
    P, C, N = E[:, 0:M], E[:, 1:M + 1], E[:, 2:M + 2]
    e_in, e_out = L.edge[:, 0:M], L.edge[:, 1:M + 1]
    Pi, Ci, Ni = P[:, :, None], C[:, :, None], N[:, :, None]
    Pj, Cj, Nj = P[:, None, :], C[:, None, :], N[:, None, :]
    far = (D[Pi, Cj] + D[Cj, Ni] + D[Pj, Ci] + D[Ci, Nj]
           - e_in[:, :, None] - e_out[:, :, None] - e_in[:, None, :] - e_out[:, None, :])
    near = D[Pi, Cj] + D[Ci, Nj] - e_in[:, :, None] - e_out[:, None, :]
    I, J = L.pos[:, None], L.pos[None, :]
    delta = np.where((J == I + 1)[None], near, far)
    mask = (I < J)[None] & L.valid[:, None, :]
    return mask, delta


def _nb_relocate1(L: _Layout):
    D, E, M = L.D, L.E, L.M
    P, C, N = E[:, 0:M], E[:, 1:M + 1], E[:, 2:M + 2]
    gain = L.edge[:, 0:M] + L.edge[:, 1:M + 1] - D[P, N]
    x = C[:, :, None]
    before = D[P[:, None, :], x] + D[x, C[:, None, :]] - L.edge[:, None, 0:M]
    after = D[C[:, None, :], x] + D[x, N[:, None, :]] - L.edge[:, None, 1:M + 1]
    I, K = L.pos[:, None], L.pos[None, :]
    delta = np.where((K < I)[None], before, after) - gain[:, :, None]
    mask = (I != K)[None] & L.valid[:, :, None] & L.valid[:, None, :]
    return mask, delta


def _nb_cross(L: _Layout):
    D, E, M, R = L.D, L.E, L.M, L.R
    # cut index i in 0..M: predecessor E[:, i], successor E[:, i + 1]
    H, T = E[:, 0:M + 1], E[:, 1:M + 2]
    cut = L.edge[:, 0:M + 1]
    Ha, Ta = H[:, :, None, None], T[:, :, None, None]
    Hb, Tb = H[None, None, :, :], T[None, None, :, :]
    old = cut[:, :, None, None] + cut[None, None, :, :]
    fwd = D[Ha, Tb] + D[Hb, Ta] - old
    rev = D[Ha, Hb] + D[Ta, Tb] - old
    delta = np.stack([fwd, rev], axis=-1)

    pre = L.pre[:, 0:M + 1]
    la, lb = L.load[:, None, None, None], L.load[None, None, :, None]
    pa, pb = pre[:, :, None, None], pre[None, None, :, :]
    Q = L.Q
    ok_f = (pa + lb - pb <= Q) & (pb + la - pa <= Q)
    ok_r = (pa + pb <= Q) & (la - pa + lb - pb <= Q)
    cuts = np.arange(M + 1)
    in_a = cuts[None, :] <= L.n[:, None]
    a_idx = np.arange(R)
    pair = a_idx[:, None] < a_idx[None, :]
    base = pair[:, None, :, None] & in_a[:, :, None, None] & in_a[None, None, :, :]
    end_a = (cuts[None, :] == L.n[:, None])[:, :, None, None]
    end_b = (cuts[None, :] == L.n[:, None])[None, None, :, :]
    zero_b = (cuts == 0)[None, None, None, :]
    ok_f &= ~(end_a & end_b)  # forward at both ends is the identity
    ok_r &= ~(end_a & zero_b)  # so is reversed with nothing taken from b
    mask = np.stack([base & ok_f, base & ok_r], axis=-1)
    return mask, delta


def _nb_exchange(L: _Layout, la: int, lb: int):
    D, Q = L.D, L.Q
    fa, ta, pa, na, cut_a, qa, oka = L.seg(la)
    fb, tb, pb, nb, cut_b, qb, okb = L.seg(lb)
    A = (slice(None), slice(None), None, None)
    B = (None, None, slice(None), slice(None))
    delta = (D[pa[A], fb[B]] + D[tb[B], na[A]] + D[pb[B], fa[A]] + D[ta[A], nb[B]]
             - cut_a[A] - cut_b[B])
    load = L.load
    ok = ((load[:, None, None, None] - qa[A] + qb[B] <= Q)
          & (load[None, None, :, None] - qb[B] + qa[A] <= Q))
    r = np.arange(L.R)
    mask = (r[:, None] < r[None, :])[:, None, :, None] & oka[A] & okb[B] & ok
    return mask, delta


def _nb_relocate(L: _Layout, length: int):
    D, E, M = L.D, L.E, L.M
    f, t, p, nx, cut, q, ok = L.seg(length)
    gain = cut - D[p, nx]
    # insertion slot k in 0..M of route b: between E[b, k] and E[b, k + 1]
    U, V = E[:, 0:M + 1], E[:, 1:M + 2]
    A = (slice(None), slice(None), None, None)
    B = (None, None, slice(None), slice(None))
    delta = D[U[B], f[A]] + D[t[A], V[B]] - L.edge[:, 0:M + 1][B] - gain[A]
    slots = np.arange(M + 1)[None, :] <= L.n[:, None]
    r = np.arange(L.R)
    fits = L.load[None, None, :, None] + q[A] <= L.Q
    mask = (r[:, None] != r[None, :])[:, None, :, None] & ok[A] & slots[B] & fits
    return mask, delta


def _cyclic_triples(R):
    for a, b, c in combinations(range(R), 3):
        yield a, b, c
        yield a, c, b


def _cyclic_parts(L: _Layout):
    """Yield (triples, mask, delta) chunks, each covering a block of route triples."""
    D, E, M = L.D, L.E, L.M
    P, C, N = E[:, 0:M], E[:, 1:M + 1], E[:, 2:M + 2]
    base = L.edge[:, 0:M] + L.edge[:, 1:M + 1]
    # put[r, p, s, q]: cost change when route r's slot p receives C[s, q]
    x = C[None, None, :, :]
    put = D[P[:, :, None, None], x] + D[x, N[:, :, None, None]] - base[:, :, None, None]
    dem, load, Q = L.dem, L.load, L.Q
    triples = np.array(list(_cyclic_triples(L.R)), dtype=np.intp).reshape(-1, 3)
    chunk = max(1, 2_000_000 // max(1, M**3))
    for s in range(0, len(triples), chunk):
        tri = triples[s:s + chunk]
        ta, tb, tc = (tri[:, k][:, None, None] for k in range(3))
        X, Y = L.pos[None, :, None], L.pos[None, None, :]
        term_a = put[ta, X, tc, Y]  # [t, i, k]
        term_b = put[tb, X, ta, Y]  # [t, j, i]
        term_c = put[tc, X, tb, Y]  # [t, k, j]
        delta = (term_a[:, :, None, :] + term_b.transpose(0, 2, 1)[:, :, :, None]
                 + term_c.transpose(0, 2, 1)[:, None, :, :])
        da = dem[tri[:, 0]][:, :, None, None]
        db = dem[tri[:, 1]][:, None, :, None]
        dc = dem[tri[:, 2]][:, None, None, :]
        lA, lB, lC = (load[tri[:, k]][:, None, None, None] for k in range(3))
        va = L.valid[tri[:, 0]][:, :, None, None]
        vb = L.valid[tri[:, 1]][:, None, :, None]
        vc = L.valid[tri[:, 2]][:, None, None, :]
        mask = (va & vb & vc & (lA - da + dc <= Q) & (lB - db + da <= Q) & (lC - dc + db <= Q))
        yield tri, mask, delta


def _dense(L: _Layout, spec: OperatorSpec):
    kind = spec.kind
    if kind == "2opt":
        return _nb_2opt(L)
    if kind == "swap1":
        return _nb_swap1(L)
    if kind == "relocate1":
        return _nb_relocate1(L)
    if kind == "cross":
        return _nb_cross(L)
    if kind == "exchange":
        return _nb_exchange(L, *spec.lengths)
    if kind == "relocate":
        return _nb_relocate(L, spec.lengths[0])
    raise AssertionError(kind)


def _neighbourhood(L: _Layout, spec: OperatorSpec) -> _Neighbourhood:
    if L.R == 0 or L.R < spec.n_routes:
        return _Neighbourhood(np.empty((0, 1), dtype=np.intp), np.empty(0))
    if spec.kind == "cyclic":
        coords, deltas = [], []
        for tri, mask, delta in _cyclic_parts(L):
            t, i, j, k = np.nonzero(mask)
            coords.append(np.stack([tri[t, 0], i, tri[t, 1], j, tri[t, 2], k], axis=1))
            deltas.append(delta[mask])
        return _Neighbourhood(np.concatenate(coords), np.concatenate(deltas))
    mask, delta = _dense(L, spec)
    return _Neighbourhood(np.stack(np.nonzero(mask), axis=1), delta[mask])


def _has_improving(L: _Layout, spec: OperatorSpec) -> bool:
    if L.R < spec.n_routes:
        return False
    if spec.kind == "cyclic":
        return any(bool((delta[mask] < -IMPROVE_EPS).any()) for _, mask, delta in _cyclic_parts(L))
    mask, delta = _dense(L, spec)
    return bool((delta[mask] < -IMPROVE_EPS).any())


def _decode(L: _Layout, spec: OperatorSpec, row) -> Move:
    n = L.n
    kind = spec.kind
    row = [int(v) for v in row]
    if kind == "2opt":
        r, i, j = row
        return Move(spec.id, (r,), (i,), (j - i + 1,), shape=(int(n[r]),))
    if kind in ("swap1", "relocate1"):
        r, i, k = row
        return Move(spec.id, (r,), (i, k), spec.lengths, shape=(int(n[r]),))
    if kind == "cross":
        a, i, b, j, v = row
        return Move(spec.id, (a, b), (i, j), (int(n[a]) - i, int(n[b]) - j),
                    reversed=bool(v), shape=(int(n[a]), int(n[b])))
    if kind in ("exchange", "relocate"):
        a, i, b, j = row
        return Move(spec.id, (a, b), (i, j), spec.lengths, shape=(int(n[a]), int(n[b])))
    if kind == "cyclic":
        a, i, b, j, c, k = row
        return Move(spec.id, (a, b, c), (i, j, k), spec.lengths,
                    shape=(int(n[a]), int(n[b]), int(n[c])))
    raise AssertionError(kind)  # pragma: no cover


# --- public neighbourhood API ------------------------------------------------


def enumerate_moves(instance: Instance, plan: RoutePlan, op, order_seed=None) -> list[Move]:
    """Every capacity-feasible move of ``op`` on ``plan``, each exactly once.

    With ``order_seed`` the canonical order is shuffled by a uniform random
    permutation drawn from ``np.random.default_rng(order_seed)``.
    """
    spec = operator_spec(op)
    L = _layout(instance, plan)
    nb = _neighbourhood(L, spec)
    order = range(len(nb.delta))
    if order_seed is not None:
        order = np.random.default_rng(order_seed).permutation(len(nb.delta))
    return [_decode(L, spec, nb.coords[k]) for k in order]


def neighbourhood_deltas(instance: Instance, plan: RoutePlan, op) -> tuple[list[Move], np.ndarray]:
    """Moves in canonical order with their vectorized deltas."""
    spec = operator_spec(op)
    L = _layout(instance, plan)
    nb = _neighbourhood(L, spec)
    return [_decode(L, spec, row) for row in nb.coords], nb.delta.copy()


class StepResult(NamedTuple):
    plan: RoutePlan
    improved: bool
    delta: float


def improving_step(instance: Instance, plan: RoutePlan, op, mode=FIRST_IMPROVEMENT, seed=None) -> StepResult:
    """One improving move of ``op``, or ``(plan, False, 0.0)`` when ``op`` is trapped.

    ``seed`` may be an int or a ``numpy.random.Generator`` (consumed in place).
    """
    spec = operator_spec(op)
    rng = np.random.default_rng(seed)
    L = _layout(instance, plan)
    nb = _neighbourhood(L, spec)
    m = len(nb.delta)
    if mode == FIRST_IMPROVEMENT:
        order = rng.permutation(m)
        hits = np.flatnonzero(nb.delta[order] < -IMPROVE_EPS)
        if not len(hits):
            return StepResult(plan, False, 0.0)
        k = order[hits[0]]
    elif mode == RANDOM_IMPROVEMENT:
        hits = np.flatnonzero(nb.delta < -IMPROVE_EPS)
        if not len(hits):
            return StepResult(plan, False, 0.0)
        k = hits[rng.integers(len(hits))]
    else:
        raise ValueError(f"unknown improvement mode {mode!r}")
    move = _decode(L, spec, nb.coords[k])
    return StepResult(apply_move(plan, move), True, float(nb.delta[k]))


def improving_moves(instance: Instance, plan: RoutePlan, op) -> tuple[list[Move], np.ndarray]:
    """All strictly improving moves of ``op`` with their deltas."""
    spec = operator_spec(op)
    L = _layout(instance, plan)
    nb = _neighbourhood(L, spec)
    hits = np.flatnonzero(nb.delta < -IMPROVE_EPS)
    return [_decode(L, spec, nb.coords[k]) for k in hits], nb.delta[hits]


def is_trapped(instance: Instance, plan: RoutePlan, op) -> bool:
    """True when no neighbour under ``op`` is strictly shorter than ``plan``."""
    return not _has_improving(_layout(instance, plan), operator_spec(op))


def catalog_rows() -> list[dict]:
    return [
        dict(id=s.id, name=s.name, kind=s.kind, routes=s.n_routes,
             lengths="-".join(map(str, s.lengths)))
        for s in CATALOG.values()
    ]
