"""Fractional placements: nodes may store any fraction of each object.

A fractional placement is an ``n x m`` table of rationals in ``[0, 1]`` whose
row sums respect the cache sizes.  A node reads an object by drawing it from
other nodes in order of preference, taking at most what each one stores,
until one full unit has been gathered.  Storing part of an object locally
replaces the most expensive part of that draw, so a best response is a
fractional knapsack over (object, supplier) pairs and greedy is optimal.

Only sum utilities are supported: the ordering of (object, supplier) pairs
is by ``r_i(obj) * d(i, supplier)``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from .errors import InsufficientSupply
from .model import Instance, Placement

__all__ = [
    "FPlacement",
    "from_integral",
    "check_fractional",
    "access_assignment",
    "access_cost",
    "fractional_cost",
    "fractional_best_response",
    "is_fractional_equilibrium",
    "iterated_fractional_br",
]

ZERO, ONE = Fraction(0), Fraction(1)

#: ``P[i][a]`` is the amount of object ``a`` stored at node ``i``.
FPlacement = tuple


def _require_sum(inst: Instance) -> None:
    if inst.utility != "sum":
        raise ValueError("fractional games are defined here for sum utilities only")


def from_integral(inst: Instance, P: Placement) -> FPlacement:
    return tuple(tuple(ONE if a in Pi else ZERO for a in range(inst.m)) for Pi in P)


def check_fractional(inst: Instance, P: FPlacement) -> None:
    """Raise ValueError unless P is a feasible fractional placement."""
    if len(P) != inst.n or any(len(row) != inst.m for row in P):
        raise ValueError("fractional placement has the wrong shape")
    for i, row in enumerate(P):
        if any(not ZERO <= x <= ONE for x in row):
            raise ValueError(f"node {i} stores an amount outside [0, 1]")
        if sum(row) > inst.capacities[i]:
            raise ValueError(f"node {i} exceeds its capacity {inst.capacities[i]}")
        pin = inst.pinned[i]
        if pin is not None and any(row[a] != (ONE if a in pin else ZERO) for a in range(inst.m)):
            raise ValueError(f"frozen node {i} must keep its placement")


def _suppliers(inst: Instance, i: int) -> list:
    rank = inst.ranks[i]
    return sorted((j for j in range(inst.n) if j != i), key=lambda j: (rank[j], j))


def _draw(inst: Instance, P: FPlacement, i: int, a: int, need: Fraction) -> tuple:
    """Greedy draw of ``need`` units of ``a`` from other nodes; returns (x, shortfall)."""
    x = {}
    for j in _suppliers(inst, i):
        if need <= 0:
            break
        take = min(need, P[j][a])
        if take > 0:
            x[j] = take
            need -= take
    return x, max(need, ZERO)


def access_assignment(inst: Instance, P: FPlacement, i: int, a: int) -> dict:
    """How much of one unit of ``a`` node i draws from each other node.

    Suppliers are taken most preferred first (ties by id), each up to the
    amount it stores.  Raises :class:`InsufficientSupply` when the other
    nodes hold less than one unit in total.
    """
    x, short = _draw(inst, P, i, a, ONE)
    if short > 0:
        raise InsufficientSupply(i, a, ONE - short)
    return x


def access_cost(inst: Instance, P: FPlacement, i: int, a: int) -> Fraction:
    """Cost per unit weight of reading ``a`` at i from other nodes only."""
    return sum((amt * inst.costs[i][j] for j, amt in access_assignment(inst, P, i, a).items()), ZERO)


def _cost_key(inst: Instance, P: FPlacement, i: int, own) -> tuple:
    """(weighted uncovered mass, cost) of node i when it stores ``own``."""
    short_total, total = ZERO, ZERO
    for a, w in enumerate(inst.weights[i]):
        if w == 0:
            continue
        x, short = _draw(inst, P, i, a, ONE - own[a])
        short_total += w * short
        total += w * sum((amt * inst.costs[i][j] for j, amt in x.items()), ZERO)
    return short_total, total


def fractional_cost(inst: Instance, P: FPlacement, i: int) -> Fraction:
    """Cost of node i: local copies are free, the rest is drawn greedily."""
    _require_sum(inst)
    total = ZERO
    for a, w in enumerate(inst.weights[i]):
        if w == 0:
            continue
        x, short = _draw(inst, P, i, a, ONE - P[i][a])
        if short > 0:
            raise InsufficientSupply(i, a, ONE - P[i][a] - short)
        total += w * sum((amt * inst.costs[i][j] for j, amt in x.items()), ZERO)
    return total


def fractional_best_response(inst: Instance, P: FPlacement, i: int) -> tuple:
    """Amounts node i stores in its best response to the others.

    Every (object, supplier) pair of the draw is worth ``r_i(a) * d(i, k)``
    per unit; the cache is filled with the most valuable pairs first, ties
    by (object, supplier) id.  Any part of an object the others cannot
    supply comes before every regular pair.
    """
    _require_sum(inst)
    pairs = []
    for a in range(inst.m):
        w = inst.weights[i][a]
        x, short = _draw(inst, P, i, a, ONE)
        if short > 0 and w > 0:
            pairs.append((0, ZERO, a, -1, short))
        for k, amt in x.items():
            pairs.append((1, -(w * inst.costs[i][k]), a, k, amt))
    pairs.sort()
    room = Fraction(inst.capacities[i])
    out = [ZERO] * inst.m
    for _, _, a, _, amt in pairs:
        if room <= 0:
            break
        take = min(room, amt)
        out[a] += take
        room -= take
    return tuple(out)


def _node_ok(inst: Instance, P: FPlacement, i: int, eps: Fraction) -> bool:
    br = fractional_best_response(inst, P, i)
    if max((abs(x - y) for x, y in zip(P[i], br)), default=ZERO) <= eps:
        return True
    # Ties: any placement costing no more than the greedy one is also a best response.
    return _cost_key(inst, P, i, P[i]) <= _cost_key(inst, P, i, br)


def is_fractional_equilibrium(inst: Instance, P: FPlacement, eps=ZERO) -> bool:
    """Whether every free node is within ``eps`` (max-norm) of a best response.

    A node whose placement is itself optimal passes even when the
    tie-broken greedy response differs from it.
    """
    _require_sum(inst)
    eps = Fraction(eps)
    return all(_node_ok(inst, P, i, eps) for i in inst.free_nodes())


def iterated_fractional_br(inst: Instance, P0: FPlacement, max_iters: int = 1000,
                           eps=ZERO) -> Optional[FPlacement]:
    """Round-robin best responses until an ``eps``-equilibrium, or None after ``max_iters`` sweeps.

    There is no convergence guarantee; None is an expected outcome.
    """
    _require_sum(inst)
    eps = Fraction(eps)
    check_fractional(inst, P0)
    P = [tuple(row) for row in P0]
    for _ in range(max_iters + 1):
        if is_fractional_equilibrium(inst, tuple(P), eps):
            return tuple(P)
        for i in inst.free_nodes():
            if not _node_ok(inst, tuple(P), i, eps):
                P[i] = fractional_best_response(inst, tuple(P), i)
    return None
