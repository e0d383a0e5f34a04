"""Exhaustive equilibrium search, the ground truth for every solver.

The search assigns nodes one at a time and rejects a partial placement as soon
as some node's incentives are fully determined and it would deviate.  A
node's incentives are determined once, for every object it cares about, the
nearest copy held by an already assigned node is no farther than any node that
is still unassigned.  Frozen nodes keep their pinned placement throughout.
"""

from __future__ import annotations

import itertools
from typing import Optional

from .errors import BudgetExceeded
from .model import Instance, Placement, improving_move

__all__ = ["enumerate_equilibria", "exists_equilibrium", "find_equilibrium", "DEFAULT_BUDGET", "placement_key"]

DEFAULT_BUDGET = 10**7


def placement_key(P: Placement) -> tuple:
    """Lexicographic sort key of a placement."""
    return tuple(tuple(sorted(Pi)) for Pi in P)


def _choices(inst: Instance, i: int) -> list:
    pin = inst.pinned[i]
    if pin is not None:
        return [pin]
    top = min(inst.capacities[i], inst.m)
    return [
        frozenset(c)
        for size in range(1, top + 1)
        for c in itertools.combinations(range(inst.m), size)
    ]


def _order(inst: Instance, free: list) -> list:
    """Grow the assignment order by always taking the node closest to it."""
    if not free:
        return []
    order = [free[0]]
    rest = set(free[1:])
    while rest:
        nxt = min(rest, key=lambda j: (min(inst.ranks[i][j] for i in order), j))
        order.append(nxt)
        rest.remove(nxt)
    return order


def _relevant(inst: Instance, i: int) -> Optional[frozenset]:
    if inst.utility == "sum":
        return frozenset(a for a, w in enumerate(inst.weights[i]) if w > 0)
    if inst.utility == "binary":
        return inst.interests[i]
    return None


def _search(inst: Instance, budget: int, first_only: bool) -> list:
    n = inst.n
    free = inst.free_nodes()
    order = _order(inst, free)
    choices = {i: _choices(inst, i) for i in free}
    relevant = [_relevant(inst, i) for i in range(n)]
    P = [p if p is not None else frozenset() for p in inst.pinned]
    assigned = [p is not None for p in inst.pinned]
    found: list = []
    visited = 0

    # other nodes by increasing rank, so scans can stop at the horizon
    nbrs = [sorted((inst.ranks[i][j], j) for j in range(n) if j != i) for i in range(n)]

    def horizon(i: int) -> Optional[int]:
        """None once i's incentives are settled, else the rank of its nearest unassigned node.

        Only assigning a node within that rank can change the answer.
        """
        h = next((r for r, j in nbrs[i] if not assigned[j]), None)
        if h is None:
            return None
        if relevant[i] is None:
            return h
        held = set()
        for r, j in nbrs[i]:
            if r > h:
                break
            if assigned[j]:
                held |= P[j]
        return None if relevant[i] <= held else h

    def rec(t: int, pending: list) -> bool:
        nonlocal visited
        if t == len(order):
            found.append(tuple(P))
            return first_only
        i = order[t]
        for choice in choices[i]:
            visited += 1
            if visited > budget:
                raise BudgetExceeded(f"equilibrium search exceeded {budget} steps")
            P[i] = choice
            assigned[i] = True
            still, ok = [], True
            snapshot = None
            for k, h in pending + [(i, -1)]:
                if k != i and inst.ranks[k][i] > h:
                    still.append((k, h))
                    continue
                h = horizon(k)
                if h is None:
                    if snapshot is None:
                        snapshot = tuple(P)
                    if improving_move(inst, snapshot, k) is not None:
                        ok = False
                        break
                else:
                    still.append((k, h))
            if ok and rec(t + 1, still):
                return True
        P[i] = frozenset()
        assigned[i] = False
        return False

    rec(0, [])
    found.sort(key=placement_key)
    return found


def enumerate_equilibria(inst: Instance, budget: int = DEFAULT_BUDGET) -> list:
    """All equilibria of ``inst`` in lexicographic order.

    Nodes with capacity above one range over every nonempty object set that
    fits their cache.  ``budget`` caps the number of partial placements
    explored; :class:`BudgetExceeded` is raised beyond it.
    """
    return _search(inst, budget, first_only=False)


def exists_equilibrium(inst: Instance, budget: int = DEFAULT_BUDGET) -> bool:
    """Whether ``inst`` has an equilibrium; stops at the first one found."""
    return bool(_search(inst, budget, first_only=True))


def find_equilibrium(inst: Instance, budget: int = DEFAULT_BUDGET) -> Optional[Placement]:
    """The first equilibrium met by the search, or None."""
    found = _search(inst, budget, first_only=True)
    return found[0] if found else None
