"""Games on undirected (symmetric-cost) networks.

* :func:`check_acyclic_prefs` / :func:`prefs_to_symmetric_costs` move between
  node preference orders and symmetric access costs.
* :func:`potential` and :func:`dynamics_binary` implement better-response
  dynamics for binary preferences, driven by a lexicographic potential.
* :func:`solve_two_object` computes an equilibrium for two objects by pushing
  two fictional players away from every node one distance level at a time.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .errors import CyclicPrefs, DeviationBoundExceeded, NonIncreasingPotential
from .model import (
    INF,
    Instance,
    Placement,
    best_response,
    check_placement,
    improving_move,
    is_equilibrium,
    split_capacities,
)

__all__ = [
    "Acyclicity",
    "PotentialValue",
    "StepRecord",
    "TwoObjectRun",
    "check_acyclic_prefs",
    "prefs_to_symmetric_costs",
    "potential",
    "dynamics_binary",
    "distance_ladder",
    "solve_two_object",
    "run_two_object",
]


# preference orders and symmetric costs -----------------------------------

@dataclass(frozen=True)
class Acyclicity:
    """``cycle`` is None for acyclic preferences, else a witness sequence."""

    cycle: Optional[tuple] = None

    @property
    def acyclic(self) -> bool:
        return self.cycle is None

    def __bool__(self) -> bool:
        return self.acyclic


def _pair(i: int, j: int) -> tuple:
    return (i, j) if i < j else (j, i)


def _strict_pair_edges(ranks) -> dict:
    """Edges {i,j} -> {i,k} whenever i strictly prefers k to j, labelled by i."""
    n = len(ranks)
    edges: dict = {}
    for i in range(n):
        row = ranks[i]
        for j in range(n):
            if j == i:
                continue
            src = _pair(i, j)
            for k in range(n):
                if k != i and k != j and row[k] < row[j]:
                    edges.setdefault(src, []).append((_pair(i, k), i))
    return edges


def _find_cycle(vertices, succ) -> Optional[list]:
    """Iterative DFS; returns a cycle as a list of (vertex, label) steps."""
    state = {v: 0 for v in vertices}
    for root in vertices:
        if state[root]:
            continue
        stack = [(root, iter(succ(root)))]
        path = [(root, None)]
        state[root] = 1
        while stack:
            v, it = stack[-1]
            for w, lab in it:
                if state[w] == 1:
                    idx = next(t for t, (u, _) in enumerate(path) if u == w)
                    return path[idx:] + [(w, lab)]
                if state[w] == 0:
                    state[w] = 1
                    stack.append((w, iter(succ(w))))
                    path.append((w, lab))
                    break
            else:
                state[v] = 2
                stack.pop()
                path.pop()
    return None


def _nodes_of_pair_cycle(steps: list) -> tuple:
    """Translate a pair-digraph cycle into the node sequence it certifies."""
    pivots = [lab for _, lab in steps[1:]]
    compact = []
    for p in pivots:
        if not compact or compact[-1] != p:
            compact.append(p)
    while len(compact) > 1 and compact[0] == compact[-1]:
        compact.pop()
    return tuple(reversed(compact))


def _merged_pair_digraph(ranks) -> tuple:
    """Pair digraph with pairs that some node ranks equally merged into one class.

    Returns ``(find, succ, classes)``; ``succ`` maps a class to its
    ``(class, label)`` successors along strict preferences.
    """
    n = len(ranks)
    vertices = [_pair(i, j) for i in range(n) for j in range(i + 1, n)]
    parent = {v: v for v in vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for i in range(n):
        row = ranks[i]
        by_rank: dict = {}
        for j in range(n):
            if j != i:
                by_rank.setdefault(row[j], []).append(_pair(i, j))
        for group in by_rank.values():
            for p in group[1:]:
                a, b = find(group[0]), find(p)
                if a != b:
                    parent[b] = a
    succ: dict = {}
    for v, outs in _strict_pair_edges(ranks).items():
        for w, lab in outs:
            succ.setdefault(find(v), set()).add((find(w), lab))
    classes = sorted({find(v) for v in vertices})
    return find, succ, classes


def check_acyclic_prefs(ranks) -> Acyclicity:
    """Look for nodes i_0..i_{k-1} where each i_j prefers i_{j-1} to i_{j+1}.

    Uses the digraph on unordered node pairs with an arc {i,j} -> {i,k}
    whenever i strictly prefers k to j.  Pairs a node ranks equally are
    merged first, so a cycle may mix strict and tied preferences as long as
    one of them is strict; acyclic preferences are exactly those realisable
    by symmetric costs.
    """
    n = len(ranks)
    edges = _strict_pair_edges(ranks)
    vertices = [_pair(i, j) for i in range(n) for j in range(i + 1, n)]
    steps = _find_cycle(vertices, lambda v: edges.get(v, ()))
    if steps is not None:
        return Acyclicity(_nodes_of_pair_cycle(steps))
    _, succ, classes = _merged_pair_digraph(ranks)
    steps = _find_cycle(classes, lambda c: sorted(succ.get(c, ())))
    if steps is None:
        return Acyclicity()
    return Acyclicity(tuple(dict.fromkeys(x for p, _ in steps for x in p)))


def prefs_to_symmetric_costs(ranks) -> tuple:
    """Symmetric integer costs whose induced preferences are exactly ``ranks``.

    Pairs that some node ranks equally are merged first, then every merged
    class gets its longest-path level in the strict pair digraph, so ties map
    to equal costs.  Raises :class:`CyclicPrefs` when no such costs exist.
    """
    n = len(ranks)
    verdict = check_acyclic_prefs(ranks)
    if not verdict:
        raise CyclicPrefs(verdict.cycle)
    find, succ, classes = _merged_pair_digraph(ranks)
    vertices = [_pair(i, j) for i in range(n) for j in range(i + 1, n)]
    level: dict = {}

    def depth(c):
        if c not in level:
            level[c] = 1 + max((depth(w) for w, _ in succ.get(c, ())), default=0)
        return level[c]

    for c in classes:
        depth(c)
    costs = [[Fraction(0)] * n for _ in range(n)]
    for i, j in vertices:
        costs[i][j] = costs[j][i] = Fraction(level[find((i, j))])
    return tuple(tuple(r) for r in costs)


# potential dynamics -------------------------------------------------------

@dataclass(frozen=True, order=True)
class PotentialValue:
    """``(phi0, tail)`` compared lexicographically, tail sorted ascending."""

    phi0: int
    tail: tuple

    def digest(self) -> str:
        text = ",".join("inf" if x == INF else str(x) for x in self.tail)
        return hashlib.sha1(text.encode()).hexdigest()[:12]


def _require_binary_undirected(inst: Instance) -> None:
    if inst.utility != "binary":
        raise ValueError("binary preferences are required")
    if inst.costs is None or not inst.symmetric:
        raise ValueError("symmetric access costs are required")


def potential(inst: Instance, P: Placement) -> PotentialValue:
    """Count of nodes storing only interesting objects, then the sorted
    distances from each node to the nearest other copy of what it stores."""
    phi0 = sum(1 for i in range(inst.n) if P[i] <= inst.interests[i])
    tail = []
    for i in range(inst.n):
        if inst.capacities[i] != 1 or len(P[i]) != 1:
            continue
        (a,) = tuple(P[i])
        d = min((inst.costs[i][j] for j in range(inst.n) if j != i and a in P[j]), default=INF)
        tail.append(d)
    tail.sort()
    return PotentialValue(phi0, tuple(tail))


@dataclass(frozen=True)
class StepRecord:
    """One better-response step of the dynamics."""

    step: int
    node: int
    before: int
    after: int
    value: PotentialValue

    def line(self, objects=None) -> str:
        name = (lambda a: objects[a]) if objects else str
        return f"{self.step},{self.node},{name(self.before)},{name(self.after)},{self.value.phi0},{self.value.digest()}"


def _schedule(schedule) -> Callable[[list], int]:
    if callable(schedule):
        return schedule
    if schedule in (None, "round-robin"):
        return None
    if isinstance(schedule, str) and schedule.startswith("random:"):
        rng = random.Random(int(schedule.split(":", 1)[1]))
        return lambda unhappy: rng.choice(unhappy)
    raise ValueError(f"unknown schedule {schedule!r}")


def dynamics_binary(inst: Instance, P0: Placement, schedule="round-robin",
                    max_steps: int = 10**6) -> tuple:
    """Better-response dynamics until no node can improve.

    ``schedule`` is ``"round-robin"`` (scan nodes cyclically),
    ``"random:<seed>"`` (pick a uniformly random unhappy node) or a callable
    choosing among the unhappy node ids.  Every step is checked to raise the
    potential strictly; returns ``(placement, [StepRecord, ...])``.
    """
    _require_binary_undirected(inst)
    if any(inst.capacities[i] != 1 for i in inst.free_nodes()):
        raise ValueError("unit caches are required")
    check_placement(inst, P0)
    pick = _schedule(schedule)
    P = tuple(P0)
    value = potential(inst, P)
    log: list = []
    cursor = 0
    n = inst.n
    while True:
        if pick is None:
            move = None
            for off in range(n):
                i = (cursor + off) % n
                move = improving_move(inst, P, i)
                if move is not None:
                    break
            if move is None:
                break
            cursor = (i + 1) % n
        else:
            unhappy = [i for i in range(n) if improving_move(inst, P, i) is not None]
            if not unhappy:
                break
            i = pick(unhappy)
            move = improving_move(inst, P, i)
        if len(log) >= max_steps:
            raise RuntimeError(f"dynamics did not settle within {max_steps} steps")
        (before,) = tuple(P[i])
        (after,) = tuple(move)
        P = P[:i] + (move,) + P[i + 1:]
        new = potential(inst, P)
        if not new > value:
            raise NonIncreasingPotential(f"step {len(log) + 1} by node {i} did not raise the potential")
        value = new
        log.append(StepRecord(len(log) + 1, i, before, after, value))
    return P, log


# two objects ------------------------------------------------------------

def distance_ladder(costs) -> tuple:
    """Sorted distinct access costs, always starting at 0."""
    n = len(costs)
    values = {costs[i][j] for i in range(n) for j in range(n) if i != j}
    return tuple(sorted(values | {Fraction(0)}))


@dataclass
class TwoObjectRun:
    placement: Placement
    deviations: int
    bound: int
    log: list


def _extended(unit: Instance, t_alpha, t_beta) -> Instance:
    """The game plus one fictional player per object at uniform distance.

    At equal distance a real node is strictly preferred to a fictional one.
    ``None`` removes the corresponding fictional player.
    """
    n = unit.n
    extra = [(0, t) for t in (t_alpha,) if t is not None] + [(1, t) for t in (t_beta,) if t is not None]
    N = n + len(extra)
    costs = [list(unit.costs[i]) + [t for _, t in extra] for i in range(n)]
    for k, (_, t) in enumerate(extra):
        costs.append([t] * N)
        costs[-1][n + k] = Fraction(0)
    ranks = []
    for i in range(n):
        keys = [(costs[i][j], 0 if j < n else 1) for j in range(N)]
        dense = {key: r for r, key in enumerate(sorted(set(keys)))}
        ranks.append([dense[key] for key in keys])
    for k in range(len(extra)):
        ranks.append([0 if j == n + k else 1 for j in range(N)])
    owner = list(unit.clone_of or range(n)) + [max(unit.clone_of or range(n), default=-1) + 1 + k for k in range(len(extra))]
    pinned = list(unit.pinned) + [frozenset((a,)) for a, _ in extra]
    common = dict(
        objects=unit.objects, capacities=(1,) * N, ranks=ranks, costs=costs,
        pinned=pinned, clone_of=owner,
    )
    if unit.utility == "sum":
        return Instance(weights=list(unit.weights) + [[0] * unit.m] * len(extra), **common)
    return Instance(interests=list(unit.interests) + [frozenset()] * len(extra), **common)


def run_two_object(inst: Instance, trace: Optional[Callable[[str], None]] = None) -> TwoObjectRun:
    """Distance sweep with fictional players; see :func:`solve_two_object`."""
    if inst.m != 2:
        raise ValueError("exactly two objects are required")
    if inst.costs is None or not inst.symmetric:
        raise ValueError("symmetric access costs are required")
    if inst.utility == "oracle":
        raise ValueError("sum or binary utilities are required")
    unit, fmap = split_capacities(inst)
    n = unit.n
    free = unit.free_nodes()
    ladder = distance_ladder(unit.costs)
    bound = n ** 3
    log: list = []
    deviations = 0

    ext = _extended(unit, ladder[0], ladder[0])
    P = list(unit.pinned) + [frozenset((0,)), frozenset((1,))]
    for i in range(n):
        if P[i] is None:
            P[i] = frozenset((0,))
    P = tuple(P)
    P = tuple(best_response(ext, P, i) if i in free else P[i] for i in range(len(P)))

    def settle(ext_inst, P, tag):
        nonlocal deviations
        while True:
            for i in free:
                move = improving_move(ext_inst, P, i)
                if move is not None:
                    break
            else:
                return P
            deviations += 1
            if deviations > bound:
                raise DeviationBoundExceeded(f"more than {bound} deviations")
            line = f"{tag},{i},{min(P[i])}->{min(move)}"
            log.append(line)
            if trace is not None:
                trace(line)
            P = P[:i] + (move,) + P[i + 1:]

    for level in ladder[1:]:
        ext = _extended(unit, level, ladder[ladder.index(level) - 1])
        P = settle(ext, P, f"alpha@{level}")
        ext = _extended(unit, level, level)
        P = settle(ext, P, f"beta@{level}")
    P = P[:n]
    P = settle(unit, P, "removed")
    return TwoObjectRun(fmap(P), deviations, bound, log)


def solve_two_object(inst: Instance, trace: Optional[Callable[[str], None]] = None) -> Placement:
    """Equilibrium of a two-object game on a symmetric network.

    Two fictional players, one per object, start at distance 0 from every
    node, so each node simply stores the object it prefers.  They are then
    moved out one distance level at a time (first the one holding the first
    object, then the other), letting unhappy nodes respond after each move,
    and finally removed.
    """
    return run_two_object(inst, trace).placement
