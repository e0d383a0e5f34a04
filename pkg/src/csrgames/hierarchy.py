"""Hierarchical (ultrametric) networks and the fictional-player solver.

A hierarchical network is a rooted tree whose leaves are the nodes of the
game.  Every internal vertex carries a label, labels never decrease towards
the root, and the access cost between two nodes is the label of their lowest
common ancestor.

The solver starts with one fictional player per (object, internal vertex)
pair, which makes every real node's best response independent of the others,
and then retires the fictional players one by one while keeping the current
placement an equilibrium of the extended game.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .errors import InconsistentOracle, NoOtherHolder, NotUltrametric, StepBoundExceeded
from .model import INF, Cmp, Instance, Placement, as_fraction, compare, split_capacities

__all__ = [
    "HierarchyTree",
    "HierarchicalRun",
    "costs_to_tree",
    "is_ultrametric",
    "lca",
    "pair_pref_sum",
    "pair_pref_oracle",
    "mu",
    "solve_hierarchical",
    "run_hierarchical",
]

# An ancestor argument of ``None`` stands for a virtual vertex above the root
# with label +inf: "nobody else holds this object".
Ancestor = Optional[int]


@dataclass(frozen=True)
class HierarchyTree:
    """Rooted tree with leaves ``0..n_leaves-1`` and labelled internal vertices.

    Internal vertex ``k`` (0-based) is vertex ``n_leaves + k``.  ``parent``
    covers all vertices; the root's parent is ``None``.
    """

    n_leaves: int
    labels: tuple
    parent: tuple
    _depth: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(as_fraction(x) for x in self.labels))
        object.__setattr__(self, "parent", tuple(self.parent))
        total = self.n_leaves + len(self.labels)
        if len(self.parent) != total:
            raise ValueError("parent list must cover leaves and internal vertices")
        roots = [v for v in range(total) if self.parent[v] is None]
        if len(roots) != 1:
            raise ValueError("tree must have exactly one root")
        depth = [None] * total

        def walk(v, seen=()):
            if depth[v] is None:
                p = self.parent[v]
                if p is None:
                    depth[v] = 0
                else:
                    if p < self.n_leaves or p in seen:
                        raise ValueError("parents must be internal vertices without cycles")
                    depth[v] = walk(p, seen + (v,)) + 1
            return depth[v]

        for v in range(total):
            walk(v)
        object.__setattr__(self, "_depth", tuple(depth))
        for v in range(total):
            p = self.parent[v]
            if p is not None and self.label(p) < self.label(v):
                raise ValueError("labels must not decrease towards the root")

    @property
    def root(self) -> int:
        return next(v for v, p in enumerate(self.parent) if p is None)

    @property
    def size(self) -> int:
        return len(self.parent)

    def internal(self) -> range:
        return range(self.n_leaves, self.size)

    def label(self, v: Ancestor):
        if v is None:
            return INF
        return Fraction(0) if v < self.n_leaves else self.labels[v - self.n_leaves]

    def depth(self, v: Ancestor) -> int:
        return -1 if v is None else self._depth[v]

    def children(self, v: int) -> list:
        return [u for u, p in enumerate(self.parent) if p == v]

    def lca(self, u: int, v: int) -> int:
        du, dv = self._depth[u], self._depth[v]
        while du > dv:
            u, du = self.parent[u], du - 1
        while dv > du:
            v, dv = self.parent[v], dv - 1
        while u != v:
            u, v = self.parent[u], self.parent[v]
        return u

    def cost_matrix(self) -> tuple:
        n = self.n_leaves
        return tuple(tuple(self.label(self.lca(i, j)) for j in range(n)) for i in range(n))


def lca(tree: HierarchyTree, i: int, j: int) -> int:
    """Lowest common ancestor; ``lca(i, i) == i``, whose label is 0."""
    return tree.lca(i, j)


def _ultrametric_violation(costs) -> Optional[tuple]:
    n = len(costs)
    for i in range(n):
        for j in range(n):
            if costs[i][j] != costs[j][i]:
                return (i, j, i)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if costs[i][k] > max(costs[i][j], costs[j][k]):
                    return (i, j, k)
    return None


def is_ultrametric(costs) -> bool:
    return _ultrametric_violation(costs) is None


def costs_to_tree(costs) -> HierarchyTree:
    """Build the labelled tree of an ultrametric cost matrix.

    Clusters are merged level by level over the sorted distinct costs; each
    merge of two or more clusters creates one internal vertex.
    """
    costs = [[as_fraction(x) for x in row] for row in costs]
    bad = _ultrametric_violation(costs)
    if bad is not None:
        raise NotUltrametric(*bad)
    n = len(costs)
    parent: list = [None] * n
    labels: list = []
    if n == 1:
        return HierarchyTree(1, (Fraction(0),), (1, None))
    uf = list(range(n))
    top = list(range(n))  # tree vertex representing each union-find root

    def find(x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    levels = sorted({costs[i][j] for i in range(n) for j in range(n) if i != j})
    for level in levels:
        groups: dict = {}
        for i in range(n):
            for j in range(i + 1, n):
                if costs[i][j] == level:
                    a, b = find(i), find(j)
                    if a != b:
                        groups.setdefault(a, set()).add(b)
        # merge connected clusters at this level
        comp_uf = {}

        def cfind(x):
            while comp_uf.setdefault(x, x) != x:
                x = comp_uf[x]
            return x

        for a, bs in groups.items():
            for b in bs:
                ra, rb = cfind(a), cfind(b)
                if ra != rb:
                    comp_uf[max(ra, rb)] = min(ra, rb)
        members: dict = {}
        for x in list(comp_uf):
            members.setdefault(cfind(x), set()).add(x)
        for rep in sorted(members):
            clusters = sorted(members[rep])
            v = n + len(labels)
            labels.append(level)
            parent.append(None)
            for c in clusters:
                parent[top[c]] = v
            for c in clusters:
                uf[c] = rep
            top[rep] = v
    return HierarchyTree(n, tuple(labels), tuple(parent))


# pair preferences -----------------------------------------------------

def _pair_value(w: Fraction, tree: HierarchyTree, v: Ancestor):
    # (weight that would go missing, distance saved)
    if v is None:
        return w, Fraction(0)
    return Fraction(0), w * tree.label(v)


def pair_pref_sum(inst: Instance, tree: HierarchyTree, i: int, first: tuple, second: tuple) -> Cmp:
    """Compare keeping ``first=(a, v)`` against ``second=(b, w)`` for node i.

    Keeping object a whose nearest other copy sits below ancestor v saves
    ``r_i(a) * label(v)``; the larger saving wins.
    """
    (a, v), (b, w) = first, second
    x = _pair_value(inst.weights[i][a], tree, v)
    y = _pair_value(inst.weights[i][b], tree, w)
    return Cmp.FIRST if x > y else Cmp.SECOND if y > x else Cmp.TIE


def _witness(inst: Instance, tree: HierarchyTree, i: int, a: int, v: Ancestor,
             b: int, w: Ancestor, reverse: bool) -> Optional[list]:
    """Placement of the other nodes realising the nearest copies (a at v, b at w)."""
    n, m = inst.n, inst.m
    depth = tree.depth
    P: list = [None] * n
    P[i] = frozenset()
    meet = [tree.lca(i, x) if x != i else i for x in range(n)]

    def allowed(x, obj):
        target = v if obj == a else w
        return target is not None and depth(meet[x]) <= depth(target)

    have = {a: False, b: False}
    for x in range(n):
        pin = inst.pinned[x]
        if x == i or pin is None:
            continue
        for obj in (a, b):
            if obj in pin:
                if not allowed(x, obj):
                    return None
                if meet[x] == (v if obj == a else w):
                    have[obj] = True
        P[x] = pin
    order = [x for x in range(n) if x != i and P[x] is None]
    if reverse:
        order.reverse()
    for obj, target in ((a, v), (b, w)):
        if target is None or have[obj]:
            continue
        pick = next((x for x in order if P[x] is None and meet[x] == target), None)
        if pick is None:
            # Only one free leaf sits at this level: let it carry both copies.
            # The extra copy exceeds its cache, but only nearest copies matter.
            pick = next((x for x in order if P[x] and meet[x] == target
                         and inst.pinned[x] is None), None)
            if pick is None:
                return None
            P[pick] = P[pick] | {obj}
            continue
        P[pick] = frozenset((obj,))
    fillers = [g for g in range(m) if g not in (a, b)]
    for x in order:
        if P[x] is not None:
            continue
        if fillers:
            P[x] = frozenset((fillers[-1] if reverse else fillers[0],))
        elif not reverse and allowed(x, a):
            P[x] = frozenset((a,))
        elif not reverse and allowed(x, b):
            P[x] = frozenset((b,))
        else:
            P[x] = frozenset()
    return P


def pair_pref_oracle(inst: Instance, tree: HierarchyTree, i: int, first: tuple,
                     second: tuple, cache: Optional[dict] = None, check: bool = True) -> Cmp:
    """Pair preference derived from the instance's placement comparisons.

    Same object: the pair whose nearest other copy is farther wins.  Different
    objects: build a placement of the other nodes in which the nearest copies
    of the two objects sit exactly below the given ancestors and ask which of
    the two single-object caches node i prefers.  With ``check`` a second,
    differently built witness must agree, else :class:`InconsistentOracle`.
    """
    (a, v), (b, w) = first, second
    if a == b:
        dv, dw = tree.depth(v), tree.depth(w)
        return Cmp.FIRST if dv < dw else Cmp.SECOND if dw < dv else Cmp.TIE
    key = (i, a, v, b, w)
    if cache is not None and key in cache:
        return cache[key]
    answers = []
    for reverse in ((False, True) if check else (False,)):
        rest = _witness(inst, tree, i, a, v, b, w, reverse)
        if rest is None:
            continue
        P = tuple(frozenset((a,)) if x == i else rest[x] for x in range(inst.n))
        Q = tuple(frozenset((b,)) if x == i else rest[x] for x in range(inst.n))
        answers.append(compare(inst, i, P, Q))
    if not answers:
        return Cmp.TIE
    if len(set(answers)) > 1:
        raise InconsistentOracle(f"node {i} ranks {(a, v)} vs {(b, w)} inconsistently")
    if cache is not None:
        cache[key] = answers[0]
    return answers[0]


def mu(inst: Instance, tree: HierarchyTree, P: Placement, i: int) -> tuple:
    """``(object held by i, lca of i with the nearest other holder)``."""
    (a,) = tuple(P[i])
    others = [x for x in range(inst.n) if x != i and a in P[x]]
    if not others:
        raise NoOtherHolder(f"node {i} is the only holder of object {a}")
    v = max((tree.lca(i, x) for x in others), key=tree.depth)
    return a, v


# the solver -------------------------------------------------------------

@dataclass
class HierarchicalRun:
    """Outcome of :func:`run_hierarchical` on the unit-capacity instance."""

    placement: Placement
    unit_placement: Placement
    steps: int
    bound: int
    log: list


class _State:
    """Placement of real nodes plus the live fictional players."""

    def __init__(self, inst: Instance, tree: HierarchyTree):
        self.inst, self.tree = inst, tree
        n = inst.n
        self.n = n
        self.obj: dict = {}
        self.pos: dict = {}  # holder id -> tree vertex used for lca
        self.holders = [set() for _ in range(inst.m)]
        self.alive: list = []  # heap of fictional ids
        self.next_id = n
        self._lca: dict = {}

    def meet(self, x: int, y: int) -> int:
        key = (x, y) if x < y else (y, x)
        out = self._lca.get(key)
        if out is None:
            out = self._lca[key] = self.tree.lca(x, y)
        return out

    def hold(self, x: int, a: int, vertex: int) -> None:
        self.obj[x] = a
        self.pos[x] = vertex
        self.holders[a].add(x)

    def drop(self, x: int) -> None:
        self.holders[self.obj[x]].discard(x)

    def add_fictional(self, a: int, at: int) -> int:
        f = self.next_id
        self.next_id += 1
        self.hold(f, a, at)
        heapq.heappush(self.alive, f)
        return f

    def nearest(self, x: int, a: int) -> Ancestor:
        """Deepest lca between x and any other holder of a (None if none)."""
        best, best_d = None, -1
        px = self.pos[x]
        for h in self.holders[a]:
            if h == x:
                continue
            u = self.meet(px, self.pos[h])
            d = self.tree.depth(u)
            if d > best_d:
                best, best_d = u, d
        return best

    def mu(self, x: int) -> tuple:
        a = self.obj[x]
        return a, self.nearest(x, a)


def run_hierarchical(inst: Instance, trace: Optional[Callable[[str], None]] = None,
                     check: bool = False) -> HierarchicalRun:
    """Run the fictional-player algorithm and report placement and step count.

    Nodes with larger caches are split into unit clones first.  When ``check``
    is set, the extended placement is verified to be an equilibrium after
    every step (slow; meant for tests).
    """
    unit, fmap = split_capacities(inst)
    if inst.unit and inst.network == "tree" and inst.tree is not None:
        tree = inst.tree
    elif unit.costs is not None:
        tree = costs_to_tree(unit.costs)
    else:
        raise ValueError("hierarchical solving needs access costs or a tree")
    n, m = unit.n, unit.m
    if unit.utility == "sum":
        pref = lambda i, p, q: pair_pref_sum(unit, tree, i, p, q)
    else:
        cache: dict = {}
        pref = lambda i, p, q: pair_pref_oracle(unit, tree, i, p, q, cache)
    st = _State(unit, tree)
    free = [i for i in range(n) if unit.pinned[i] is None]
    for i in range(n):
        if unit.pinned[i] is not None:
            (a,) = tuple(unit.pinned[i]) or (0,)
            st.hold(i, a, i)
    for v in tree.internal():
        for a in range(m):
            st.add_fictional(a, v)
    for i in free:
        p = tree.parent[i]
        best = 0
        for a in range(1, m):
            if pref(i, (a, p), (best, p)) == Cmp.FIRST:
                best = a
        st.hold(i, best, i)

    bound = n * m + n * n * m
    steps = 0
    log: list = []
    depth = tree.depth
    while st.alive:
        if steps >= bound:
            raise StepBoundExceeded(f"more than {bound} steps")
        steps += 1
        j = heapq.heappop(st.alive)
        a, at = st.obj[j], st.pos[j]
        v = st.nearest(j, a)
        dv = depth(v)
        best_i, best_d = None, -1
        for i in free:
            x = st.meet(i, at)
            dx = depth(x)
            if dx <= dv:
                continue
            if pref(i, (a, v), st.mu(i)) == Cmp.FIRST and dx > best_d:
                best_i, best_d = i, dx
        size = len(st.alive) + 1
        st.drop(j)
        if best_i is None:
            line = f"{steps},{size},DELETE,{j}"
        else:
            b = st.obj[best_i]
            st.drop(best_i)
            st.hold(best_i, a, best_i)
            f = st.add_fictional(b, tree.parent[best_i])
            line = f"{steps},{size},SWAP,{j}:{best_i}:{f}"
        log.append(line)
        if trace is not None:
            trace(line)
        if check:
            _check_extended(st, free, pref)
    P_unit = tuple(frozenset((st.obj[i],)) for i in range(n))
    return HierarchicalRun(fmap(P_unit), P_unit, steps, bound, log)


def _check_extended(st: _State, free: list, pref) -> None:
    for i in free:
        cur = st.mu(i)
        for g in range(st.inst.m):
            if g == cur[0]:
                continue
            if pref(i, (g, st.nearest(i, g)), cur) == Cmp.FIRST:
                raise AssertionError(f"node {i} would switch to object {g}")


def solve_hierarchical(inst: Instance, trace: Optional[Callable[[str], None]] = None) -> Placement:
    """An equilibrium of a game on a hierarchical network."""
    return run_hierarchical(inst, trace).placement
