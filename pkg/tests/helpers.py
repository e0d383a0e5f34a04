"""Random instance generators and independent reference computations for tests."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction as F

from csrgames.model import Instance


def with_server(costs, *, weights=None, interests=None, d_srv=F(10), capacities=None, m=None):
    """Append a frozen server node at distance ``d_srv`` from everybody."""
    n = len(costs)
    if m is None:
        m = len(weights[0]) if weights is not None else 1 + max((max(s) for s in interests if s), default=0)
    N = n + 1
    C = [[F(0) if i == j else F(d_srv) for j in range(N)] for i in range(N)]
    for i in range(n):
        for j in range(n):
            C[i][j] = F(costs[i][j])
    kw = {}
    if weights is not None:
        kw["weights"] = [list(r) for r in weights] + [[F(0)] * m]
    else:
        kw["interests"] = [frozenset(s) for s in interests] + [frozenset()]
    caps = list(capacities or [1] * n) + [m]
    pinned = [None] * n + [frozenset(range(m))]
    return Instance.from_costs(C, capacities=caps, pinned=pinned, server=n,
                               objects=tuple(f"o{a}" for a in range(m)), **kw)


def rand_ultrametric(rng: random.Random, n: int) -> list:
    """Ultrametric costs from random cluster merges at nondecreasing levels."""
    clusters = [[i] for i in range(n)]
    d = [[F(0)] * n for _ in range(n)]
    level = F(0)
    while len(clusters) > 1:
        level += F(rng.randint(0, 4), rng.choice([1, 2, 3])) + (1 if level == 0 else 0)
        k = rng.randint(2, min(3, len(clusters)))
        pick = rng.sample(range(len(clusters)), k)
        for p in pick:
            for q in pick:
                if p != q:
                    for a in clusters[p]:
                        for b in clusters[q]:
                            d[a][b] = level
        merged = [x for p in pick for x in clusters[p]]
        clusters = [c for idx, c in enumerate(clusters) if idx not in pick] + [merged]
    return d


def rand_symmetric_costs(rng: random.Random, n: int, top: int = 6) -> list:
    d = [[F(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i):
            d[i][j] = d[j][i] = F(rng.randint(1, top))
    return d


def rand_directed_costs(rng: random.Random, n: int, top: int = 6) -> list:
    return [[F(0) if i == j else F(rng.randint(1, top)) for j in range(n)] for i in range(n)]


def rand_weights(rng: random.Random, n: int, m: int) -> list:
    return [[F(rng.randint(0, 6), rng.choice([1, 2, 3])) for _ in range(m)] for _ in range(n)]


def rand_interests(rng: random.Random, n: int, m: int, p: float = 0.6) -> list:
    return [frozenset(a for a in range(m) if rng.random() < p) for _ in range(n)]


def rand_ranks(rng: random.Random, n: int, levels: int = 3) -> list:
    return [[0 if i == j else rng.randint(1, levels) for j in range(n)] for i in range(n)]


# fractional access: independent LP vertex enumeration ------------------------

def lp_vertex_access_cost(amounts, dists):
    """min sum x_j d_j s.t. sum x_j = 1, 0 <= x_j <= amounts[j], by vertex enumeration.

    A vertex has every coordinate at a bound except possibly one, which the
    equality constraint then fixes.  Returns None when infeasible.
    """
    k = len(amounts)
    best = None
    for free in range(-1, k):
        for bounds in itertools.product((0, 1), repeat=k):
            x = [F(0) if b == 0 else F(amounts[j]) for j, b in enumerate(bounds)]
            if free >= 0:
                x[free] = F(1) - (sum(x) - x[free])
                if not 0 <= x[free] <= amounts[free]:
                    continue
            elif sum(x) != 1:
                continue
            cost = sum(xj * F(dj) for xj, dj in zip(x, dists))
            if best is None or cost < best:
                best = cost
    return best


# digraphs ---------------------------------------------------------------------

def _strongly_connected(n: int, arcs) -> bool:
    succ = {v: [] for v in range(n)}
    pred = {v: [] for v in range(n)}
    for u, v in arcs:
        succ[u].append(v)
        pred[v].append(u)

    def reach(adj):
        seen, todo = {0}, [0]
        while todo:
            x = todo.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    todo.append(y)
        return len(seen) == n

    return reach(succ) and reach(pred)


def nonisomorphic_strong_digraphs(n: int) -> list:
    """One arc list per isomorphism class of strongly connected simple digraphs on n vertices.

    Canonical form: the smallest adjacency bitmask over all vertex
    permutations, computed for every labelled digraph at once with numpy.
    """
    import numpy as np

    if n == 1:
        return [[]]
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    bit = {p: k for k, p in enumerate(pairs)}
    masks = np.arange(1 << len(pairs), dtype=np.uint32)
    canon = masks.copy()
    for perm in itertools.permutations(range(n)):
        if perm == tuple(range(n)):
            continue
        out = np.zeros_like(masks)
        for (u, v), k in bit.items():
            out |= ((masks >> np.uint32(k)) & np.uint32(1)) << np.uint32(bit[(perm[u], perm[v])])
        np.minimum(canon, out, out=canon)
    reps = np.unique(canon)
    result = []
    for mask in reps.tolist():
        arcs = [p for p, k in bit.items() if mask >> k & 1]
        if _strongly_connected(n, arcs):
            result.append(arcs)
    return result


def brute_all_stable(n: int, arcs) -> bool:
    succ = [[] for _ in range(n)]
    for u, v in arcs:
        succ[u].append(v)
    return any(
        all(any(col[w] != col[v] for w in succ[v]) for v in range(n))
        for col in itertools.product((0, 1), repeat=n)
    )


def rand_strong_digraph(rng: random.Random, n: int, p: float = 0.3) -> list:
    """Random strongly connected digraph: a Hamiltonian cycle plus random arcs."""
    order = list(range(n))
    rng.shuffle(order)
    arcs = {(order[k], order[(k + 1) % n]) for k in range(n)} if n > 1 else set()
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < p:
                arcs.add((u, v))
    return sorted(arcs)


# 3-CNF formulas -------------------------------------------------------------------

def formula_orbits(max_vars: int = 3, max_clauses: int = 3) -> list:
    """Every 3-CNF formula with at least one clause, up to variable renaming,
    literal negation, clause order and literal order.

    Formulas that differ only by literal repetitions inside a clause give the
    same instance (the clause node links to the same literal nodes), so a
    clause is represented by its literal set padded back to three literals.
    """
    out = []
    for nv in range(1, max_vars + 1):
        lits = [s * v for v in range(1, nv + 1) for s in (1, -1)]
        sets = sorted({tuple(sorted(set(c))) for c in itertools.product(lits, repeat=3)})
        perms = list(itertools.permutations(range(1, nv + 1)))
        signs = list(itertools.product((1, -1), repeat=nv))
        for k in range(1, max_clauses + 1):
            seen = set()
            for cl in itertools.combinations_with_replacement(sets, k):
                best = None
                for perm in perms:
                    for sg in signs:
                        def m(l):
                            v = abs(l)
                            return perm[v - 1] * sg[v - 1] * (1 if l > 0 else -1)
                        key = tuple(sorted(tuple(sorted({m(l) for l in c})) for c in cl))
                        if best is None or key < best:
                            best = key
                if best not in seen:
                    seen.add(best)
                    out.append((nv, tuple((c + (c[-1],) * 3)[:3] for c in best)))
    return out
