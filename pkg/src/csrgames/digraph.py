"""Two objects with binary preferences, solved through digraph colorings.

With two objects a placement is a red/blue coloring of the nodes (red is
object 0, blue is object 1).  When every node wants both objects and its
preferences are given by a digraph, a node is stable exactly when it has an
outgoing arc to a node of the other color.  The chain implemented here is

    2BIN instance -> digraph instance -> digraph where everybody wants both
    -> strongly connected components -> even cycles and ear decompositions

and the coloring found at the end is mapped back to a placement.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterator, Optional

import networkx as nx

from .errors import CapacityNotUnit, NotStronglyConnected, SearchBudgetExceeded
from .oracle import find_equilibrium
from .model import Instance, Placement, best_response, is_equilibrium, split_capacities

__all__ = [
    "RED",
    "BLUE",
    "Digraph",
    "Condensation",
    "ExactReduction",
    "stable",
    "unstable_vertices",
    "twobin_to_dirbin",
    "dirbin_to_exact",
    "scc_condensation",
    "simple_cycles",
    "find_even_cycle",
    "ear_decomposition_from_cycle",
    "stabilize_scc",
    "stabilize_1critical",
    "solve_exact_2dirbin",
    "solve_2bin",
    "DEFAULT_CYCLE_BUDGET",
]

RED, BLUE = 0, 1
DEFAULT_CYCLE_BUDGET = 10**6


@dataclass(frozen=True)
class Digraph:
    """Simple digraph on vertices ``0..n-1``: no self-loops, no parallel arcs."""

    n: int
    arcs: tuple

    def __post_init__(self):
        arcs = sorted({(int(u), int(v)) for u, v in self.arcs})
        for u, v in arcs:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"arc ({u}, {v}) leaves the vertex range")
        object.__setattr__(self, "arcs", tuple(arcs))
        succ = [[] for _ in range(self.n)]
        for u, v in arcs:
            succ[u].append(v)
        object.__setattr__(self, "_succ", tuple(tuple(s) for s in succ))

    def succ(self, v: int) -> tuple:
        return self._succ[v]

    def induced(self, vertices) -> tuple:
        """Subgraph on ``vertices`` relabelled ``0..k-1``, plus the label list."""
        verts = sorted(vertices)
        local = {v: k for k, v in enumerate(verts)}
        arcs = [(local[u], local[v]) for u, v in self.arcs if u in local and v in local]
        return Digraph(len(verts), arcs), verts

    def is_strongly_connected(self) -> bool:
        if self.n <= 1:
            return True
        return nx.is_strongly_connected(_to_networkx(self))

    @classmethod
    def parse(cls, text: str) -> "Digraph":
        """Read ``n`` on the first line, then one ``tail head`` pair per line."""
        lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines:
            raise ValueError("empty digraph file")
        n = int(lines[0])
        arcs = []
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 2:
                raise ValueError(f"bad arc line {ln!r}")
            arcs.append((int(parts[0]), int(parts[1])))
        return cls(n, arcs)

    def dump(self) -> str:
        return "\n".join([str(self.n)] + [f"{u} {v}" for u, v in self.arcs]) + "\n"


def stable(g: Digraph, coloring, v: int) -> bool:
    """A vertex is stable iff one of its outgoing arcs is bichromatic."""
    return any(coloring[w] != coloring[v] for w in g.succ(v))


def unstable_vertices(g: Digraph, coloring) -> list:
    return [v for v in range(g.n) if not stable(g, coloring, v)]


# strongly connected components -----------------------------------------

@dataclass(frozen=True)
class Condensation:
    """SCCs listed sinks-first (reverse topological order) and the DAG on them."""

    components: tuple
    comp_of: tuple
    arcs: tuple

    def is_sink(self, c: int) -> bool:
        return not any(a == c for a, _ in self.arcs)


def _to_networkx(g: Digraph) -> nx.DiGraph:
    G = nx.DiGraph()
    G.add_nodes_from(range(g.n))
    G.add_edges_from(g.arcs)
    return G


def scc_condensation(g: Digraph) -> Condensation:
    """Strongly connected components, sinks first, with the DAG between them."""
    dag = nx.condensation(_to_networkx(g))
    members = {c: tuple(sorted(dag.nodes[c]["members"])) for c in dag}
    order = list(nx.lexicographical_topological_sort(dag, key=lambda c: members[c][0]))[::-1]
    comps = [members[c] for c in order]
    comp_of = [0] * g.n
    for c, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = c
    arcs = sorted({(comp_of[u], comp_of[v]) for u, v in g.arcs if comp_of[u] != comp_of[v]})
    return Condensation(tuple(comps), tuple(comp_of), tuple(arcs))


# cycles -------------------------------------------------------------------

def simple_cycles(g: Digraph) -> Iterator[list]:
    """Every simple directed cycle, once each, generated lazily."""
    return nx.simple_cycles(_to_networkx(g))


def find_even_cycle(g: Digraph, budget: int = DEFAULT_CYCLE_BUDGET) -> Optional[list]:
    """An even simple cycle ``[v0, ..., v_{k-1}]`` (arcs v_i -> v_{i+1}), or None.

    Exhaustive cycle enumeration; raises :class:`SearchBudgetExceeded` after
    ``budget`` odd cycles without success.
    """
    seen = 0
    for cyc in simple_cycles(g):
        if len(cyc) % 2 == 0:
            return cyc
        seen += 1
        if seen >= budget:
            raise SearchBudgetExceeded(f"no even cycle among the first {budget} cycles")
    return None


def _cycle_through(g: Digraph, v: int) -> list:
    """Shortest cycle through v (BFS from v's successors back to v)."""
    prev = {v: None}
    queue = deque([v])
    while queue:
        x = queue.popleft()
        for y in g.succ(x):
            if y == v:
                path = [x]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return path[::-1]
            if y not in prev:
                prev[y] = x
                queue.append(y)
    raise NotStronglyConnected(f"no cycle through vertex {v}")


def ear_decomposition_from_cycle(g: Digraph, cycle) -> list:
    """Ears covering every arc of a strongly connected g outside ``cycle``.

    Each ear is a vertex path ``[s, x1, ..., xk, t]`` whose ends are already
    covered and whose inner vertices are new; a bare ``[s, t]`` is a single
    arc between covered vertices.
    """
    if not g.is_strongly_connected():
        raise NotStronglyConnected("ear decompositions need a strongly connected digraph")
    cycle = list(cycle)
    k = len(cycle)
    covered = set(cycle)
    used = {(cycle[t], cycle[(t + 1) % k]) for t in range(k)} if k > 1 else set()
    for arc in used:
        if arc not in set(g.arcs):
            raise ValueError(f"cycle arc {arc} is not in the digraph")
    ears: list = []
    while len(used) < len(g.arcs):
        u, v = next((u, v) for u, v in g.arcs if (u, v) not in used and u in covered)
        if v in covered:
            ear = [u, v]
        else:
            prev = {v: None}
            queue = deque([v])
            end = None
            while queue and end is None:
                x = queue.popleft()
                for y in g.succ(x):
                    if y in covered:
                        end, last = y, x
                        break
                    if y not in prev:
                        prev[y] = x
                        queue.append(y)
            inner = [last]
            while prev[inner[-1]] is not None:
                inner.append(prev[inner[-1]])
            ear = [u] + inner[::-1] + [end]
        ears.append(ear)
        covered.update(ear)
        used.update(zip(ear, ear[1:]))
    return ears


def _color_backwards(colors: dict, path) -> None:
    """Give each uncoloured vertex of ``path`` the opposite color of its successor."""
    for t in range(len(path) - 2, -1, -1):
        if path[t] not in colors:
            colors[path[t]] = 1 - colors[path[t + 1]]


def _color_scc(g: Digraph, cycle, start_color: int) -> dict:
    colors = {cycle[0]: start_color}
    _color_backwards(colors, list(cycle) + [cycle[0]])
    for ear in ear_decomposition_from_cycle(g, cycle):
        _color_backwards(colors, ear)
    return colors


def stabilize_scc(g: Digraph, even_cycle) -> tuple:
    """All-stable coloring of a strongly connected g from one of its even cycles."""
    if len(even_cycle) % 2:
        raise ValueError("the starting cycle must have even length")
    colors = _color_scc(g, even_cycle, RED)
    return tuple(colors[v] for v in range(g.n))


def stabilize_1critical(g: Digraph, start: Optional[int] = None) -> tuple:
    """Coloring of a strongly connected g with at most one unstable vertex.

    Returns ``(coloring, odd)`` where ``odd`` is the unstable vertex or None.
    With an even cycle available everything is stabilized; otherwise the
    cycle through ``start`` (default 0) is colored backwards from ``start``,
    which is then the only vertex that may stay unstable.
    """
    if g.n == 1:
        return (RED,), 0
    if not g.is_strongly_connected():
        raise NotStronglyConnected("1-critical coloring needs a strongly connected digraph")
    if start is None:
        even = find_even_cycle(g)
        if even is not None:
            return stabilize_scc(g, even), None
        start = 0
    colors = _color_scc(g, _cycle_through(g, start), RED)
    coloring = tuple(colors[v] for v in range(g.n))
    bad = unstable_vertices(g, coloring)
    return coloring, (bad[0] if bad else None)


def solve_exact_2dirbin(g: Digraph, budget: int = DEFAULT_CYCLE_BUDGET) -> Optional[tuple]:
    """All-stable coloring of g, or None when some sink component has no even cycle.

    Components are handled sinks first.  A sink component needs an even
    cycle.  Any other component has an arc into an already colored one; its
    tail takes the color opposite to the head and the rest of the component
    is colored backwards from there.
    """
    cond = scc_condensation(g)
    colors: dict = {}
    for c, comp in enumerate(cond.components):
        sub, labels = g.induced(comp)
        if cond.is_sink(c):
            if sub.n == 1:
                return None
            even = find_even_cycle(sub, budget)
            if even is None:
                return None
            local = stabilize_scc(sub, even)
            for k, v in enumerate(labels):
                colors[v] = local[k]
            continue
        tail, head = next((u, v) for u, v in g.arcs if cond.comp_of[u] == c and cond.comp_of[v] != c)
        start_color = 1 - colors[head]
        if sub.n == 1:
            colors[tail] = start_color
            continue
        start = labels.index(tail)
        local = _color_scc(sub, _cycle_through(sub, start), start_color)
        for k, v in enumerate(labels):
            colors[v] = local[k]
    return tuple(colors[v] for v in range(g.n))


# reductions -----------------------------------------------------------------

def _require_2bin(inst: Instance) -> None:
    if inst.m != 2 or inst.utility != "binary":
        raise ValueError("two objects with binary preferences are required")


def twobin_to_dirbin(inst: Instance) -> tuple:
    """Digraph instance with an arc from i to every most i-preferred other node.

    Returns ``(digraph_instance, back_map)``; the node set is unchanged, so
    the back map is the identity on placements.
    """
    _require_2bin(inst)
    for i, c in enumerate(inst.capacities):
        if c != 1:
            raise CapacityNotUnit(i, c)
    arcs = []
    for i in range(inst.n):
        row = inst.ranks[i]
        others = [j for j in range(inst.n) if j != i]
        if not others:
            continue
        best = min(row[j] for j in others)
        arcs.extend((i, j) for j in others if row[j] == best)
    out = Instance.from_digraph(inst.n, arcs, interests=inst.interests,
                                objects=inst.objects, pinned=inst.pinned, names=inst.names)
    return out, (lambda P: tuple(P))


@dataclass(frozen=True)
class ExactReduction:
    """Digraph where every vertex wants both colors, with the way back."""

    graph: Digraph
    n_original: int
    red_side: tuple
    blue_side: tuple

    def __call__(self, coloring) -> tuple:
        colors = list(coloring)
        if self.red_side:
            # The alternating cycle links every single-interest vertex, so one
            # weakly connected component holds them all; flip it if needed.
            probe = self.red_side[0]
            if colors[probe] != RED:
                comp = _weak_component(self.graph, probe)
                for v in comp:
                    colors[v] = 1 - colors[v]
        return tuple(colors[: self.n_original])


def _weak_component(g: Digraph, v: int) -> set:
    return nx.node_connected_component(_to_networkx(g).to_undirected(), v)


def dirbin_to_exact(g: Digraph, interests) -> ExactReduction:
    """Make every vertex want both colors without changing stability.

    Vertices wanting at most one color lose their outgoing arcs; each vertex
    wanting nothing gets a fresh partner joined to it by a 2-cycle; the
    red-only and blue-only vertices (padded with fresh vertices to equal
    numbers) are joined by one cycle alternating between the two sides.
    """
    interests = [frozenset(s) for s in interests]
    n = g.n
    single = {v for v in range(n) if len(interests[v]) <= 1}
    arcs = [(u, v) for u, v in g.arcs if u not in single]
    nxt = n
    for v in range(n):
        if not interests[v]:
            arcs += [(v, nxt), (nxt, v)]
            nxt += 1
    reds = [v for v in range(n) if interests[v] == {RED}]
    blues = [v for v in range(n) if interests[v] == {BLUE}]
    while len(blues) < len(reds):
        blues.append(nxt)
        nxt += 1
    while len(reds) < len(blues):
        reds.append(nxt)
        nxt += 1
    k = len(reds)
    for t in range(k):
        arcs.append((reds[t], blues[t]))
        arcs.append((blues[t], reds[(t + 1) % k]))
    return ExactReduction(Digraph(nxt, arcs), n, tuple(reds), tuple(blues))


def solve_2bin(inst: Instance, budget: int = DEFAULT_CYCLE_BUDGET) -> Optional[Placement]:
    """Equilibrium of a two-object binary-preference game, or None if none exists.

    Larger caches are split into unit clones first.  Frozen nodes behave like
    nodes interested only in the object they are pinned to.
    """
    _require_2bin(inst)
    unit, fmap = split_capacities(inst)
    if unit.n == 1:
        P = (unit.pinned[0] or best_response(unit, (frozenset((RED,)),), 0),)
        return fmap(P)
    if any(p is not None and len(p) != 1 for p in unit.pinned):
        # A node frozen to hold nothing has no color; leave it to the search.
        return find_equilibrium(inst)
    interests = [
        unit.interests[i] if unit.pinned[i] is None else unit.pinned[i]
        for i in range(unit.n)
    ]
    dir_inst, _ = twobin_to_dirbin(unit)
    reduction = dirbin_to_exact(Digraph(unit.n, dir_inst.arcs), interests)
    coloring = solve_exact_2dirbin(reduction.graph, budget)
    if coloring is None:
        return None
    colors = reduction(coloring)
    P = tuple(frozenset((c,)) for c in colors)
    result = fmap(P)
    verdict = is_equilibrium(inst, result)
    if not verdict:
        raise AssertionError(f"reduction produced a non-equilibrium (node {verdict.witness})")
    return result
