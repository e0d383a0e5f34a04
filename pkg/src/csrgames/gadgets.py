"""3SAT formulas and the reduction instances built from them.

Three families are generated from a formula: ``I1`` (directed network, two
objects, weighted sum utility), ``I2`` (undirected network, three objects)
and ``I3`` (directed network, three objects, binary preferences).  Each one
contains a pair of variable nodes per variable, a node per clause, a
coordinating node ``S`` and the three-node gadget ``A``, ``B``, ``C``.  A
frozen server holding every object sits at a fixed distance from everyone.

Only a handful of distances are prescribed for each family.  Every other
pair gets the shortest-path distance over the prescribed arcs (directed for
``I1``/``I3``, undirected for ``I2``), capped at the server distance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction as F
from typing import Optional

from .errors import Not3Sat, ParseError
from .model import INF, Instance

__all__ = [
    "CnfFormula",
    "parse_dimacs",
    "to_dimacs",
    "sat_bruteforce",
    "gen_I1",
    "gen_I2",
    "gen_I3",
    "GADGETS",
    "Layout",
    "layout",
]


@dataclass(frozen=True)
class CnfFormula:
    """A 3-CNF formula over variables ``1..n_vars``; literals are signed ints."""

    n_vars: int
    clauses: tuple

    def __post_init__(self):
        clauses = tuple(tuple(int(l) for l in c) for c in self.clauses)
        if self.n_vars < 0:
            raise ValueError("negative variable count")
        for c in clauses:
            if len(c) != 3:
                raise Not3Sat(f"clause {c} has {len(c)} literals")
            for lit in c:
                if lit == 0 or abs(lit) > self.n_vars:
                    raise ValueError(f"literal {lit} out of range")
        object.__setattr__(self, "clauses", clauses)

    def satisfied_by(self, assignment) -> bool:
        """``assignment[v-1]`` is the truth value of variable v."""
        return all(any((lit > 0) == bool(assignment[abs(lit) - 1]) for lit in c) for c in self.clauses)


def parse_dimacs(text: str) -> CnfFormula:
    """Read a DIMACS CNF file whose clauses all have three literals."""
    header = None
    literals: list = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None or len(parts) != 4 or parts[1] != "cnf":
                raise ParseError(f"bad problem line {line!r}")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise ParseError(f"bad problem line {line!r}") from None
            continue
        if header is None:
            raise ParseError("clause before the problem line")
        try:
            literals.extend(int(tok) for tok in line.split())
        except ValueError:
            raise ParseError(f"bad clause line {line!r}") from None
    if header is None:
        raise ParseError("missing problem line")
    n_vars, n_clauses = header
    clauses, current = [], []
    for lit in literals:
        if lit == 0:
            clauses.append(current)
            current = []
        else:
            if abs(lit) > n_vars:
                raise ParseError(f"literal {lit} exceeds the declared {n_vars} variables")
            current.append(lit)
    if current:
        raise ParseError("last clause is not terminated by 0")
    if len(clauses) != n_clauses:
        raise ParseError(f"expected {n_clauses} clauses, found {len(clauses)}")
    for c in clauses:
        if len(c) != 3:
            raise Not3Sat(f"clause {c} has {len(c)} literals")
    return CnfFormula(n_vars, tuple(tuple(c) for c in clauses))


def to_dimacs(phi: CnfFormula) -> str:
    lines = [f"p cnf {phi.n_vars} {len(phi.clauses)}"]
    lines += [" ".join(map(str, c)) + " 0" for c in phi.clauses]
    return "\n".join(lines) + "\n"


def sat_bruteforce(phi: CnfFormula) -> Optional[tuple]:
    """First satisfying assignment in lexicographic order (False < True), or None."""
    for bits in itertools.product((False, True), repeat=phi.n_vars):
        if phi.satisfied_by(bits):
            return bits
    return None


# node layout ------------------------------------------------------------

@dataclass(frozen=True)
class Layout:
    """Node indices of a generated instance."""

    n_vars: int
    n_clauses: int
    extra: tuple  # names of nodes after the gadget, e.g. ("K", "L")

    def lit(self, literal: int) -> int:
        """Node of a literal: x_v is X_v, the negation of x_v is its partner."""
        v = abs(literal)
        return 2 * (v - 1) + (0 if literal > 0 else 1)

    def clause(self, j: int) -> int:
        return 2 * self.n_vars + j

    def node(self, name: str) -> int:
        base = 2 * self.n_vars + self.n_clauses
        order = ("S", "A", "B", "C") + self.extra + ("srv",)
        return base + order.index(name)

    @property
    def server(self) -> int:
        return self.node("srv")

    @property
    def n(self) -> int:
        return self.server + 1

    def names(self) -> tuple:
        out = []
        for v in range(1, self.n_vars + 1):
            out += [f"X{v}", f"~X{v}"]
        out += [f"C{j + 1}" for j in range(self.n_clauses)]
        return tuple(out) + ("S", "A", "B", "C") + self.extra + ("srv",)


def layout(phi: CnfFormula, which: str) -> Layout:
    return Layout(phi.n_vars, len(phi.clauses), ("K", "L") if which == "I3" else ())


def _closure(n: int, arcs: dict, cap, symmetric: bool) -> list:
    """All-pairs shortest paths over ``arcs`` (Floyd-Warshall), capped at ``cap``."""
    d = [[F(0) if i == j else INF for j in range(n)] for i in range(n)]
    for (u, v), w in arcs.items():
        d[u][v] = min(d[u][v], w)
        if symmetric:
            d[v][u] = min(d[v][u], w)
    for k in range(n):
        dk = d[k]
        for i in range(n):
            dik = d[i][k]
            if dik == INF:
                continue
            di = d[i]
            for j in range(n):
                if dik + dk[j] < di[j]:
                    di[j] = dik + dk[j]
    return [[min(x, cap) for x in row] for row in d]


def _base_arcs(phi: CnfFormula, lay: Layout, s_to_clause) -> dict:
    arcs = {}
    for v in range(1, phi.n_vars + 1):
        arcs[(lay.lit(v), lay.lit(-v))] = F(1, 2)
        arcs[(lay.lit(-v), lay.lit(v))] = F(1, 2)
    S = lay.node("S")
    for j, clause in enumerate(phi.clauses):
        cj = lay.clause(j)
        for lit in clause:
            arcs[(cj, lay.lit(lit))] = F(1)
            arcs[(lay.lit(lit), cj)] = F(1)
        arcs[(S, cj)] = s_to_clause
        arcs[(cj, S)] = s_to_clause
    return arcs


def _build(phi, lay, arcs, d_srv, symmetric, pin_s, objects, **utility) -> Instance:
    n = lay.n
    srv = lay.server
    inner = _closure(srv, arcs, d_srv, symmetric)
    costs = [[F(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j:
                costs[i][j] = d_srv if srv in (i, j) else inner[i][j]
    pinned = [None] * n
    pinned[srv] = frozenset(range(len(objects)))
    if pin_s is not None:
        pinned[lay.node("S")] = frozenset((objects.index(pin_s),))
    capacities = [1] * n
    capacities[srv] = len(objects)
    return Instance.from_costs(
        costs, objects=objects, capacities=capacities, pinned=pinned,
        server=srv, names=lay.names(), **utility,
    )


def gen_I1(phi: CnfFormula, pin_s: Optional[str] = None, weights: str = "lemma") -> Instance:
    """Directed network, objects ``alpha``/``beta``, weighted sum utility.

    ``pin_s`` freezes node S on the named object, which isolates the gadget.
    Clause nodes and S weigh (alpha, beta) as (0.85, 1), the values under
    which a clause node holds alpha exactly when all its literals are false.
    ``weights="stated"`` uses (1, 0.7) instead; with those a clause node
    holds beta exactly when its literals are all false, so S pins itself
    to alpha as soon as one clause can be falsified.
    """
    if weights not in ("lemma", "stated"):
        raise ValueError(f"unknown I1 weight variant {weights!r}")
    side = (F(85, 100), F(1)) if weights == "lemma" else (F(1), F(7, 10))
    lay = layout(phi, "I1")
    arcs = _base_arcs(phi, lay, F(2))
    S, A, B, C = (lay.node(x) for x in "SABC")
    for u, v in ((A, S), (A, B), (B, C), (C, A)):
        arcs[(u, v)] = F(1)
    w = [None] * lay.n
    for v in range(1, phi.n_vars + 1):
        w[lay.lit(v)] = w[lay.lit(-v)] = (F(1), F(1))
    for j in range(len(phi.clauses)):
        w[lay.clause(j)] = side
    w[S] = side
    w[A] = (F(7, 10), F(1))
    w[B] = w[C] = (F(1), F(1))
    w[lay.server] = (F(0), F(0))
    return _build(phi, lay, arcs, F(10), False, pin_s, ("alpha", "beta"), weights=w)


def gen_I2(phi: CnfFormula, pin_s: Optional[str] = None) -> Instance:
    """Undirected network, objects ``alpha``/``beta``/``gamma``, weighted sum utility."""
    lay = layout(phi, "I2")
    arcs = _base_arcs(phi, lay, F(2))
    S, A, B, C = (lay.node(x) for x in "SABC")
    arcs[(A, S)] = F(3)
    arcs[(B, S)] = F(3)
    arcs[(A, B)] = F(31, 10)
    arcs[(B, C)] = F(305, 100)
    arcs[(C, A)] = F(2)
    zero = F(0)
    w = [None] * lay.n
    for v in range(1, phi.n_vars + 1):
        w[lay.lit(v)] = w[lay.lit(-v)] = (F(1), F(1), zero)
    for j in range(len(phi.clauses)):
        w[lay.clause(j)] = (F(85, 100), F(1), zero)
    w[S] = (F(85, 100), F(1), zero)
    w[A] = (F(1), zero, F(2))
    w[B] = (zero, F(1), F(9837, 10000))
    w[C] = (zero, F(1), F(16, 10))
    w[lay.server] = (zero, zero, zero)
    return _build(phi, lay, arcs, F(5), True, pin_s, ("alpha", "beta", "gamma"), weights=w)


def gen_I3(phi: CnfFormula, pin_s: Optional[str] = None) -> Instance:
    """Directed network, objects ``alpha``/``beta``/``gamma``, binary preferences."""
    lay = layout(phi, "I3")
    arcs = _base_arcs(phi, lay, F(2))
    S, A, B, C, K, L = (lay.node(x) for x in "SABCKL")
    for u, v in ((A, S), (A, B), (B, C), (C, A)):
        arcs[(u, v)] = F(1)
    for j in range(len(phi.clauses)):
        arcs[(lay.clause(j), K)] = F(14, 10)
    arcs[(S, L)] = F(21, 10)
    ab, ag = frozenset((0, 1)), frozenset((0, 2))
    s = [None] * lay.n
    for v in range(1, phi.n_vars + 1):
        s[lay.lit(v)] = s[lay.lit(-v)] = ab
    for j in range(len(phi.clauses)):
        s[lay.clause(j)] = ag
    s[K] = frozenset((2,))
    s[L] = frozenset((1,))
    s[S] = ab
    s[A] = s[B] = s[C] = ag
    s[lay.server] = frozenset()
    return _build(phi, lay, arcs, F(10), False, pin_s, ("alpha", "beta", "gamma"), interests=s)


GADGETS = {"I1": gen_I1, "I2": gen_I2, "I3": gen_I3}
