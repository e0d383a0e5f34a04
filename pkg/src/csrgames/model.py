"""Core game representation.

An :class:`Instance` bundles the nodes (caches), the objects, the network
seen from each node and the utility each node uses to rank placements.  A
placement is a tuple with one ``frozenset`` of object indices per node.

All costs and weights are :class:`fractions.Fraction`; ties are always broken
towards the lowest index so that every routine is deterministic.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Protocol, Sequence

from .errors import CapacityNotUnit, InvalidPlacement, MissingObject

__all__ = [
    "Cmp",
    "Instance",
    "Placement",
    "UtilityOracle",
    "Verdict",
    "CloneMap",
    "INF",
    "as_fraction",
    "make_placement",
    "check_placement",
    "nearest_holder",
    "sum_cost",
    "compare",
    "best_response",
    "is_equilibrium",
    "split_capacities",
    "induced_prefs_from_costs",
    "ranks_from_arcs",
    "improving_move",
    "SumOracle",
]

INF = math.inf

Placement = tuple  # tuple[frozenset[int], ...], one entry per node


class Cmp(enum.IntEnum):
    """Outcome of comparing two alternatives from one node's viewpoint."""

    SECOND = -1
    TIE = 0
    FIRST = 1


class UtilityOracle(Protocol):
    """Anything able to rank two global placements for a node."""

    def compare(self, i: int, P: Placement, Q: Placement) -> Cmp:  # pragma: no cover
        ...


def as_fraction(value) -> Fraction:
    """Convert ints, strings such as ``"3/4"`` or ``"0.9837"`` to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted; pass a string or Fraction")
    return Fraction(value)


def _matrix(rows) -> tuple:
    return tuple(tuple(as_fraction(x) for x in row) for row in rows)


def induced_prefs_from_costs(costs: Sequence[Sequence]) -> tuple:
    """Dense rank arrays: node i ranks j by increasing ``costs[i][j]``.

    Equal costs share a rank, so the result is a total preorder per node.
    """
    ranks = []
    for row in costs:
        levels = {c: r for r, c in enumerate(sorted(set(row)))}
        ranks.append(tuple(levels[c] for c in row))
    return tuple(ranks)


def ranks_from_arcs(n: int, arcs: Iterable[tuple[int, int]]) -> tuple:
    """Preorders of a digraph network: out-neighbours first, everyone else after."""
    out = [set() for _ in range(n)]
    for u, v in arcs:
        out[u].add(v)
    return tuple(
        tuple(0 if j == i else (1 if j in out[i] else 2) for j in range(n))
        for i in range(n)
    )


@dataclass(frozen=True, eq=False)
class Instance:
    """A CSR game.

    Exactly one of ``weights`` (sum utility), ``interests`` (binary
    preferences) or ``oracle`` (external utility) is set.  ``ranks[i][j]`` is
    node i's preference rank of node j (lower is better, ``ranks[i][i] == 0``).
    ``costs`` is present whenever the network carries numeric access costs.
    ``pinned[i]`` is the fixed placement of a frozen node, else ``None``.
    """

    objects: tuple
    capacities: tuple
    ranks: tuple
    costs: Optional[tuple] = None
    weights: Optional[tuple] = None
    interests: Optional[tuple] = None
    oracle: Optional[UtilityOracle] = None
    pinned: Optional[tuple] = None
    server: Optional[int] = None
    names: Optional[tuple] = None
    network: str = "costs"
    tree: object = None
    arcs: Optional[tuple] = None
    clone_of: Optional[tuple] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        n, m = len(self.capacities), len(self.objects)
        put = lambda k, v: object.__setattr__(self, k, v)
        put("objects", tuple(self.objects))
        put("capacities", tuple(int(c) for c in self.capacities))
        put("ranks", tuple(tuple(int(r) for r in row) for row in self.ranks))
        if self.costs is not None:
            put("costs", _matrix(self.costs))
        if self.weights is not None:
            put("weights", _matrix(self.weights))
        if self.interests is not None:
            put("interests", tuple(frozenset(s) for s in self.interests))
        pins = self.pinned if self.pinned is not None else (None,) * n
        put("pinned", tuple(None if p is None else frozenset(p) for p in pins))
        put("names", tuple(self.names) if self.names is not None else tuple(str(i) for i in range(n)))
        if self.arcs is not None:
            put("arcs", tuple((int(u), int(v)) for u, v in self.arcs))
        if self.clone_of is not None:
            put("clone_of", tuple(self.clone_of))
        self._validate(n, m)

    def _validate(self, n: int, m: int) -> None:
        kinds = [self.weights is not None, self.interests is not None, self.oracle is not None]
        if sum(kinds) != 1:
            raise ValueError("exactly one of weights, interests, oracle must be given")
        if any(c < 1 for c in self.capacities):
            raise ValueError("capacities must be positive")
        if len(self.ranks) != n or any(len(r) != n for r in self.ranks):
            raise ValueError("rank matrix must be n x n")
        owner = self.clone_of or tuple(range(n))
        for i, row in enumerate(self.ranks):
            if row[i] != 0 or min(row) < 0:
                raise ValueError(f"node {i} must rank itself 0 and everything else >= 0")
            for j, r in enumerate(row):
                if r == 0 and owner[j] != owner[i]:
                    raise ValueError(f"node {i} ties node {j} with itself")
        if self.costs is not None:
            if len(self.costs) != n or any(len(r) != n for r in self.costs):
                raise ValueError("cost matrix must be n x n")
            for i, row in enumerate(self.costs):
                if row[i] != 0 or min(row) < 0:
                    raise ValueError(f"costs of node {i} must be nonnegative with d(i,i)=0")
        if self.weights is not None:
            if len(self.weights) != n or any(len(r) != m for r in self.weights):
                raise ValueError("weight matrix must be n x m")
            if any(w < 0 for row in self.weights for w in row):
                raise ValueError("weights must be nonnegative")
        if self.interests is not None:
            if len(self.interests) != n or any(a < 0 or a >= m for s in self.interests for a in s):
                raise ValueError("interest sets must name valid objects")
        if len(self.pinned) != n:
            raise ValueError("pinned must have one entry per node")
        for i, p in enumerate(self.pinned):
            if p is not None and (len(p) > self.capacities[i] or any(a < 0 or a >= m for a in p)):
                raise ValueError(f"pinned placement of node {i} is invalid")
        if self.server is not None:
            s = self.server
            if self.capacities[s] < m:
                raise ValueError("server capacity must cover every object")
            if self.pinned[s] != frozenset(range(m)):
                raise ValueError("server must be pinned to the full object set")

    # convenient views -------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.capacities)

    @property
    def m(self) -> int:
        return len(self.objects)

    @property
    def utility(self) -> str:
        if self.weights is not None:
            return "sum"
        if self.interests is not None:
            return "binary"
        return "oracle"

    @property
    def symmetric(self) -> bool:
        if self.network == "digraph":
            return False
        if self.costs is not None:
            c = self.costs
            return all(c[i][j] == c[j][i] for i in range(self.n) for j in range(i))
        return False

    @property
    def unit(self) -> bool:
        return all(c == 1 for c in self.capacities)

    def free_nodes(self) -> list:
        """Indices of nodes that are allowed to deviate."""
        return [i for i in range(self.n) if self.pinned[i] is None]

    def replace(self, **changes) -> "Instance":
        fields_ = dict(
            objects=self.objects, capacities=self.capacities, ranks=self.ranks,
            costs=self.costs, weights=self.weights, interests=self.interests,
            oracle=self.oracle, pinned=self.pinned, server=self.server,
            names=self.names, network=self.network, tree=self.tree,
            arcs=self.arcs, clone_of=self.clone_of,
        )
        fields_.update(changes)
        return Instance(**fields_)

    # constructors -----------------------------------------------------
    @classmethod
    def from_costs(cls, costs, *, weights=None, interests=None, oracle=None,
                   capacities=None, objects=None, pinned=None, server=None,
                   names=None) -> "Instance":
        costs = _matrix(costs)
        n = len(costs)
        m = _object_count(objects, weights, interests)
        return cls(
            objects=objects or _default_objects(m),
            capacities=capacities or (1,) * n,
            ranks=induced_prefs_from_costs(costs),
            costs=costs, weights=weights, interests=interests, oracle=oracle,
            pinned=pinned, server=server, names=names, network="costs",
        )

    @classmethod
    def from_ranks(cls, ranks, *, interests=None, oracle=None, capacities=None,
                   objects=None, pinned=None, names=None) -> "Instance":
        n = len(ranks)
        m = _object_count(objects, None, interests)
        return cls(
            objects=objects or _default_objects(m),
            capacities=capacities or (1,) * n,
            ranks=ranks, interests=interests, oracle=oracle, pinned=pinned,
            names=names, network="preorders",
        )

    @classmethod
    def from_digraph(cls, n, arcs, *, interests=None, objects=None,
                     pinned=None, names=None) -> "Instance":
        arcs = tuple((int(u), int(v)) for u, v in arcs)
        if any(u == v for u, v in arcs):
            raise ValueError("self-loops are not allowed")
        m = _object_count(objects, None, interests)
        return cls(
            objects=objects or _default_objects(m),
            capacities=(1,) * n, ranks=ranks_from_arcs(n, arcs),
            interests=interests, pinned=pinned, names=names,
            network="digraph", arcs=arcs,
        )


def _object_count(objects, weights, interests) -> int:
    if objects is not None:
        return len(objects)
    if weights is not None and len(weights):
        return len(weights[0])
    if interests is not None:
        return max((max(s) + 1 for s in interests if s), default=1)
    raise ValueError("cannot infer the object count")


def _default_objects(m: int) -> tuple:
    return tuple(f"o{k}" for k in range(m))


# placements -----------------------------------------------------------

def make_placement(*sets) -> Placement:
    """Build a placement from per-node iterables (ints or single ints)."""
    return tuple(frozenset((s,)) if isinstance(s, int) else frozenset(s) for s in sets)


def check_placement(inst: Instance, P: Placement) -> None:
    """Raise :class:`InvalidPlacement` unless P fits the instance."""
    if len(P) != inst.n:
        raise InvalidPlacement(f"placement has {len(P)} entries for {inst.n} nodes")
    for i, Pi in enumerate(P):
        if len(Pi) > inst.capacities[i]:
            raise InvalidPlacement(f"node {i} stores {len(Pi)} objects, capacity {inst.capacities[i]}")
        if any(not 0 <= a < inst.m for a in Pi):
            raise InvalidPlacement(f"node {i} stores an unknown object")
        pin = inst.pinned[i]
        if pin is not None and Pi != pin:
            raise InvalidPlacement(f"frozen node {i} must store {sorted(pin)}")


def nearest_holder(inst: Instance, P: Placement, i: int, a: int,
                   exclude_self: bool = False) -> Optional[int]:
    """Most i-preferred node holding object ``a``; lowest id among ties."""
    rank = inst.ranks[i]
    best = None
    for j, Pj in enumerate(P):
        if a in Pj and not (exclude_self and j == i):
            if best is None or rank[j] < rank[best]:
                best = j
    return best


def _remote_holders(inst: Instance, P: Placement, i: int) -> list:
    """For every object, the nearest holder other than i (or None)."""
    rank = inst.ranks[i]
    best = [None] * inst.m
    for j, Pj in enumerate(P):
        if j == i:
            continue
        for a in Pj:
            b = best[a]
            if b is None or rank[j] < rank[b]:
                best[a] = j
    return best


def sum_cost(inst: Instance, P: Placement, i: int) -> Fraction:
    """Sum-utility cost of node i: weighted distance to the nearest copies."""
    total = Fraction(0)
    for a, w in enumerate(inst.weights[i]):
        if w == 0 or a in P[i]:
            continue
        j = nearest_holder(inst, P, i, a)
        if j is None:
            raise MissingObject(i, a)
        total += w * inst.costs[i][j]
    return total


def _sum_key(inst: Instance, P: Placement, i: int) -> tuple:
    """Cost with the weight of missing objects first, so comparisons never fail."""
    missing, total = Fraction(0), Fraction(0)
    for a, w in enumerate(inst.weights[i]):
        if w == 0 or a in P[i]:
            continue
        j = nearest_holder(inst, P, i, a)
        if j is None:
            missing += w
        else:
            total += w * inst.costs[i][j]
    return missing, total


def _tau(inst: Instance, P: Placement, i: int) -> list:
    """Sorted ranks of the nearest holders of the objects node i cares about."""
    rank = inst.ranks[i]
    out = []
    for a in inst.interests[i]:
        j = nearest_holder(inst, P, i, a)
        out.append(INF if j is None else rank[j])
    out.sort()
    return out


def compare(inst: Instance, i: int, P: Placement, Q: Placement) -> Cmp:
    """Which of two placements node i prefers."""
    kind = inst.utility
    if kind == "sum":
        kp, kq = _sum_key(inst, P, i), _sum_key(inst, Q, i)
        return Cmp.FIRST if kp < kq else Cmp.SECOND if kq < kp else Cmp.TIE
    if kind == "binary":
        tp, tq = _tau(inst, P, i), _tau(inst, Q, i)
        p_ge = all(x <= y for x, y in zip(tp, tq))
        q_ge = all(y <= x for x, y in zip(tp, tq))
        if p_ge and not q_ge:
            return Cmp.FIRST
        if q_ge and not p_ge:
            return Cmp.SECOND
        return Cmp.TIE
    return Cmp(inst.oracle.compare(i, P, Q))


def _with(P: Placement, i: int, Pi) -> Placement:
    return P[:i] + (frozenset(Pi),) + P[i + 1:]


def best_response(inst: Instance, P: Placement, i: int) -> frozenset:
    """Best single object for a unit-cache node against the rest of P."""
    if inst.capacities[i] != 1:
        raise CapacityNotUnit(i, inst.capacities[i])
    kind = inst.utility
    if kind == "sum":
        remote = _remote_holders(inst, P, i)
        row, w = inst.costs[i], inst.weights[i]
        best, best_val = 0, None
        for a in range(inst.m):
            # saving from a local copy: (missing weight avoided, distance saved)
            if remote[a] is None:
                val = (w[a], Fraction(0))
            else:
                val = (Fraction(0), w[a] * row[remote[a]])
            if best_val is None or val > best_val:
                best, best_val = a, val
        return frozenset((best,))
    if kind == "binary":
        S = inst.interests[i]
        if not S:
            return P[i] if P[i] else frozenset((0,))
        remote = _remote_holders(inst, P, i)
        rank = inst.ranks[i]
        key = lambda a: (INF if remote[a] is None else rank[remote[a]], -a)
        return frozenset((max(S, key=key),))
    best = frozenset((0,))
    best_P = _with(P, i, best)
    for a in range(1, inst.m):
        cand = _with(P, i, (a,))
        if compare(inst, i, cand, best_P) == Cmp.FIRST:
            best, best_P = frozenset((a,)), cand
    return best


@dataclass(frozen=True)
class Verdict:
    """Result of an equilibrium check; truthy iff P is an equilibrium."""

    ok: bool
    witness: Optional[int] = None
    deviation: Optional[frozenset] = None

    def __bool__(self) -> bool:
        return self.ok


def improving_move(inst: Instance, P: Placement, i: int) -> Optional[frozenset]:
    """A strictly better placement for node i, or None if i is content."""
    if inst.pinned[i] is not None:
        return None
    if inst.capacities[i] == 1:
        br = best_response(inst, P, i)
        if br != P[i] and compare(inst, i, _with(P, i, br), P) == Cmp.FIRST:
            return br
        return None
    size = min(inst.capacities[i], inst.m)
    best, best_P = None, P
    for combo in itertools.combinations(range(inst.m), size):
        cand = _with(P, i, combo)
        if compare(inst, i, cand, best_P) == Cmp.FIRST:
            best, best_P = frozenset(combo), cand
    return best


def is_equilibrium(inst: Instance, P: Placement) -> Verdict:
    """Check every unfrozen node; report the lowest-id node that can improve."""
    check_placement(inst, P)
    for i in range(inst.n):
        move = improving_move(inst, P, i)
        if move is not None:
            return Verdict(False, i, move)
    return Verdict(True)


# capacity splitting ---------------------------------------------------

@dataclass(frozen=True)
class CloneMap:
    """The onto map from unit placements back to the original instance."""

    owner: tuple
    clones: tuple

    def __call__(self, P_unit: Placement) -> Placement:
        out = [set() for _ in self.clones]
        for k, Pk in enumerate(P_unit):
            out[self.owner[k]].update(Pk)
        return tuple(frozenset(s) for s in out)

    def lift(self, P: Placement) -> Placement:
        """One preimage of P: objects spread over clones, padded by repetition."""
        out = [frozenset()] * len(self.owner)
        for i, ks in enumerate(self.clones):
            objs = sorted(P[i])
            for pos, k in enumerate(ks):
                if objs:
                    out[k] = frozenset((objs[min(pos, len(objs) - 1)],))
        return tuple(out)


class _SplitOracle:
    def __init__(self, base: UtilityOracle, fmap: CloneMap):
        self.base, self.fmap = base, fmap

    def compare(self, k, P, Q):
        return self.base.compare(self.fmap.owner[k], self.fmap(P), self.fmap(Q))


def split_capacities(inst: Instance) -> tuple:
    """Replace each node of capacity c by c unit-capacity clones.

    Clones of one node see each other at cost 0 and are tied in every other
    node's preference, so a clone's utility is that of its owner under the
    union map.  Returns ``(unit_instance, f)``.
    """
    owner, clones = [], []
    for i, c in enumerate(inst.capacities):
        clones.append(tuple(range(len(owner), len(owner) + c)))
        owner.extend([i] * c)
    fmap = CloneMap(tuple(owner), tuple(clones))
    if inst.unit:
        return inst, fmap
    N = len(owner)
    ranks = [[inst.ranks[owner[a]][owner[b]] for b in range(N)] for a in range(N)]
    costs = None
    if inst.costs is not None:
        costs = [[inst.costs[owner[a]][owner[b]] for b in range(N)] for a in range(N)]
    pinned = []
    for k in range(N):
        pin = inst.pinned[owner[k]]
        if pin is None:
            pinned.append(None)
        else:
            objs = sorted(pin) or [0]
            pos = clones[owner[k]].index(k)
            pinned.append(frozenset((objs[min(pos, len(objs) - 1)],)))
    names = tuple(
        inst.names[owner[k]] + (f"#{clones[owner[k]].index(k)}" if inst.capacities[owner[k]] > 1 else "")
        for k in range(N)
    )
    unit = Instance(
        objects=inst.objects,
        capacities=(1,) * N,
        ranks=ranks,
        costs=costs,
        weights=None if inst.weights is None else [inst.weights[o] for o in owner],
        interests=None if inst.interests is None else [inst.interests[o] for o in owner],
        oracle=None if inst.oracle is None else _SplitOracle(inst.oracle, fmap),
        pinned=pinned,
        server=None,
        names=names,
        network="costs" if costs is not None else "preorders",
        clone_of=tuple(owner),
    )
    return unit, fmap


class SumOracle:
    """Sum utility exposed through the generic oracle interface."""

    def __init__(self, costs, weights):
        self.inst = Instance.from_costs(costs, weights=weights)

    def compare(self, i, P, Q):
        return compare(self.inst, i, P, Q)
