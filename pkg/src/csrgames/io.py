"""JSON formats for instances and placements.

Instance file::

    {
      "objects": ["a", "b"],
      "nodes": [{"id": "u", "capacity": 1, "weights": {"a": "1/2"}},
                {"id": "srv", "capacity": 2, "frozen": true}],
      "network": {"kind": "costs", "symmetric": true,
                  "matrix": [["0", "3"], ["3", "0"]]},
      "server": "srv"
    }

Nodes carry either ``weights`` (sum utility) or ``interest`` (binary
preferences).  ``frozen`` is either ``true`` (the node keeps the first
``capacity`` objects) or an explicit list of object names.  The network is
one of ``costs``, ``preorders`` (``ranks``), ``digraph`` (``arcs``) or
``tree`` (``internal`` vertices with labels and ``leaves``).  Rationals are
strings such as ``"3/4"``.  Placements map node ids to object name lists;
fractional placements map node ids to ``{object: amount}``.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .errors import MalformedInput
from .hierarchy import HierarchyTree
from .model import Instance, as_fraction

__all__ = [
    "frac_str",
    "instance_from_dict",
    "instance_to_dict",
    "load_instance",
    "dump_instance",
    "placement_from_dict",
    "placement_to_dict",
    "load_placement",
    "fplacement_from_dict",
    "fplacement_to_dict",
]


def frac_str(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _rational(value, what: str) -> Fraction:
    if isinstance(value, bool):
        raise MalformedInput(f"{what}: expected a rational, got {value!r}")
    try:
        return as_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise MalformedInput(f"{what}: {value!r} is not a rational ({exc})") from None


def _read_json(source) -> dict:
    if isinstance(source, dict):
        return source
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, (str, Path)) else source.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"invalid JSON: {exc}") from None


def _tree_network(net: dict, ids: dict, n: int) -> HierarchyTree:
    internal = net.get("internal")
    leaves = net.get("leaves")
    if not isinstance(internal, list) or not isinstance(leaves, list):
        raise MalformedInput("tree network needs 'internal' and 'leaves' lists")
    index = {}
    for k, v in enumerate(internal):
        if v.get("id") in index:
            raise MalformedInput(f"duplicate internal vertex {v.get('id')!r}")
        index[v.get("id")] = n + k

    def parent_of(ref, who):
        if ref is None:
            return None
        if ref not in index:
            raise MalformedInput(f"{who}: unknown parent {ref!r}")
        return index[ref]

    parent = [None] * (n + len(internal))
    seen = set()
    for leaf in leaves:
        key = str(leaf.get("player"))
        if key not in ids:
            raise MalformedInput(f"tree leaf names unknown node {leaf.get('player')!r}")
        i = ids[key]
        seen.add(i)
        parent[i] = parent_of(leaf.get("parent"), f"leaf {key}")
    if len(seen) != n:
        raise MalformedInput("every node must appear exactly once as a tree leaf")
    labels = []
    for k, v in enumerate(internal):
        labels.append(_rational(v.get("label"), f"label of {v.get('id')!r}"))
        parent[n + k] = parent_of(v.get("parent"), f"vertex {v.get('id')!r}")
    try:
        return HierarchyTree(n, tuple(labels), tuple(parent))
    except ValueError as exc:
        raise MalformedInput(f"bad tree: {exc}") from None


def instance_from_dict(data: dict) -> Instance:
    """Build an :class:`Instance` from the JSON structure described above."""
    if not isinstance(data, dict):
        raise MalformedInput("instance must be a JSON object")
    objects = data.get("objects")
    nodes = data.get("nodes")
    net = data.get("network")
    if not isinstance(objects, list) or not objects or not isinstance(nodes, list) or not nodes:
        raise MalformedInput("instance needs nonempty 'objects' and 'nodes' lists")
    if not isinstance(net, dict) or "kind" not in net:
        raise MalformedInput("instance needs a 'network' object with a 'kind'")
    objects = [str(o) for o in objects]
    if len(set(objects)) != len(objects):
        raise MalformedInput("object names must be distinct")
    obj_index = {o: a for a, o in enumerate(objects)}
    n, m = len(nodes), len(objects)

    def obj(name, who):
        if str(name) not in obj_index:
            raise MalformedInput(f"{who}: unknown object {name!r}")
        return obj_index[str(name)]

    names, capacities, pinned = [], [], []
    weights, interests = [], []
    for k, node in enumerate(nodes):
        if not isinstance(node, dict):
            raise MalformedInput(f"node {k} must be an object")
        name = str(node.get("id", k))
        names.append(name)
        cap = node.get("capacity", 1)
        if not isinstance(cap, int) or isinstance(cap, bool) or cap < 1:
            raise MalformedInput(f"node {name}: capacity must be a positive integer")
        capacities.append(cap)
        frozen = node.get("frozen", False)
        if frozen is True:
            pinned.append(frozenset(range(min(cap, m))))
        elif frozen in (False, None):
            pinned.append(None)
        elif isinstance(frozen, list):
            pinned.append(frozenset(obj(o, f"node {name}") for o in frozen))
        else:
            raise MalformedInput(f"node {name}: 'frozen' must be a boolean or an object list")
        w = node.get("weights")
        weights.append(None if w is None else w)
        s = node.get("interest")
        interests.append(None if s is None else s)
    if len(set(names)) != n:
        raise MalformedInput("node ids must be distinct")
    ids = {nm: i for i, nm in enumerate(names)}

    has_w = any(w is not None for w in weights)
    has_s = any(s is not None for s in interests)
    if has_w and has_s:
        raise MalformedInput("nodes mix 'weights' and 'interest'; pick one utility")
    utility = {}
    if has_w:
        rows = []
        for i, w in enumerate(weights):
            row = [Fraction(0)] * m
            for o, val in (w or {}).items():
                row[obj(o, f"node {names[i]}")] = _rational(val, f"weight of node {names[i]}")
            rows.append(row)
        utility["weights"] = rows
    else:
        utility["interests"] = [frozenset(obj(o, f"node {names[i]}") for o in (s or [])) for i, s in enumerate(interests)]

    server = data.get("server")
    if server is not None:
        if str(server) not in ids:
            raise MalformedInput(f"unknown server node {server!r}")
        server = ids[str(server)]
        if pinned[server] is None:
            pinned[server] = frozenset(range(m))

    kind = net["kind"]
    common = dict(objects=objects, pinned=pinned, names=names)
    try:
        if kind == "costs":
            matrix = net.get("matrix")
            if not isinstance(matrix, list) or len(matrix) != n or any(not isinstance(r, list) or len(r) != n for r in matrix):
                raise MalformedInput("cost matrix must be n x n")
            costs = [[_rational(x, f"cost[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(matrix)]
            if net.get("symmetric") and any(costs[i][j] != costs[j][i] for i in range(n) for j in range(i)):
                raise MalformedInput("network is declared symmetric but the matrix is not")
            return Instance.from_costs(costs, capacities=capacities, server=server, **common, **utility)
        if "weights" in utility:
            raise MalformedInput(f"sum utilities need a costs or tree network, not {kind!r}")
        if kind == "preorders":
            ranks = net.get("ranks")
            if not isinstance(ranks, list) or len(ranks) != n:
                raise MalformedInput("ranks must be n x n")
            return Instance.from_ranks(ranks, capacities=capacities, **common, **utility).replace(server=server)
        if kind == "digraph":
            arcs = [tuple(a) for a in net.get("arcs", [])]
            if any(len(a) != 2 for a in arcs):
                raise MalformedInput("arcs must be [tail, head] pairs")
            if any(c != 1 for c in capacities):
                raise MalformedInput("digraph networks support unit caches only")
            arcs = [(ids.get(str(u), u), ids.get(str(v), v)) for u, v in arcs]
            return Instance.from_digraph(n, arcs, **common, **utility).replace(server=server)
        raise MalformedInput(f"unknown network kind {kind!r}")
    except MalformedInput:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise MalformedInput(str(exc)) from None


def _tree_instance(data: dict) -> Instance:
    """Tree networks: build the plain instance first, then attach the tree."""
    net = data["network"]
    nodes = data["nodes"]
    ids = {str(node.get("id", k)): k for k, node in enumerate(nodes)}
    tree = _tree_network(net, ids, len(nodes))
    matrix = [[frac_str(x) for x in row] for row in tree.cost_matrix()]
    flat = dict(data, network={"kind": "costs", "symmetric": True, "matrix": matrix})
    inst = instance_from_dict(flat)
    return inst.replace(network="tree", tree=tree)


def load_instance(source) -> Instance:
    """Read an instance from a path, file object or already parsed dict."""
    data = _read_json(source)
    if isinstance(data, dict) and isinstance(data.get("network"), dict) and data["network"].get("kind") == "tree":
        return _tree_instance(data)
    return instance_from_dict(data)


def instance_to_dict(inst: Instance) -> dict:
    if inst.oracle is not None:
        raise ValueError("oracle utilities cannot be serialized")
    nodes = []
    for i in range(inst.n):
        node = {"id": inst.names[i], "capacity": inst.capacities[i]}
        if inst.pinned[i] is not None:
            node["frozen"] = [inst.objects[a] for a in sorted(inst.pinned[i])]
        if inst.weights is not None:
            node["weights"] = {inst.objects[a]: frac_str(w) for a, w in enumerate(inst.weights[i]) if w}
        else:
            node["interest"] = [inst.objects[a] for a in sorted(inst.interests[i])]
        nodes.append(node)
    if inst.network == "tree" and inst.tree is not None:
        t = inst.tree
        net = {
            "kind": "tree",
            "internal": [
                {"id": f"v{v - t.n_leaves}", "label": frac_str(t.label(v)),
                 "parent": None if t.parent[v] is None else f"v{t.parent[v] - t.n_leaves}"}
                for v in t.internal()
            ],
            "leaves": [{"player": inst.names[i], "parent": f"v{t.parent[i] - t.n_leaves}"} for i in range(t.n_leaves)],
        }
    elif inst.network == "digraph":
        net = {"kind": "digraph", "arcs": [list(a) for a in inst.arcs]}
    elif inst.costs is not None:
        net = {"kind": "costs", "symmetric": inst.symmetric,
               "matrix": [[frac_str(x) for x in row] for row in inst.costs]}
    else:
        net = {"kind": "preorders", "ranks": [list(r) for r in inst.ranks]}
    out = {"objects": list(inst.objects), "nodes": nodes, "network": net}
    if inst.server is not None:
        out["server"] = inst.names[inst.server]
    return out


def dump_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def placement_from_dict(inst: Instance, data: dict) -> tuple:
    """Placement from ``{node id: [object names]}``; frozen nodes may be omitted."""
    if not isinstance(data, dict):
        raise MalformedInput("placement must be a JSON object")
    ids = {nm: i for i, nm in enumerate(inst.names)}
    objs = {o: a for a, o in enumerate(inst.objects)}
    P = [inst.pinned[i] if inst.pinned[i] is not None else None for i in range(inst.n)]
    for key, held in data.items():
        if str(key) not in ids:
            raise MalformedInput(f"placement names unknown node {key!r}")
        if not isinstance(held, list) or any(str(o) not in objs for o in held):
            raise MalformedInput(f"placement of node {key!r} must list known objects")
        P[ids[str(key)]] = frozenset(objs[str(o)] for o in held)
    missing = [inst.names[i] for i, p in enumerate(P) if p is None]
    if missing:
        raise MalformedInput(f"placement misses nodes {missing}")
    return tuple(P)


def placement_to_dict(inst: Instance, P) -> dict:
    return {inst.names[i]: [inst.objects[a] for a in sorted(Pi)] for i, Pi in enumerate(P)}


def load_placement(inst: Instance, source) -> tuple:
    return placement_from_dict(inst, _read_json(source))


def fplacement_from_dict(inst: Instance, data: dict) -> tuple:
    """Fractional placement from ``{node id: {object: amount}}``; absent entries are 0."""
    if not isinstance(data, dict):
        raise MalformedInput("fractional placement must be a JSON object")
    ids = {nm: i for i, nm in enumerate(inst.names)}
    objs = {o: a for a, o in enumerate(inst.objects)}
    rows = [[Fraction(1 if inst.pinned[i] is not None and a in inst.pinned[i] else 0) for a in range(inst.m)]
            for i in range(inst.n)]
    for key, amounts in data.items():
        if str(key) not in ids or not isinstance(amounts, dict):
            raise MalformedInput(f"bad fractional entry for node {key!r}")
        row = [Fraction(0)] * inst.m
        for o, x in amounts.items():
            if str(o) not in objs:
                raise MalformedInput(f"node {key!r}: unknown object {o!r}")
            row[objs[str(o)]] = _rational(x, f"amount of {o!r} at node {key!r}")
        rows[ids[str(key)]] = row
    return tuple(tuple(r) for r in rows)


def fplacement_to_dict(inst: Instance, P) -> dict:
    return {
        inst.names[i]: {inst.objects[a]: frac_str(x) for a, x in enumerate(row) if x}
        for i, row in enumerate(P)
    }
