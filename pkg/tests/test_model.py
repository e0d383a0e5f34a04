import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from csrgames.errors import CapacityNotUnit, InvalidPlacement, MissingObject
from csrgames.model import (
    Cmp,
    Instance,
    SumOracle,
    best_response,
    compare,
    induced_prefs_from_costs,
    is_equilibrium,
    nearest_holder,
    split_capacities,
    sum_cost,
)
from csrgames.oracle import enumerate_equilibria
from csrgames.gadgets import CnfFormula, gen_I1, layout
from helpers import rand_symmetric_costs, rand_weights, with_server

A, B = frozenset({0}), frozenset({1})
E = frozenset()


def two_nodes(d=1):
    return Instance.from_costs([[0, d], [d, 0]], weights=[[1, 1], [1, 1]])


class TestNearestHolder:
    def test_unique_holder(self):
        assert nearest_holder(two_nodes(), (E, A), 0, 0) == 1

    def test_exclude_self(self):
        assert nearest_holder(two_nodes(), (A, A), 0, 0, exclude_self=True) == 1
        assert nearest_holder(two_nodes(), (A, A), 0, 0) == 0

    def test_min_cost(self):
        inst = Instance.from_costs([[0, 2, 1], [2, 0, 1], [1, 1, 0]], weights=[[1]] * 3)
        assert nearest_holder(inst, (E, A, A), 0, 0) == 2

    def test_tie_lowest_id(self):
        inst = Instance.from_costs([[0, 1, 1], [1, 0, 1], [1, 1, 0]], weights=[[1]] * 3)
        assert nearest_holder(inst, (E, A, A), 0, 0) == 1

    def test_absent(self):
        assert nearest_holder(two_nodes(), (B, B), 0, 0) is None


class TestSumCost:
    def server_pair(self, weights):
        return with_server([[0]], weights=[weights], d_srv=10)

    def test_local_copy(self):
        inst = self.server_pair([1, 0])
        assert sum_cost(inst, (A, frozenset({0, 1})), 0) == 0

    def test_server_fetch(self):
        inst = self.server_pair([F(0), F(1)])
        assert sum_cost(inst, (A, frozenset({0, 1})), 0) == 10

    def test_gadget_node_A(self):
        phi = CnfFormula(3, ((1, 2, 3),))
        inst = gen_I1(phi)
        lay = layout(phi, "I1")
        P = [None] * inst.n
        for v in (1, 2, 3):
            P[lay.lit(v)], P[lay.lit(-v)] = A, B
        P[lay.clause(0)] = B
        for name, obj in zip("SABC", (A, B, B, A)):
            P[lay.node(name)] = obj
        P[lay.server] = frozenset({0, 1})
        assert sum_cost(inst, tuple(P), lay.node("A")) == F(7, 10)

    def test_missing_object(self):
        with pytest.raises(MissingObject):
            sum_cost(two_nodes(), (A, A), 0)


class TestBestResponse:
    def test_binary_lone_interest(self):
        inst = Instance.from_costs([[0, 1], [1, 0]], interests=[{0}, {0, 1}])
        for other in (A, B):
            assert best_response(inst, (B, other), 0) == A

    def test_weighted_choice(self):
        # r(a)=1, r(b)=2; remote a at cost 3, remote b at cost 2: 2*2 > 1*3, hold b
        costs = [[0, 3, 2], [3, 0, 5], [2, 5, 0]]
        inst = Instance.from_costs(costs, weights=[[1, 2], [0, 0], [0, 0]])
        assert best_response(inst, (A, A, B), 0) == B

    def test_gadget_S_holds_alpha_when_clauses_hold_beta(self):
        phi = CnfFormula(2, ((1, 2, -1), (-2, 1, 2)))
        inst = gen_I1(phi)
        lay = layout(phi, "I1")
        P = [A] * inst.n
        P[lay.lit(1)], P[lay.lit(-1)] = A, B
        P[lay.lit(2)], P[lay.lit(-2)] = B, A
        for j in range(2):
            P[lay.clause(j)] = B
        P[lay.server] = frozenset({0, 1})
        assert best_response(inst, tuple(P), lay.node("S")) == A

    def test_capacity_not_unit(self):
        inst = Instance.from_costs([[0, 1], [1, 0]], weights=[[1, 1], [1, 1]], capacities=[2, 1])
        with pytest.raises(CapacityNotUnit):
            best_response(inst, (frozenset({0, 1}), A), 0)

    def test_empty_interest_keeps_current(self):
        inst = Instance.from_costs([[0, 1], [1, 0]], interests=[set(), {0}], objects=("a", "b"))
        assert best_response(inst, (B, A), 0) == B


class TestIsEquilibrium:
    def test_gadget_equilibrium_and_deviation(self):
        phi = CnfFormula(3, ((1, 2, 3),))
        inst = gen_I1(phi)
        lay = layout(phi, "I1")
        P = [None] * inst.n
        for v in (1, 2, 3):
            P[lay.lit(v)], P[lay.lit(-v)] = A, B
        P[lay.clause(0)] = B
        P[lay.server] = frozenset({0, 1})
        for name, obj in zip("SABC", (A, B, B, A)):
            P[lay.node(name)] = obj
        assert is_equilibrium(inst, tuple(P))
        # S on beta with the whole gadget on beta: A is the first to move
        for name in "SABC":
            P[lay.node(name)] = B
        pinned = gen_I1(phi, pin_s="beta")
        verdict = is_equilibrium(pinned, tuple(P))
        assert not verdict and verdict.witness == lay.node("A")

    def test_single_node_server(self):
        inst = with_server([[0]], interests=[{0}], d_srv=10, m=2)
        assert is_equilibrium(inst, (A, frozenset({0, 1})))

    def test_invalid_placement(self):
        with pytest.raises(InvalidPlacement):
            is_equilibrium(two_nodes(), (frozenset({0, 1}), A))

    def test_pinned_node_must_keep_placement(self):
        inst = with_server([[0]], weights=[[1, 1]])
        with pytest.raises(InvalidPlacement):
            is_equilibrium(inst, (A, A))


class TestInducedPrefs:
    def test_strict(self):
        assert induced_prefs_from_costs([[0, 1, 2], [1, 0, 1], [2, 1, 0]])[0] == (0, 1, 2)

    def test_tie(self):
        r = induced_prefs_from_costs([[0, 5, 5], [5, 0, 1], [5, 1, 0]])[0]
        assert r[1] == r[2] and r[1] > 0

    def test_matches_tree_labels(self):
        costs = [[0, 1, 2], [1, 0, 2], [2, 2, 0]]
        r = induced_prefs_from_costs(costs)
        assert r[0][1] < r[0][2] and r[2][0] == r[2][1]


class TestSplitCapacities:
    def test_identity_for_unit(self):
        inst = two_nodes()
        unit, f = split_capacities(inst)
        assert unit is inst and f((A, B)) == (A, B)

    def test_clones_tied(self):
        inst = Instance.from_costs([[0, 3], [3, 0]], weights=[[1, 1], [1, 1]], capacities=[2, 1])
        unit, f = split_capacities(inst)
        assert unit.n == 3 and unit.unit
        assert unit.ranks[0][1] == 0 and unit.costs[0][1] == 0
        assert unit.ranks[2][0] == unit.ranks[2][1]
        assert f((A, B, A)) == (frozenset({0, 1}), A)

    def test_split_equilibria_correspond(self):
        rng = random.Random(5)
        costs = rand_symmetric_costs(rng, 3)
        inst = Instance.from_costs(costs, weights=rand_weights(rng, 3, 3), capacities=[2, 1, 2])
        unit, f = split_capacities(inst)
        orig = set(enumerate_equilibria(inst))
        lifted = {f(P) for P in enumerate_equilibria(unit)}
        assert lifted == orig


# properties ---------------------------------------------------------------------

@st.composite
def unit_sum_instances(draw, max_n=4, max_m=3):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    costs = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j:
                costs[i][j] = draw(st.integers(1, 5))
    weights = [[draw(st.integers(0, 4)) for _ in range(m)] for _ in range(n)]
    inst = with_server(costs, weights=weights)
    P = tuple(frozenset({draw(st.integers(0, m - 1))}) for _ in range(n)) + (frozenset(range(m)),)
    return inst, P


@given(unit_sum_instances())
def test_equilibrium_iff_best_responses_tie(data):
    inst, P = data
    verdict = is_equilibrium(inst, P)
    content = all(
        compare(inst, i, tuple(best_response(inst, P, i) if k == i else P[k] for k in range(inst.n)), P) != Cmp.FIRST
        for i in inst.free_nodes()
    )
    assert bool(verdict) == content


@given(unit_sum_instances(), st.randoms(use_true_random=False))
def test_sum_cost_permutation_equivariant(data, rnd):
    inst, P = data
    n = inst.n
    perm = list(range(n))
    rnd.shuffle(perm)
    inv = {p: k for k, p in enumerate(perm)}
    costs = [[inst.costs[perm[a]][perm[b]] for b in range(n)] for a in range(n)]
    weights = [inst.weights[perm[a]] for a in range(n)]
    pinned = [inst.pinned[perm[a]] for a in range(n)]
    other = Instance.from_costs(costs, weights=weights, pinned=pinned, capacities=[inst.capacities[p] for p in perm])
    Q = tuple(P[perm[a]] for a in range(n))
    for i in range(n):
        assert sum_cost(other, Q, inv[i]) == sum_cost(inst, P, i)


@given(unit_sum_instances(), st.integers(1, 7), st.integers(1, 5))
def test_best_response_invariant_under_weight_scaling(data, num, den):
    inst, P = data
    i = 0
    weights = [list(r) for r in inst.weights]
    weights[i] = [w * F(num, den) for w in weights[i]]
    scaled = inst.replace(weights=weights)
    value = lambda I, br: sum_cost(I, tuple(br if k == i else P[k] for k in range(I.n)), i)
    best = lambda I: {a for a in range(I.m)
                      if value(I, frozenset({a})) == min(value(I, frozenset({b})) for b in range(I.m))}
    assert best(inst) == best(scaled)
    assert best_response(scaled, P, i) in [frozenset({a}) for a in best(inst)]


def test_sum_oracle_matches_sum_compare():
    rng = random.Random(2)
    costs = rand_symmetric_costs(rng, 3)
    weights = rand_weights(rng, 3, 2)
    inst = Instance.from_costs(costs, weights=weights)
    wrapped = Instance.from_costs(costs, oracle=SumOracle(costs, weights), objects=("o0", "o1"))
    placements = list(itertools.product([A, B], repeat=3))
    for P in placements:
        for Q in placements:
            for i in range(3):
                assert compare(inst, i, P, Q) == compare(wrapped, i, P, Q)


def test_missing_objects_weighted():
    # without a server, holding the sole copy of the heavier object is better
    inst = Instance.from_costs([[0, 1], [1, 0]], weights=[[2, 5, 1], [1, 1, 1]])
    P = (frozenset({1}), frozenset({0}))
    assert best_response(inst, P, 0) == frozenset({1})
    assert compare(inst, 0, P, (frozenset({2}), frozenset({0}))) == Cmp.FIRST
    # node 1 misses one unit-weight object whatever it holds
    assert is_equilibrium(inst, P)
