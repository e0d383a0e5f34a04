import itertools
import random

import pytest
from hypothesis import given, strategies as st

from csrgames.errors import BudgetExceeded, SearchBudgetExceeded
from csrgames.model import Instance, is_equilibrium
from csrgames.oracle import enumerate_equilibria, exists_equilibrium, find_equilibrium, placement_key
from helpers import rand_interests, rand_symmetric_costs, rand_weights, with_server

A, B = frozenset({0}), frozenset({1})


def naive_equilibria(inst):
    choices = []
    for i in range(inst.n):
        if inst.pinned[i] is not None:
            choices.append([inst.pinned[i]])
        else:
            k = min(inst.capacities[i], inst.m)
            choices.append([frozenset(c) for size in range(1, k + 1)
                            for c in itertools.combinations(range(inst.m), size)])
    return sorted((P for P in itertools.product(*choices) if is_equilibrium(inst, P)), key=placement_key)


def test_two_nodes_binary_two_equilibria():
    inst = Instance.from_costs([[0, 1], [1, 0]], interests=[{0, 1}, {0, 1}])
    assert enumerate_equilibria(inst) == [(A, B), (B, A)]


def test_lexicographic_order_and_first():
    inst = Instance.from_costs([[0, 1], [1, 0]], interests=[{0, 1}, {0, 1}])
    assert find_equilibrium(inst) == (A, B)


def test_odd_cycle_has_none():
    # directed triangle, every node wants both objects: no stable 2-colouring
    inst = Instance.from_digraph(3, [(0, 1), (1, 2), (2, 0)], interests=[{0, 1}] * 3)
    assert not exists_equilibrium(inst)
    assert find_equilibrium(inst) is None
    assert enumerate_equilibria(inst) == []


def test_budget_exceeded():
    inst = Instance.from_costs(rand_symmetric_costs(random.Random(0), 5), interests=[{0, 1}] * 5)
    with pytest.raises(SearchBudgetExceeded):
        enumerate_equilibria(inst, budget=3)
    assert issubclass(BudgetExceeded, SearchBudgetExceeded)


@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 3), st.booleans())
def test_matches_naive_enumeration(seed, n, m, binary):
    rng = random.Random(seed)
    costs = rand_symmetric_costs(rng, n) if rng.random() < 0.5 else \
        [[0 if i == j else rng.randint(1, 5) for j in range(n)] for i in range(n)]
    caps = [rng.choice([1, 1, 2]) for _ in range(n)]
    if binary:
        inst = with_server(costs, interests=rand_interests(rng, n, m), capacities=caps, m=m)
    else:
        inst = with_server(costs, weights=rand_weights(rng, n, m), capacities=caps)
    found = enumerate_equilibria(inst)
    assert found == naive_equilibria(inst)
    assert exists_equilibrium(inst) == bool(found)
