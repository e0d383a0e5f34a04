"""Capacitated selfish replication games: models, solvers and oracles."""

from .errors import *  # noqa: F401,F403
from .model import (
    Cmp,
    Instance,
    Verdict,
    best_response,
    compare,
    improving_move,
    is_equilibrium,
    split_capacities,
    sum_cost,
)
from .hierarchy import HierarchyTree, costs_to_tree, is_ultrametric, run_hierarchical, solve_hierarchical
from .undirected import (
    check_acyclic_prefs,
    dynamics_binary,
    potential,
    prefs_to_symmetric_costs,
    run_two_object,
    solve_two_object,
)
from .digraph import Digraph, find_even_cycle, solve_2bin, solve_exact_2dirbin
from .gadgets import CnfFormula, gen_I1, gen_I2, gen_I3, parse_dimacs, sat_bruteforce
from .fractional import (
    access_assignment,
    fractional_best_response,
    is_fractional_equilibrium,
    iterated_fractional_br,
)
from .oracle import enumerate_equilibria, exists_equilibrium, find_equilibrium

__version__ = "0.1.0"
