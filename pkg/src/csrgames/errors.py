"""Exception types raised across the package."""

from __future__ import annotations


class CSRError(Exception):
    """Base class for all package errors."""


class MalformedInput(CSRError):
    """Input data could not be turned into a valid instance or placement."""


class MissingObject(CSRError):
    """A positively weighted object has no holder anywhere."""

    def __init__(self, node: int, obj: int):
        super().__init__(f"node {node} needs object {obj} but nobody holds it")
        self.node = node
        self.obj = obj


class CapacityNotUnit(CSRError):
    """An operation that needs unit caches met a larger cache."""

    def __init__(self, node: int, capacity: int):
        super().__init__(f"node {node} has capacity {capacity}; split capacities first")
        self.node = node
        self.capacity = capacity


class InvalidPlacement(CSRError):
    """A placement violates capacities, pins or object ranges."""


class NotUltrametric(CSRError):
    """Costs violate d(i,k) <= max(d(i,j), d(j,k)) or are asymmetric."""

    def __init__(self, i: int, j: int, k: int):
        super().__init__(f"ultrametric inequality fails on triple ({i}, {j}, {k})")
        self.triple = (i, j, k)


class NoOtherHolder(CSRError):
    """A node is the only holder of its object."""


class InconsistentOracle(CSRError):
    """Two witness placements gave contradicting answers."""


class StepBoundExceeded(CSRError):
    """A solver ran past its proven iteration bound."""


class DeviationBoundExceeded(CSRError):
    """The two-object sweep performed more deviations than allowed."""


class NonIncreasingPotential(CSRError):
    """A better-response step failed to raise the potential."""


class CyclicPrefs(CSRError):
    """Node preferences contain a preference cycle."""

    def __init__(self, cycle):
        super().__init__(f"preference cycle through nodes {list(cycle)}")
        self.cycle = tuple(cycle)


class NotStronglyConnected(CSRError):
    """A digraph operation required strong connectivity."""


class SearchBudgetExceeded(CSRError):
    """An exhaustive search hit its budget before finishing."""


class BudgetExceeded(SearchBudgetExceeded):
    """Equilibrium enumeration hit its budget."""


class InsufficientSupply(CSRError):
    """Less than one unit of an object is available to a node."""

    def __init__(self, node: int, obj: int, supply):
        super().__init__(f"node {node} sees only {supply} of object {obj}")
        self.node = node
        self.obj = obj
        self.supply = supply


class ParseError(MalformedInput):
    """Text input could not be parsed."""


class Not3Sat(ParseError):
    """A clause does not have exactly three literals."""
