"""Exception hierarchy shared across the package.

The CLI maps ``InputError`` to exit code 2 and ``SolverError`` to exit
code 1; everything else is a programming error and propagates.
"""


class PriceflowError(Exception):
    """Base class for all package errors."""


class InputError(PriceflowError):
    """Bad user input: malformed files, invalid parameters, domain violations."""


class DomainError(InputError):
    """A value lies outside the domain or range of a demand model."""


class ParseError(InputError):
    """An instance or price file could not be parsed."""


class EmptyMarketError(InputError):
    """An operation requires at least one group and one resource."""


class BudgetError(InputError):
    """A configured enumeration budget would be exceeded."""


class SolverError(PriceflowError):
    """A flow solve failed."""


class InfeasibleFlowError(SolverError):
    """Node balances cannot be satisfied by any feasible flow.

    ``cut`` holds the set of nodes reachable from the remaining excess
    nodes in the residual network; every arc leaving the cut is saturated.
    """

    def __init__(self, message: str, cut: frozenset):
        super().__init__(message)
        self.cut = cut


class NonConvexError(SolverError):
    """Incremental arc costs decreased along an arc beyond tolerance."""
