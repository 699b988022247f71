"""Exception types raised across the package."""


class DomainError(ValueError):
    """Input lies outside the domain where the quantity is defined."""


class ConjugateInfiniteError(ArithmeticError):
    """The supremum defining a convex conjugate is unbounded."""


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations."""


class InfeasibleError(RuntimeError):
    """A surrogate design problem has no solution for the requested bound."""
