"""Exception hierarchy shared by the solver modules."""


class CompalError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(CompalError, ValueError):
    """Contract violation: a vector or matrix has the wrong shape."""


class ProxUnboundedError(CompalError, ValueError):
    """The prox parameter is not below the prox-boundedness threshold."""

    def __init__(self, mu, threshold):
        self.mu = mu
        self.threshold = threshold
        super().__init__(
            f"prox-unbounded: mu={mu!r} must lie in (0, {threshold!r})"
        )


class DomainError(CompalError, ValueError):
    """A point lies outside the domain of the regularizer."""


class UnsupportedError(CompalError, ValueError):
    """The requested operation does not apply to this problem."""


class MaxInnerIterations(CompalError):
    """The subproblem solver ran out of iterations.

    ``best`` holds the certificate of the iterate with the smallest
    stationarity measure seen so far.
    """

    def __init__(self, message, best=None, outer_k=None):
        self.best = best
        self.outer_k = outer_k
        super().__init__(message)


class UnboundedBelow(CompalError):
    """The augmented Lagrangian dropped below the configured floor."""

    def __init__(self, message, x=None, value=None):
        self.x = x
        self.value = value
        super().__init__(message)


class InsufficientHistory(CompalError, ValueError):
    """Too few outer iterations to estimate a convergence rate."""
