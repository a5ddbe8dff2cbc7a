"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (no convergence, breakdown, ...)."""


class RootFindingError(NumericalError):
    def __init__(self, k, bracket, residual):
        self.k = k
        self.bracket = tuple(bracket)
        self.residual = residual
        super().__init__(
            f"root t_{k} not resolved: bracket={self.bracket!r}, residual={residual:.3e}"
        )


class BreakdownError(NumericalError):
    def __init__(self, iteration, message="zero curvature in conjugate gradients"):
        self.iteration = iteration
        super().__init__(f"{message} (iteration {iteration})")


class QuadratureError(NumericalError):
    def __init__(self, achieved, requested):
        self.achieved = achieved
        self.requested = requested
        super().__init__(
            f"quadrature reached error {achieved:.3e}, requested {requested:.3e}"
        )


class SamplingError(ValueError):
    """A drawn point cannot be weighted (zero sampling density)."""


class ResourceError(RuntimeError):
    """A configured size cap would be exceeded."""
