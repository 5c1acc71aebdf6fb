"""Exception types shared across the package."""


class SizeLimitError(ValueError):
    """Combinatorial input exceeds the supported size cap."""


class ConfigurationError(ValueError):
    """A run configuration is inconsistent or under-resolved."""


class LatticeMismatchError(ValueError):
    """Two lattice objects that must match do not."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SingularConfigurationError(DomainError):
    """Evaluation point sits on a singular manifold (coincident points, shell hits)."""


class PreconditionError(ValueError):
    """A documented precondition (ordering, support margin, ...) is violated."""


class InvalidMajorantError(ValueError):
    """Candidate majorant Gram matrix is not positive definite."""


class QuadratureError(RuntimeError):
    """Quadrature failed to reach the requested tolerance.

    Carries the residual estimate from the last refinement step.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual
