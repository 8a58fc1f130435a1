"""Exception types shared across the package."""


class MeshInvariantError(ValueError):
    """A triangle mesh violates a structural invariant."""


class EmptySpaceError(ValueError):
    """A requested finite element space has no degrees of freedom."""


class ReductionError(ValueError):
    """A degree-of-freedom reduction was requested in an unsupported setting."""


class QuadratureError(ValueError):
    """Invalid quadrature request (bad order, degenerate triangle, ...)."""


class ConvergenceError(RuntimeError):
    """An iterative solve that must converge failed to reach its tolerance."""


class DimensionBudgetError(ValueError):
    """A dense diagnostic was requested above the supported dimension."""
