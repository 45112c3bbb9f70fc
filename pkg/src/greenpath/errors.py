"""Exception hierarchy shared by every greenpath module."""


class GreenpathError(Exception):
    """Base class for all library errors."""


class DomainError(GreenpathError, ValueError):
    """A point or parameter is incompatible with the domain it is used with."""


class DimensionError(DomainError):
    """Point dimension does not match the domain dimension."""


class SingularKernelError(GreenpathError, ValueError):
    """Kernel evaluated on its singular support (e.g. the diagonal)."""


class UnsupportedError(GreenpathError, NotImplementedError):
    """The requested (domain, kernel, boundary condition) combination is not available."""


class QuadratureError(GreenpathError, RuntimeError):
    """A quadrature failed to reach its tolerance within the evaluation budget."""


class MaxStepsExceeded(GreenpathError, RuntimeError):
    """A random walk did not reach the boundary within its step budget."""

    def __init__(self, message: str, n_unfinished: int = 0):
        super().__init__(message)
        self.n_unfinished = n_unfinished
