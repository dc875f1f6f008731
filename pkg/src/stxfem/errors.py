"""Exception types raised by the package."""


class DegenerateGeometry(ValueError):
    """A simplex or prism has (numerically) zero measure where a proper one is needed."""


class UnsupportedSubdivision(ValueError):
    pass


class InvalidParameter(ValueError):
    pass


class UnsupportedDegree(ValueError):
    pass


class DomainMismatch(ValueError):
    pass


class MissingInterface(ValueError):
    pass


class SingularDiagonal(ArithmeticError):
    pass


class SingularSystem(ArithmeticError):
    pass


class NoConvergence(RuntimeError):
    """Iterative solve stopped before reaching the tolerance.

    The residual history collected so far is kept in ``history``.
    """

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)
