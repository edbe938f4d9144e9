"""Exception hierarchy shared by the numerical modules."""


class ABCError(Exception):
    """Base class for all errors raised by this package."""


class PoleError(ABCError, ZeroDivisionError):
    """A rational function was evaluated at (or numerically on) one of its poles."""


class ConvergenceError(ABCError, ArithmeticError):
    """An iterative root finder did not reach its tolerance."""


class BranchPointError(ABCError, ValueError):
    """gamma = sqrt(s^2 + k^2) requested at a branch point s = +-ik."""


class DegenerateError(ABCError, ArithmeticError):
    """A quotient or decomposition is numerically degenerate."""


class SingularMatrixError(ABCError, ArithmeticError):
    pass


class MaxIterError(ABCError, ArithmeticError):
    """GMRES exhausted its iteration budget."""

    def __init__(self, msg, iterations=None, residual=None):
        super().__init__(msg)
        self.iterations = iterations
        self.residual = residual


class BreakdownError(ABCError, ArithmeticError):
    pass


class SolveError(ABCError, RuntimeError):
    """A single solve inside a sweep or study failed."""


class OriginError(ABCError, ValueError):
    pass
