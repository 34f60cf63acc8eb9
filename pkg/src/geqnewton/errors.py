"""Exception hierarchy shared by all modules."""


class GeqnError(Exception):
    """Base class for every error raised by geqnewton."""


class ParameterError(GeqnError, ValueError):
    """An input parameter is outside its admissible range."""


class DomainError(GeqnError, ValueError):
    """A scalar map was evaluated outside the interval where it is defined."""


class NoCertificateError(GeqnError):
    """The majorant hypotheses fail, so no convergence certificate exists.

    ``condition`` names the violated inequality or hypothesis.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class SingularMatrixError(GeqnError, ArithmeticError):
    """LU factorization met a pivot below the singularity threshold."""


class RegularityError(GeqnError):
    """The Jacobian at the starting point is singular (strong regularity fails)."""


class SubproblemError(GeqnError):
    """The affine subproblem could not be solved.

    ``status`` is the :class:`~geqnewton.avi.AviStatus` of the failure and
    ``iteration`` the outer Newton index, when known.
    """

    def __init__(self, message, status=None, iteration=None):
        super().__init__(message)
        self.status = status
        self.iteration = iteration


class InsufficientDataError(GeqnError, ValueError):
    """Too few usable iterates for the requested estimate."""


class ProblemParseError(GeqnError, ValueError):
    """A problem or LCP file does not match the documented schema."""
