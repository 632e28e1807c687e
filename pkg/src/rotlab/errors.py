"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`RotlabError`,
so callers (and the CLI) can separate numerical-hypothesis failures from bugs.
"""


class RotlabError(Exception):
    pass


# linear algebra
class NotSquare(RotlabError, ValueError):
    pass


class NotNormal(RotlabError, ValueError):
    pass


class NotUnitary(NotNormal):
    pass


class NoConvergence(RotlabError, ArithmeticError):
    pass


class DomainViolation(RotlabError, ValueError):
    pass


class DimensionMismatch(RotlabError, ValueError):
    pass


# representations
class NotRational(RotlabError, ValueError):
    pass


class LengthMismatch(RotlabError, ValueError):
    pass


class MissingExactData(RotlabError, ValueError):
    pass


class InvalidPhaseMatrix(RotlabError, ValueError):
    pass


# obstruction
class GapViolation(DomainViolation):
    """An eigenvalue sits too close to the branch cut of a logarithm."""


class NoGap(RotlabError, ValueError):
    """The spectral arcs of all pairs cover the whole circle."""


class GapAtHalfViolation(RotlabError, ArithmeticError):
    """The almost-projection has no usable spectral gap at 1/2."""


class ParamViolation(RotlabError, ValueError):
    pass


# stability search
class NormTooLarge(RotlabError, ValueError):
    pass


class NoSpectralGap(RotlabError, ArithmeticError):
    pass


class Diverged(RotlabError, ArithmeticError):
    """Raised by :func:`rotlab.search.repair` on request; carries the result."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ParseError(RotlabError, ValueError):
    pass
