"""Exception hierarchy.

Two roots matter to callers: :class:`InputError` (the data handed in is
invalid) and :class:`NumericalError` (valid data, but a construction or
solver could not deliver). The CLI maps them to exit codes 1 and 2.
"""


class NilflowError(Exception):
    """Base class for every error raised by this package."""


class InputError(NilflowError, ValueError):
    pass


class NumericalError(NilflowError, ArithmeticError):
    pass


class DimensionMismatch(InputError):
    pass


class NotSquare(DimensionMismatch):
    pass


class NotUnipotent(InputError):
    pass


class NotNilpotent(InputError):
    pass


class ZeroNilpotent(InputError):
    pass


class DetNotOne(InputError):
    pass


class NotPositiveDefinite(InputError):
    pass


class ZeroVector(InputError):
    pass


class NotATriple(InputError):
    pass


class ModelArityMismatch(InputError):
    pass


class InvalidChartPoint(InputError):
    pass


class GeometryViolation(InputError):
    pass


class NonCommuting(InputError):
    """Two monodromies fail to commute; ``pair`` holds the offending indices."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class NotNilpotentFamily(NumericalError):
    pass


class Infeasible(NumericalError):
    """A constrained linear system has no solution.

    ``witness`` is a left-null certificate ``y`` with ``y @ A == 0`` and
    ``y @ b != 0``; ``residual`` is ``y @ b``.
    """

    def __init__(self, message, witness=None, residual=None):
        super().__init__(message)
        self.witness = witness
        self.residual = residual


class GradingNotFound(NumericalError):
    pass


class CheckFailed(NumericalError):
    def __init__(self, message, membership=None):
        super().__init__(message)
        self.membership = membership


class NonConvergence(NumericalError):
    """Iteration budget exhausted; ``result`` carries the best iterate."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
