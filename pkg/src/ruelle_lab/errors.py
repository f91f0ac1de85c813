"""Exception hierarchy shared by every module."""


class RuelleLabError(Exception):
    """Base class for all library errors."""


class InputError(RuelleLabError):
    """Bad user input (maps to CLI exit code 2)."""


class AnalysisError(RuelleLabError):
    """A hypothesis or numerical invariant failed (maps to CLI exit code 1)."""


class DegenerateInput(InputError):
    pass


class UnknownFilter(InputError):
    pass


class InvalidParam(InputError):
    pass


class ParseError(InputError):
    pass


class SchemaError(InputError):
    pass


class UnknownFunction(InputError):
    pass


class ScaleMismatch(InputError):
    pass


class WindowTooSmall(InputError):
    pass


class GridMismatch(InputError):
    pass


class PreconditionFailed(AnalysisError):
    """Raised when an analysis needs R1 = 1 or m0(1) = sqrt(N) and the filter fails it."""


class NegativeWeight(AnalysisError):
    pass


class OrbitEscape(AnalysisError):
    def __init__(self, message, orbit=()):
        super().__init__(message)
        self.orbit = list(orbit)


class EigenvalueMismatch(AnalysisError):
    pass


class DimensionMismatch(AnalysisError):
    pass


class IllConditioned(AnalysisError):
    pass


class NotAFixedPoint(AnalysisError):
    pass


class NotCycleConstant(AnalysisError):
    pass


class NotConverged(AnalysisError):
    pass
