"""Exception hierarchy shared by all chfem modules."""


class ChfemError(Exception):
    """Base class for every error raised by chfem."""


class ValidationError(ChfemError, ValueError):
    """A configuration or parameter value is invalid.

    The offending key is stored in ``key`` so callers can report it.
    """

    def __init__(self, key, message=None):
        self.key = key
        super().__init__(message or key)


class NonPositiveGamma(ValidationError):
    def __init__(self, gamma):
        super().__init__("gamma", f"gamma must be positive, got {gamma!r}")


class MobilityNotBoundedBelow(ValidationError):
    def __init__(self, minimum):
        super().__init__("mobility", f"mobility attains {minimum:.6g} <= 0 on the admissible range")


class PotentialUnboundedBelow(ValidationError):
    def __init__(self, reason):
        super().__init__("f", f"potential is unbounded below: {reason}")


class ParseError(ChfemError):
    def __init__(self, message, line=None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class LevelTooLarge(ChfemError):
    pass


class SpaceNotNested(ChfemError):
    pass


class GridsNotNested(ChfemError):
    pass


class SingularSystem(ChfemError):
    pass


class NewtonDiverged(ChfemError):
    def __init__(self, message, history=None):
        self.history = list(history or [])
        super().__init__(message)


class LinearSolveFailed(ChfemError):
    pass


class NonPositiveError(ChfemError, ValueError):
    pass
