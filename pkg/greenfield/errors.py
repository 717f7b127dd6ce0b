class GreenfieldError(Exception):
    pass


class DomainError(GreenfieldError, ValueError):
    """log of zero magnitude, zero lifts, x = 0 where a unit is required."""


class DimensionMismatch(GreenfieldError, ValueError):
    pass


class NotAMorphism(GreenfieldError, ValueError):
    pass


class PreconditionViolation(GreenfieldError, ValueError):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class ResourceLimitExceeded(GreenfieldError, RuntimeError):
    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class BasisRankError(GreenfieldError, RuntimeError):
    def __init__(self, message: str, rank: int, target: int):
        super().__init__(f"{message} (rank {rank} of {target})")
        self.rank = rank
        self.target = target


class SearchFailed(GreenfieldError, RuntimeError):
    pass


class InternalError(GreenfieldError, RuntimeError):
    pass


class ConfigError(GreenfieldError, ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        super().__init__(f"{message}{where}")
        self.message = message
        self.line = line
        self.column = column


class PrecisionLost(GreenfieldError, ArithmeticError):
    pass
