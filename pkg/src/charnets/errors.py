"""Exception types shared across the package."""


class CharnetsError(Exception):
    """Base class for all package errors."""


class OutOfTable(CharnetsError):
    pass


class BoundsViolation(CharnetsError):
    pass


class BadWindow(CharnetsError):
    pass


class BoundaryPoint(CharnetsError):
    pass


class NotAdmissible(CharnetsError):
    pass


class BranchJump(CharnetsError):
    pass


class DegenerateCell(CharnetsError):
    pass


class Fold(CharnetsError):
    pass


class FieldGap(CharnetsError):
    pass


class MaxLength(CharnetsError):
    pass


class LeftDomain(CharnetsError):
    pass


class ClosureFailure(CharnetsError):
    pass


class StencilOutOfDomain(CharnetsError):
    pass


class InsufficientScales(CharnetsError):
    pass


class OriginSingular(CharnetsError):
    pass


class OutOfSampledRange(CharnetsError):
    pass


class WindowTooSmall(CharnetsError):
    pass


class FoldDuringGrowth(CharnetsError):
    pass


class PropertyUnmet(CharnetsError):
    def __init__(self, prop: str, violation: float, detail: str = ""):
        self.prop = prop
        self.violation = violation
        msg = f"property ({prop}) unmet: violation {violation:.3g}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SeamMismatch(CharnetsError):
    pass


class NotACover(CharnetsError):
    pass


class ConfigError(CharnetsError):
    pass
