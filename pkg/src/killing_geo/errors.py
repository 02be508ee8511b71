"""Exception hierarchy shared by every module of the package."""


class KillingGeoError(Exception):
    """Base class for all errors raised by killing_geo."""


class ParseError(KillingGeoError):
    """Malformed expression or config text.

    ``position`` is a 0-based character offset for expressions; config
    errors additionally carry ``line`` and ``column`` (1-based).
    """

    def __init__(self, message, position=None, line=None, column=None):
        self.message = message
        self.position = position
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        elif position is not None:
            where = f" (at position {position})"
        super().__init__(message + where)


class ValidationError(KillingGeoError):
    def __init__(self, key, reason):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")


class NonPositiveField(KillingGeoError):
    pass


class OutOfDomain(KillingGeoError):
    pass


class BoundaryTooClose(KillingGeoError):
    pass


class NotPeriodic(KillingGeoError):
    pass


class ToleranceNotMet(KillingGeoError):
    pass


class CurveNotClosed(KillingGeoError):
    pass


class ObstructionNonzero(KillingGeoError):
    """The base is compact and the integral of tau/mu does not vanish, so the
    submersion has no global section."""

    def __init__(self, integral, tolerance):
        self.integral = integral
        self.tolerance = tolerance
        super().__init__(
            f"integral of tau/mu over the compact base is {integral:.6e} "
            f"(tolerance {tolerance:.1e}); no global section exists"
        )


class MaxIterationsExceeded(KillingGeoError):
    def __init__(self, report):
        self.report = report
        super().__init__(
            f"solver stopped after {report.iterations} iterations with "
            f"residual {report.residual:.3e}"
        )


class NotSpacelike(KillingGeoError):
    pass


class NotClosed(KillingGeoError):
    pass


class GridMismatch(KillingGeoError):
    pass


class OutOfRange(KillingGeoError):
    pass


class DegenerateFrame(KillingGeoError):
    pass


class LeftDomain(KillingGeoError):
    """A curve integration reached the domain boundary early; ``curve``
    holds the part computed so far."""

    def __init__(self, message, curve=None):
        self.curve = curve
        super().__init__(message)
