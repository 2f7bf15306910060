"""Exception types shared across the package."""


class BevMineError(Exception):
    """Base class for all package errors."""


class BehindCamera(BevMineError):
    pass


class NonPositiveDepth(BevMineError):
    pass


class PointAtInfinity(BevMineError):
    pass


class TooFewPoints(BevMineError):
    pass


class DegenerateConfiguration(BevMineError):
    pass


class InsufficientSeed(BevMineError):
    """Raised internally when the uncertainty seed cannot support a DLT fit."""


class NonPositiveSigma(BevMineError):
    pass


class ZeroGradient(BevMineError):
    pass


class ZeroPrincipalGradient(ZeroGradient):
    pass


class DimensionMismatch(BevMineError):
    pass


class PlacementFailure(BevMineError):
    pass


class DegenerateSeries(BevMineError):
    pass


class InvalidConfig(BevMineError):
    pass


class UnsupportedVersion(BevMineError):
    pass


class MismatchedInputs(BevMineError):
    pass


class IoError(BevMineError):
    pass
