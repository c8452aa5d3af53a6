"""Exception types raised by the fcr package."""


class FCRError(Exception):
    """Base class for all package errors."""


class InvalidGridError(FCRError, ValueError):
    pass


class DimensionError(FCRError, ValueError):
    pass


class DataFormatError(FCRError, ValueError):
    """Malformed CSV / JSON input."""


class NumericalError(FCRError):
    """Base class for failures of the numerical procedure itself."""


class DegenerateCovarianceError(NumericalError):
    pass


class EmptyDatasetError(FCRError, ValueError):
    pass


class NoSignalError(NumericalError):
    """All cross-covariances between residual response and eigen-scores vanish."""


class PoleError(NumericalError):
    pass


class OrthogonalityAssumptionError(NumericalError):
    """The residual cross-covariance is orthogonal to the top eigenspace."""


class DegenerateComponentError(NumericalError):
    pass


class UndefinedObjectiveError(NumericalError):
    pass


class SaturatedModelError(NumericalError, ValueError):
    pass


class TuningFailedError(NumericalError):
    pass


class InvalidSNRError(FCRError, ValueError):
    pass
