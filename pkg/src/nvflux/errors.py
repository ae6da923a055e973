"""Exception hierarchy shared by all nvflux modules."""


class NVFluxError(Exception):
    """Base class for every error raised by nvflux."""


class NonUnitary(NVFluxError, ValueError):
    pass


class NonHermitian(NVFluxError, ValueError):
    pass


class IndexOutOfRange(NVFluxError, IndexError):
    pass


class InvalidParams(NVFluxError, ValueError):
    pass


class InvalidProbability(InvalidParams):
    pass


class UnknownKind(NVFluxError, ValueError):
    pass


class EmptySum(NVFluxError, ValueError):
    pass


class RegisterMismatch(NVFluxError, ValueError):
    pass


class DimensionMismatch(NVFluxError, ValueError):
    pass


class InvalidSequence(NVFluxError, ValueError):
    pass


class WindowTooLong(NVFluxError, ValueError):
    pass


class ThresholdAboveStart(NVFluxError, ValueError):
    pass


class ConfigInvalid(NVFluxError, ValueError):
    pass


class QasmError(NVFluxError, ValueError):
    pass


class CalibrationFailed(NVFluxError, RuntimeError):
    """Best calibration residual exceeded the allowed tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
