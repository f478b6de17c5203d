"""Exception hierarchy shared by all modules."""


class ExogasError(Exception):
    """Base class for every error raised by the package."""


class StatePositivityViolation(ExogasError, ValueError):
    pass


class InvalidParameters(ExogasError, ValueError):
    pass


class InvalidArgument(ExogasError, ValueError):
    pass


class DegenerateStencil(ExogasError, ValueError):
    pass


class InvalidDensity(ExogasError, ValueError):
    pass


class NewtonDivergence(ExogasError, RuntimeError):
    pass


class PositivityLoss(ExogasError, RuntimeError):
    pass


class StepFailure(ExogasError, RuntimeError):
    """Raised when the step size falls below ``dt_min`` after repeated rejection."""

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump


class HistoryGap(ExogasError, RuntimeError):
    pass


class OracleUnstable(ExogasError, RuntimeError):
    pass


class ConfigError(ExogasError, ValueError):
    """Collects every problem found while parsing a run configuration."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
