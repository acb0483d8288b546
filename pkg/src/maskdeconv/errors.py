"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Array shapes or lengths do not agree."""


class ArgumentError(ValueError):
    """A scalar argument is outside its admissible range."""


class ValidationError(ValueError):
    """A configuration or distribution description failed validation."""


class NormalizationError(ValueError):
    """A vector required to have unit norm does not."""


class DegenerateInputError(ValueError):
    """Input is numerically degenerate for the requested construction."""


class NumericalError(RuntimeError):
    """A numerical kernel (e.g. an SVD) failed."""


class StepSizeError(RuntimeError):
    """An iterative solver's objective increased under its chosen step."""


class TrialError(RuntimeError):
    """A solver failed inside an experiment trial; the message names the trial."""
