"""Exception types raised across the package."""


class InvalidParameterError(ValueError):
    """A scalar parameter (m, k, gamma, ...) is outside its admissible range."""


class DimensionMismatchError(ValueError):
    """Array shapes do not agree (e.g. len(x) != W.shape[1])."""


class EnumerationTooLargeError(ValueError):
    """Exhaustive enumeration was requested for a space that is too large."""


class SamplingConsistencyError(RuntimeError):
    """Floating-point drift left no probability mass to sample from."""


class OracleUnavailableError(RuntimeError):
    """The feedback oracle failed to answer; the learner state is unchanged."""


class RejectionBudgetExceeded(RuntimeError):
    """The separable-data generator could not find enough margin examples."""


class FeatureFileError(ValueError):
    """A feature CSV file is malformed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ConfigurationError(ValueError):
    """An experiment specification is invalid."""
