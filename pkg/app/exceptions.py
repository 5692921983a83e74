class NearFieldError(Exception):
    """Base exception for all near-field localization errors"""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class InvalidArgumentError(NearFieldError, ValueError):
    """Raised when a numerical argument is outside its admissible domain."""


class InvalidScenarioError(NearFieldError):
    """Raised when a simulation scenario violates its invariants.

    Not a ValueError so that it propagates unchanged out of model validators.
    """


class IllConditionedBasisError(NearFieldError):
    """Raised when a projector basis is numerically rank deficient.

    Attributes:
        condition: Ratio of the smallest to the largest singular value.
    """

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class SnapshotFormatError(NearFieldError):
    """Raised when a snapshot file cannot be decoded."""


class ConfigError(NearFieldError):
    """Raised when a configuration document cannot be loaded or validated."""


class BenchmarkIOError(NearFieldError):
    """Raised when benchmark results cannot be written or read."""


class DeflationError(NearFieldError):
    """Raised when projecting out a detection increases the residual energy.

    Attributes:
        before: Residual energy before the projection.
        after: Residual energy after the projection.
    """

    def __init__(self, message: str, before: float, after: float):
        super().__init__(message)
        self.before = before
        self.after = after
