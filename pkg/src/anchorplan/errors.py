from typing import ClassVar


class AnchorPlanError(Exception):
    """Failures that surface to the command line with a dedicated exit status."""

    exit_code: ClassVar[int] = 1
    kind: ClassVar[str] = "error"


class ConfigError(AnchorPlanError):
    exit_code = 2
    kind = "config_error"


class LockHeldError(ConfigError):
    kind = "lock_held"


class MissingPrerequisiteError(AnchorPlanError):
    exit_code = 3
    kind = "missing_prerequisite"


class NumericError(AnchorPlanError):
    exit_code = 4
    kind = "numeric_failure"


class ShapeError(ValueError):
    pass


class HorizonMismatchError(ValueError):
    pass


class CountMismatchError(ValueError):
    pass


class ScenarioInfeasibleError(ValueError):
    pass
