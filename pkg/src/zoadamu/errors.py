"""Exception types shared across the package."""


class ZoAdaMUError(Exception):
    """Base class for all package errors."""


class ConfigError(ZoAdaMUError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DegenerateSchedule(ConfigError):
    """The cosine-branch denominator is non-positive somewhere in [T1, T2)."""

    def __init__(self, message: str):
        super().__init__("schedule", message)


class DimensionMismatch(ZoAdaMUError):
    pass


class NonFiniteLoss(ZoAdaMUError):
    """A forward pass returned NaN or Inf; the step is aborted."""


class GradientUnavailable(ZoAdaMUError):
    """A first-order step was requested on an objective without an analytic gradient."""


class MismatchedObjective(ZoAdaMUError):
    """Comparison runs must share the objective and initial point."""


class EmptyGrid(ZoAdaMUError):
    pass


class CallbackRaised(ZoAdaMUError):
    """A host loss callback raised; the step was rolled back."""


class ClosedHandle(ZoAdaMUError):
    pass
