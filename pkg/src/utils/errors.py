class ScalingError(Exception):
    pass


class CloudFormatError(ScalingError, ValueError):
    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class EstimationError(ScalingError, ValueError):
    pass


class FitError(ScalingError, ValueError):
    pass


class ConfigError(ScalingError, ValueError):
    def __init__(self, message, diff=None):
        super().__init__(message)
        self.diff = list(diff or [])


class TrainingFault(ScalingError, RuntimeError):
    """Non-finite loss, gradient or output; `trace` holds the rows logged before the fault."""

    def __init__(self, message, trace=None, step=None):
        super().__init__(message)
        self.trace = list(trace or [])
        self.step = step


class MissingRecordsError(ScalingError):
    """A report was asked for records the run directory does not hold."""

    def __init__(self, message, missing=None):
        self.missing = list(missing or [])
        super().__init__(message + ("" if not self.missing else ": " + ", ".join(self.missing)))
