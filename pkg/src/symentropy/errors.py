class ValidationError(ValueError):
    """Input object violates a structural invariant."""


class ConfigurationError(ValueError):
    """Estimator or construction parameters are inconsistent."""


class DegeneracyError(ValueError):
    """A function has degenerate or unresolved critical points."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class ParallelCurvesError(ValueError):
    """Two geodesics are parallel, so their intersection count is undefined."""


class ResourceError(RuntimeError):
    """A computation exceeded its budget; ``partial`` holds what was finished."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class EstimatorError(RuntimeError):
    """An estimator failed inside a comparison; ``report`` holds the partial result."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
