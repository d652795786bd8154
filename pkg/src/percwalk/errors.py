"""Exception taxonomy shared across the package."""


class PercwalkError(Exception):
    """Base class for package-specific failures."""


class ParameterError(PercwalkError, ValueError):
    """An argument or configuration value is outside its documented domain."""


class ResourceLimitError(PercwalkError):
    """A requested computation exceeds the configured memory/size budget."""


class SamplingBudgetError(PercwalkError):
    """Rejection sampling exhausted its attempt budget.

    Attributes
    ----------
    attempts : int
        Number of candidate draws consumed before giving up.
    """

    def __init__(self, message, attempts):
        super().__init__(message)
        self.attempts = attempts


class TruncationError(PercwalkError):
    """A structure of interest touches the realized window and may extend outside."""


class DeadWalkerError(PercwalkError):
    """The walker sits on a site with no open incident edge."""


class WeightRangeError(PercwalkError, OverflowError):
    """Conductances span more orders of magnitude than float64 can hold,
    even after rescaling by the leftmost exponent."""


class SolverError(PercwalkError):
    """A linear solve failed to reach the requested residual.

    Attributes
    ----------
    residual : float
        Relative residual reached when the solver gave up.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class InsufficientDataError(PercwalkError):
    """Not enough samples/regenerations to form the requested estimate."""


class EstimationError(PercwalkError):
    """An estimator's internal diagnostics failed; data attached for inspection.

    Attributes
    ----------
    diagnostics : dict
        Estimator state at the point of failure.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
