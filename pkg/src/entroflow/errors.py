"""Exception types shared across the package."""


class EntroflowError(Exception):
    """Base class for all package-specific errors."""


class OutOfWindow(EntroflowError):
    """A time outside the model's admissible window was requested."""


class ChartViolation(EntroflowError):
    """A point outside the model's chart domain was requested."""


class LogOfZero(EntroflowError):
    """A log-derived quantity was requested where the solution vanishes."""


class QuadratureDivergence(EntroflowError):
    """Refinement failed to stabilize an integral.

    ``levels`` holds the per-refinement values observed before giving up,
    ``divergent`` is True when the monotone-growth rule fired (the integral
    looks genuinely infinite) rather than mere non-convergence.
    """

    def __init__(self, message, levels=None, divergent=False):
        super().__init__(message)
        self.levels = list(levels) if levels is not None else []
        self.divergent = divergent


class CensoredDominates(EntroflowError):
    """More than half of the paths never exited within the horizon."""


class InsufficientCurve(EntroflowError):
    """An entropy curve is too short or too sparse to classify."""


class ConfigError(EntroflowError):
    """A scenario configuration failed to parse or validate."""
