"""Exception types shared across the toolkit."""


class LatflowError(Exception):
    """Base class for all toolkit errors."""


class NonInvertibleBasis(LatflowError):
    """Gram matrix numerically singular at the working precision."""


class PrecisionInsufficient(LatflowError):
    """A quantity is not resolvable at the working precision; raise it."""


class EnumerationBudgetExceeded(LatflowError):
    """Lattice enumeration ran out of nodes.

    Carries the best result found so far in ``best`` when available.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class BudgetExceeded(LatflowError):
    """A scan exhausted its node budget; partial results may be attached."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class TooFewSamples(LatflowError):
    """Not enough certified trajectory samples for a statistic."""


class TooFewRecords(LatflowError):
    """Not enough approximation records for an exponent fit."""


class DomainError(LatflowError):
    """Argument outside the mathematical domain of a formula."""


class SolveFailure(LatflowError):
    """Monotone bisection could not bracket or converge."""


class UnachievableRate(LatflowError):
    """Target singularity rate outside what the construction can witness."""


class FlatFunction(LatflowError):
    """sup |f| over the ball is below tolerance; sublevel ratios undefined."""


class ConfigInvalid(LatflowError):
    """Experiment configuration failed validation.

    ``field_errors`` maps field names to human-readable messages.
    """

    def __init__(self, field_errors):
        self.field_errors = dict(field_errors)
        msgs = "; ".join(f"{k}: {v}" for k, v in sorted(self.field_errors.items()))
        super().__init__(f"invalid config: {msgs}")


class MissingArtifact(LatflowError):
    """A run artifact referenced by a report does not exist."""
