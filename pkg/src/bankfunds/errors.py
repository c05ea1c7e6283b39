"""Exception and warning types raised by bankfunds."""


class ModelError(ValueError):
    """Base class for domain errors.

    ``violations`` lists every constraint that failed when several were
    checked at once (see :func:`bankfunds.model.validate`).
    """

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations else [message]


class InvalidParameter(ModelError):
    """A parameter is outside its admissible range."""


class NonPositiveVolatility(ModelError):
    """sigma must be strictly positive for closed-form work."""


class DegenerateSaleRevenue(ModelError):
    """r = h/lambda - beta <= 0, so no sale barrier exists."""


class DiscountBelowDrift(ModelError):
    """A discount rate does not exceed the drift; discounted functionals diverge."""


class InvalidGrid(ModelError):
    """Time or space grid is malformed."""


class SingularSystem(ModelError):
    """The boundary-derivative system has no unique solution (b == a)."""


class NonPositiveArgument(ModelError):
    """g is only defined for strictly positive arguments."""


class HorizonTooShort(ModelError):
    """The discount mass beyond the simulation horizon exceeds the cap."""


class ScenarioError(ModelError):
    """A scenario file is malformed or contains unknown keys."""


class DegenerateBand(UserWarning):
    """r == c: the optimal band collapses to b* = a."""


class DriftWarning(UserWarning):
    """Simulation-mode notice that lambda <= mu."""
