"""Exception types shared across the solver modules."""


class CondControlError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(CondControlError):
    """A run configuration could not be parsed or validated."""


class SingularOperatorError(CondControlError):
    """A direct factorization failed because the operator is singular."""


class EigenConvergenceError(CondControlError):
    """The principal-eigenpair iteration did not reach its tolerance."""


class StructureError(CondControlError):
    """A structural guarantee of the scheme was violated numerically.

    Raised e.g. when a density develops negativity beyond round-off or a
    principal eigenvector comes out with genuinely mixed signs.
    """


class DegenerateMassError(StructureError):
    """Total mass hit zero (or below), so normalised quantities are undefined."""


class NewtonError(CondControlError):
    """The per-step semismooth Newton iteration did not converge."""
