"""Exception hierarchy. Every error raised on purpose by the library derives from
``KPlaneError``; value-type problems also derive from ``ValueError``."""


class KPlaneError(Exception):
    """Base class for library errors."""


class DomainError(KPlaneError, ValueError):
    """A parameter falls outside the domain of a formula or operation."""

    def __init__(self, constraint: str, detail: str = None):
        self.constraint = constraint
        message = f"requires {constraint}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class IntegrabilityError(KPlaneError, ValueError):
    """A weighted integral would diverge for the declared decay and weights."""

    def __init__(self, condition: str, detail: str = None):
        self.condition = condition
        message = f"integrability precheck failed: requires {condition}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class ExceptionalSetError(KPlaneError, ValueError):
    """Subspace lies in the measure-zero set where unlift is undefined."""


class DegenerateSampleError(KPlaneError, RuntimeError):
    """Rank-deficient random draws persisted past the retry budget."""


class QuadratureError(KPlaneError, ValueError):
    """Unsupported quadrature request or non-finite integrand values."""


class ConstantOverflowError(KPlaneError, OverflowError):
    """A constant is not representable as a finite double."""


class UnknownCheckError(KPlaneError, LookupError):
    """No check with the requested id is registered."""


class ExperimentFileError(KPlaneError, ValueError):
    """The experiment description does not validate."""
