"""Exception hierarchy shared by all specmix modules."""


class SpecmixError(Exception):
    """Base class for every error raised by specmix."""


class DimensionError(SpecmixError, ValueError):
    """Matrix shapes or declared dimensions do not agree."""


class InvariantError(SpecmixError, ValueError):
    """A constructed object violates one of its declared invariants.

    ``invariant`` names the violated property so that reports can quote it.
    """

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


class UnboundedSemigroupError(SpecmixError):
    """The spectrum is incompatible with a bounded semigroup."""


class ToleranceError(SpecmixError):
    """A numerical certificate (rank sequence, annihilation residual, ...) failed."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ConvergenceError(SpecmixError):
    """An iterative routine stopped before reaching its target accuracy."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class BoundNotApplicable(SpecmixError):
    """A bound's hypotheses fail for the requested inputs (e.g. n too small)."""
