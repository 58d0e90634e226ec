"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Arguments violate an operation's preconditions (empty data, bad shapes, ...)."""


class OutOfBoundsError(ValueError):
    """A point lies outside the bounding box a model or metric is defined on."""


class CollectorError(RuntimeError):
    """A goal-collection procedure failed while gathering states."""


class AbsoluteContinuityViolation(ValueError):
    """The reference distribution has zero mass where the target has positive mass."""


class PreconditionUnmet(RuntimeError):
    """A verifier's hypothesis does not hold for the given inputs (not a failure)."""
