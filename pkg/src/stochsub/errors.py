"""Exception hierarchy shared by every module."""


class StochSubError(Exception):
    """Base class for all library errors."""


class InvalidInstanceError(StochSubError, ValueError):
    pass


class InvalidRealizationError(StochSubError, ValueError):
    pass


class InvalidArgumentError(StochSubError, ValueError):
    pass


class InvalidPointError(StochSubError, ValueError):
    """A fractional point lies outside the domain an operation requires."""


class UnsupportedMatroidError(StochSubError, TypeError):
    pass


class EnumerationTooLargeError(StochSubError, RuntimeError):
    """Exact enumeration would exceed the configured scenario cap."""

    def __init__(self, what: str, size: float, cap: int, hint: str = "use Monte Carlo evaluation instead"):
        self.what = what
        self.size = size
        self.cap = cap
        super().__init__(f"{what}: {size:.6g} scenarios exceeds cap {cap}; {hint}")


class LPError(StochSubError, RuntimeError):
    """The LP solver reported a status that is impossible for valid inputs."""
