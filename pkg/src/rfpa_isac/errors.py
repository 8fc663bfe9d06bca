"""Exception types raised across the package."""


class RfpaError(Exception):
    """Base class for all package errors."""


class ConstraintViolation(RfpaError, ValueError):
    """A waveform configuration breaks one of its design constraints."""

    def __init__(self, name, detail=""):
        self.name = name
        msg = f"constraint violated: {name}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class LengthMismatch(RfpaError, ValueError):
    pass


class IndexOverflow(RfpaError, ValueError):
    pass


class DuplicateHop(RfpaError, ValueError):
    pass


class SampleRateMismatch(RfpaError, ValueError):
    pass


class DimensionMismatch(RfpaError, ValueError):
    pass


class IllConditioned(RfpaError, ValueError):
    pass


class DegenerateData(RfpaError, ValueError):
    pass


class DomainError(RfpaError, ValueError):
    pass


class BadFlag(RfpaError):
    pass


class BadConfig(RfpaError):
    pass


class IoFailure(RfpaError):
    pass
