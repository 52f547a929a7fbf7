"""Exception types shared by the model, the solvers and the CLI."""


class AltitudeError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(AltitudeError, ValueError):
    """A scenario field violates its documented range."""

    def __init__(self, field, reason):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")


class Infeasible(AltitudeError):
    """The altitude interval left by the bounds and the rate floor is empty."""


class DegenerateEnergy(AltitudeError):
    """Total energy is not positive, so efficiency is undefined."""


class DomainError(AltitudeError, ValueError):
    """An altitude lies outside the domain where a decomposition is monotone."""


class DegenerateSegment(AltitudeError, ValueError):
    """A projection target does not strictly dominate the box lower corner."""


class ConfigError(AltitudeError):
    """An experiment config document failed schema validation."""

    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}" if path else reason)
