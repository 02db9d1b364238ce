"""Exception types shared across the package."""


class ObtuseWalkError(Exception):
    """Base class for all domain errors raised by this package."""


class SizeCapError(ObtuseWalkError):
    """Requested enumeration would exceed the configured entry cap."""


class PredictabilityError(ObtuseWalkError):
    """A process required to be predictable is not."""


class MartingaleError(ObtuseWalkError):
    """A sequence required to be a martingale is not."""
