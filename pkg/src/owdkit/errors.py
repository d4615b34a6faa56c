"""Exception types raised across the toolkit."""


class OwdError(Exception):
    """Base class for all toolkit errors."""


class InvalidBox(OwdError, ValueError):
    pass


class EmptyAfterClip(OwdError, ValueError):
    """The box does not intersect the image frame."""


class ImageTooSmall(OwdError, ValueError):
    pass


class SizeMismatch(OwdError, ValueError):
    pass


class ImageIdMismatch(OwdError, ValueError):
    pass


class UnknownImageId(OwdError, KeyError):
    pass


class UnknownSourceClass(OwdError, KeyError):
    pass


class UnknownCategory(OwdError, KeyError):
    pass


class UnknownTask(OwdError, KeyError):
    pass


class InsufficientImages(OwdError, ValueError):
    pass


class DegenerateDenominator(OwdError, ZeroDivisionError):
    """Precision over known and unknown truth is zero, so WI is undefined."""


class MissingSaliency(OwdError, KeyError):
    pass
