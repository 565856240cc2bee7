"""Exception hierarchy shared across the toolkit."""


class UscompoundError(Exception):
    """Base class for all toolkit errors."""


class FormatError(UscompoundError):
    """Malformed image/map file (bad magic, header, or payload size)."""


class RangeError(UscompoundError):
    """Pixel or map values outside the required [0, 1] range, or non-finite."""


class DimensionError(UscompoundError):
    """Incompatible or unsupported grid dimensions."""


class DegenerateError(UscompoundError):
    """An algorithm hit a degenerate case (e.g. single-bin histogram)."""


class EllipseFitError(DegenerateError):
    """Ellipse fitting failed (too few points or non-elliptical conic)."""


class SpecError(UscompoundError):
    """Invalid synthetic-scene or configuration specification."""
