"""Exception types shared across the calibration pipeline."""

from __future__ import annotations


class CalibrationError(Exception):
    """Base class for solver and pipeline failures."""


class InsufficientConstraintsError(CalibrationError):
    """Raised when too few correspondences survive to constrain a solve."""


class InsufficientTextureError(CalibrationError):
    """Raised when an image yields too few usable photometric keypoints."""


class SolverStalledError(CalibrationError):
    """Raised when a solver cannot decrease the cost for many consecutive steps.

    Carries the best estimate found so far in ``partial``.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class ScanFormatError(CalibrationError):
    """Raised on a malformed binary scan or manifest file.

    ``path`` and ``offset`` locate the first bad byte where that is known.
    """

    def __init__(self, message: str, path=None, offset=None):
        super().__init__(message)
        self.path = path
        self.offset = offset
