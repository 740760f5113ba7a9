"""Exception types shared across the package."""


class StairScanError(Exception):
    """Base class for all stairscan-specific failures."""


class PcdFormatError(StairScanError):
    """Base class for PCD parsing failures."""


class MalformedHeaderError(PcdFormatError):
    """PCD header is missing required entries or is inconsistent."""


class UnsupportedDataLayoutError(PcdFormatError):
    """PCD is valid but uses a layout this reader does not support."""


class TruncatedPayloadError(PcdFormatError):
    """PCD payload ends before the declared number of points."""


class DegenerateInputError(StairScanError):
    """Geometric input carries no usable information (e.g. coincident points)."""


class DegenerateStaircaseError(StairScanError):
    """A staircase has too few stairs for the requested computation."""


class NoMatchError(StairScanError):
    """Two staircases share no common stair under the merge thresholds."""


class InvalidSpecError(StairScanError):
    """A synthetic scene specification is out of its legal range."""


class InvalidConfigError(StairScanError):
    """A run configuration value is out of range or unknown."""
