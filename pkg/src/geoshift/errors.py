"""Exception types raised by geoshift."""


class GeoshiftError(Exception):
    """Base class for all geoshift-specific errors."""


class UnknownRawClassError(GeoshiftError):
    """A raw land-use class name is not part of the 11-name scheme."""


class ManifestError(GeoshiftError):
    """Manifest is missing, malformed, or internally inconsistent."""


class PatchFormatError(GeoshiftError):
    """Patch payload or sidecar header fails validation."""


class EmptyInputError(GeoshiftError):
    """An operation that requires data received none."""


class DegenerateSampleError(GeoshiftError):
    """Samples carry no spread (all values equal), bandwidth undefined."""


class ClusteringError(GeoshiftError):
    """Invalid clustering request (K = 0, fewer points than K, bad dims)."""


class ZeroVarianceError(GeoshiftError):
    """All groups identical; no principal directions exist."""


class DivergenceError(GeoshiftError):
    """Training loss became non-finite."""
