"""geoshift: distribution-shift diagnostics and cross-group evaluation for
multispectral land-cover datasets."""

__version__ = "0.1.0"

from geoshift.scheme import (  # noqa: F401
    BAND_NAMES,
    CLASSES,
    REGIONS,
    SEASONS,
    class_palette,
    consolidate_label,
)
