"""Band registry, consolidated class scheme, and region/season vocabularies.

Everything in this module is fixed by the dataset conventions: 10 ordered
Sentinel-2 bands, 8 consolidated land-use classes with stable indices and
legend colors, and the 11-name raw scheme that consolidates onto them.
"""

from __future__ import annotations

from dataclasses import dataclass

from geoshift.errors import UnknownRawClassError

# Ordered Sentinel-2 bands. The order is load-bearing: it fixes feature-vector
# layout and the on-disk band-major tensor layout, so it must never change.
BAND_NAMES: tuple[str, ...] = (
    "blue",
    "green",
    "red",
    "re1",
    "re2",
    "re3",
    "nir1",
    "nir2",
    "swir1",
    "swir2",
)
NUM_BANDS = len(BAND_NAMES)
BAND_INDEX: dict[str, int] = {name: i for i, name in enumerate(BAND_NAMES)}

# Reflectance values are kept on the 0-10000 integer scale; loaders clip here.
REFLECTANCE_MAX = 10000.0

PATCH_SIZE = 256
PIXELS_PER_PATCH = PATCH_SIZE * PATCH_SIZE


@dataclass(frozen=True)
class ConsolidatedClass:
    """One of the 8 consolidated land-use classes."""

    index: int
    name: str
    color: str  # RGB hex, legend color


CLASSES: tuple[ConsolidatedClass, ...] = (
    ConsolidatedClass(0, "Dense Forests", "#228B22"),
    ConsolidatedClass(1, "Open Forests", "#9ACD32"),
    ConsolidatedClass(2, "Natural Herbaceous", "#DAA520"),
    ConsolidatedClass(3, "Shrublands", "#808000"),
    ConsolidatedClass(4, "Urban and Built-Up Lands", "#808080"),
    ConsolidatedClass(5, "Permanent Snow & Ice", "#FFFFFF"),
    ConsolidatedClass(6, "Barren", "#8B0000"),
    ConsolidatedClass(7, "Water Bodies", "#0000FF"),
)
NUM_CLASSES = len(CLASSES)
CLASS_BY_NAME: dict[str, ConsolidatedClass] = {c.name: c for c in CLASSES}

# Raw 11-class land-use scheme -> consolidated class. The two mosaic classes
# fold into Open Forests; the herbaceous/cropland trio folds into Natural
# Herbaceous; the remaining six names map to themselves.
CONSOLIDATION: dict[str, str] = {
    "Dense Forests": "Dense Forests",
    "Open Forests": "Open Forests",
    "Forest/Cropland Mosaics": "Open Forests",
    "Natural Herbaceous": "Natural Herbaceous",
    "Herbaceous Croplands": "Natural Herbaceous",
    "Natural Herbaceous/Cropland Mosaics": "Natural Herbaceous",
    "Shrublands": "Shrublands",
    "Urban and Built-Up Lands": "Urban and Built-Up Lands",
    "Permanent Snow & Ice": "Permanent Snow & Ice",
    "Barren": "Barren",
    "Water Bodies": "Water Bodies",
}
RAW_CLASS_NAMES: tuple[str, ...] = tuple(CONSOLIDATION)


@dataclass(frozen=True)
class LabelScheme:
    """A raw class vocabulary and its total mapping onto the 8 classes."""

    name: str
    raw_classes: tuple[str, ...]
    consolidation: dict[str, str]


LCCS_LAND_USE = LabelScheme(
    name="LCCS land-use, consolidated",
    raw_classes=RAW_CLASS_NAMES,
    consolidation=CONSOLIDATION,
)

REGIONS: tuple[str, ...] = (
    "Africa",
    "Asia",
    "Australia",
    "Europe",
    "N. America",
    "S. America",
)
SEASONS: tuple[str, ...] = ("Spring", "Summer", "Fall", "Winter")

_REGION_ALIASES = {r.lower(): r for r in REGIONS}
_REGION_ALIASES.update(
    {
        "north america": "N. America",
        "n america": "N. America",
        "south america": "S. America",
        "s america": "S. America",
    }
)
_SEASON_ALIASES = {s.lower(): s for s in SEASONS}
_SEASON_ALIASES["autumn"] = "Fall"


def consolidate_label(raw_class: str) -> ConsolidatedClass:
    """Map one of the 11 raw land-use class names to its consolidated class.

    Leading/trailing whitespace is trimmed; anything else must match verbatim.
    """
    name = raw_class.strip()
    try:
        return CLASS_BY_NAME[CONSOLIDATION[name]]
    except KeyError:
        raise UnknownRawClassError(f"unknown raw class: {raw_class!r}") from None


def class_palette() -> dict[ConsolidatedClass, str]:
    """Legend color for every consolidated class."""
    return {c: c.color for c in CLASSES}


def parse_region(text: str) -> str:
    """Canonicalize a region name (case-insensitive)."""
    try:
        return _REGION_ALIASES[text.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown region: {text!r}") from None


def parse_season(text: str) -> str:
    """Canonicalize a season name (case-insensitive)."""
    try:
        return _SEASON_ALIASES[text.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown season: {text!r}") from None
