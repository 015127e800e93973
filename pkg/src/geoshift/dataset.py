"""Patch and manifest types.

A Patch is one 256x256 multiband tile with its per-pixel label mask; a
Manifest indexes patch records into scenes, each scene tagged with one
region and one season. Both are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from geoshift.errors import ManifestError, PatchFormatError
from geoshift.scheme import NUM_BANDS, NUM_CLASSES, PATCH_SIZE, REFLECTANCE_MAX


@dataclass(frozen=True)
class Patch:
    """One image tile: 10 x 256 x 256 reflectance plus a 256 x 256 label mask."""

    patch_id: str
    scene_id: str
    region: str
    season: str
    image: np.ndarray  # (bands, rows, cols) float32, values in [0, 10000]
    labels: np.ndarray  # (rows, cols) uint8, values in [0, 8)

    def __post_init__(self):
        if self.image.shape != (NUM_BANDS, PATCH_SIZE, PATCH_SIZE):
            raise PatchFormatError(
                f"patch {self.patch_id!r}: image shape {self.image.shape}, "
                f"expected {(NUM_BANDS, PATCH_SIZE, PATCH_SIZE)}"
            )
        if self.labels.shape != (PATCH_SIZE, PATCH_SIZE):
            raise PatchFormatError(
                f"patch {self.patch_id!r}: label shape {self.labels.shape}, "
                f"expected {(PATCH_SIZE, PATCH_SIZE)}"
            )
        if self.labels.max(initial=0) >= NUM_CLASSES:
            bad = int(self.labels.max())
            raise PatchFormatError(
                f"patch {self.patch_id!r}: label value {bad} >= {NUM_CLASSES}"
            )
        self.image.setflags(write=False)
        self.labels.setflags(write=False)


def clip_reflectance(values: np.ndarray) -> np.ndarray:
    """Clip to the [0, 10000] reflectance scale as float32."""
    return np.clip(values, 0.0, REFLECTANCE_MAX).astype(np.float32, copy=False)


@dataclass(frozen=True)
class ManifestEntry:
    """One manifest row. Paths are absolute, or None in metadata-only mode."""

    patch_id: str
    scene_id: str
    region: str
    season: str
    image_path: Path | None
    label_path: Path | None


@dataclass(frozen=True)
class Scene:
    """All patches of one acquisition, sharing a region and season."""

    scene_id: str
    region: str
    season: str
    patch_ids: tuple[str, ...]


@dataclass(frozen=True)
class Manifest:
    """Dataset index: patch entries plus the derived scene grouping.

    Entries are kept sorted by patch_id, so two manifests with the same rows
    in any file order compare equal and iterate identically.
    """

    entries: tuple[ManifestEntry, ...]
    scenes: dict[str, Scene] = field(init=False, hash=False, compare=False)
    _by_patch: dict[str, ManifestEntry] = field(
        init=False, hash=False, compare=False, repr=False
    )

    def __post_init__(self):
        entries = tuple(sorted(self.entries, key=lambda e: e.patch_id))
        object.__setattr__(self, "entries", entries)

        by_patch: dict[str, ManifestEntry] = {}
        scene_rows: dict[str, list[ManifestEntry]] = {}
        for e in entries:
            if e.patch_id in by_patch:
                raise ManifestError(f"duplicate patch_id: {e.patch_id!r}")
            by_patch[e.patch_id] = e
            scene_rows.setdefault(e.scene_id, []).append(e)

        scenes: dict[str, Scene] = {}
        for scene_id in sorted(scene_rows):
            rows = scene_rows[scene_id]
            first = rows[0]
            for r in rows:
                if (r.region, r.season) != (first.region, first.season):
                    raise ManifestError(
                        f"scene {scene_id!r} mixes {first.region}/{first.season} "
                        f"and {r.region}/{r.season}"
                    )
            scenes[scene_id] = Scene(
                scene_id, first.region, first.season,
                tuple(r.patch_id for r in rows),
            )
        object.__setattr__(self, "scenes", scenes)
        object.__setattr__(self, "_by_patch", by_patch)

    def __len__(self) -> int:
        return len(self.entries)

    def entry(self, patch_id: str) -> ManifestEntry:
        return self._by_patch[patch_id]

    def scene_ids(self, region: str | None = None, season: str | None = None) -> list[str]:
        """Scene ids, optionally filtered, in sorted order."""
        return [
            s.scene_id
            for s in self.scenes.values()
            if (region is None or s.region == region)
            and (season is None or s.season == season)
        ]

    def group_of(self, patch_id: str, grouping: str) -> str:
        """Group label ('continent' or 'season') for one patch."""
        e = self._by_patch[patch_id]
        return e.region if grouping == "continent" else e.season
