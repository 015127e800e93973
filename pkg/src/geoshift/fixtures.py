"""Packaged dataset-composition fixture.

Ships the 252-scene composition table (scene counts and per-scene patch
counts per region/season) and expands it into a metadata-only manifest so
composition summaries can be reproduced without the pixel payloads. The
source distribution publishes patch totals per (region, season) cell only,
so patches are spread as evenly as possible across each cell's scenes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from geoshift.dataset import Manifest, ManifestEntry
from geoshift.io import write_manifest

SCENE_TABLE_RESOURCE = "sen12ms_scenes.csv"


@dataclass(frozen=True)
class SceneRecord:
    scene_id: str
    region: str
    season: str
    patch_count: int


def sen12ms_scene_table() -> list[SceneRecord]:
    """The packaged 252-row scene table."""
    text = (
        resources.files("geoshift.data").joinpath(SCENE_TABLE_RESOURCE).read_text("utf-8")
    )
    reader = csv.DictReader(text.splitlines())
    return [
        SceneRecord(
            scene_id=row["scene_id"],
            region=row["region"],
            season=row["season"],
            patch_count=int(row["patch_count"]),
        )
        for row in reader
    ]


def sen12ms_manifest() -> Manifest:
    """Expand the scene table into an in-memory metadata-only manifest."""
    entries = []
    for scene in sen12ms_scene_table():
        for i in range(scene.patch_count):
            entries.append(
                ManifestEntry(
                    patch_id=f"{scene.scene_id}_p{i:04d}",
                    scene_id=scene.scene_id,
                    region=scene.region,
                    season=scene.season,
                    image_path=None,
                    label_path=None,
                )
            )
    return Manifest(tuple(entries))


def write_sen12ms_manifest(path: str | Path) -> Path:
    """Materialize the metadata-only manifest as a CSV on disk."""
    path = Path(path)
    write_manifest(sen12ms_manifest().entries, path)
    return path
