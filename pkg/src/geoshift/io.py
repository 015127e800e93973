"""Loading and writing the portable on-disk dataset format.

Layout per patch:
  <stem>.img   raw little-endian scalars, band-major, 10*256*256 values
  <stem>.json  sidecar header (ids, band order, dims, dtype tag)
  <stem>.lbl   raw uint8 class indices, row-major, 256*256 bytes

The manifest is a UTF-8 CSV with header
  patch_id,scene_id,region,season,image_path,label_path
where paths are relative to the manifest's directory. Empty paths mark a
metadata-only manifest (composition summaries without pixel payloads).
"""

from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from geoshift.dataset import Manifest, ManifestEntry, Patch, clip_reflectance
from geoshift.errors import ManifestError, PatchFormatError
from geoshift.scheme import (
    BAND_NAMES,
    NUM_BANDS,
    PATCH_SIZE,
    REGIONS,
    SEASONS,
    parse_region,
    parse_season,
)

MANIFEST_COLUMNS = ("patch_id", "scene_id", "region", "season", "image_path", "label_path")

_DTYPES = {"u16": np.dtype("<u2"), "f32": np.dtype("<f4")}
VALUE_SCALE_NOTE = "reflectance, integer scale 0-10000"


@dataclass(frozen=True)
class PatchFileHeader:
    """Sidecar metadata stored next to each image payload."""

    patch_id: str
    scene_id: str
    region: str
    season: str
    bands: tuple[str, ...]
    height: int
    width: int
    dtype: str  # "u16" | "f32"
    value_scale: str = VALUE_SCALE_NOTE

    def validate(self) -> None:
        if tuple(self.bands) != BAND_NAMES:
            raise PatchFormatError(
                f"patch {self.patch_id!r}: band order {list(self.bands)} "
                f"does not match the registry"
            )
        if self.height != PATCH_SIZE or self.width != PATCH_SIZE:
            raise PatchFormatError(
                f"patch {self.patch_id!r}: dims {self.height}x{self.width}, "
                f"expected {PATCH_SIZE}x{PATCH_SIZE}"
            )
        if self.dtype not in _DTYPES:
            raise PatchFormatError(
                f"patch {self.patch_id!r}: dtype tag {self.dtype!r} not in "
                f"{sorted(_DTYPES)}"
            )


def load_manifest(path: str | Path) -> Manifest:
    """Parse a manifest CSV into a validated Manifest."""
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    base = path.parent

    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: empty file, expected a header row") from None
        if tuple(h.strip() for h in header) != MANIFEST_COLUMNS:
            raise ManifestError(
                f"{path}: bad header {header!r}, expected {','.join(MANIFEST_COLUMNS)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(MANIFEST_COLUMNS):
                raise ManifestError(
                    f"{path}:{lineno}: expected {len(MANIFEST_COLUMNS)} fields, got {len(row)}"
                )
            patch_id, scene_id, region, season, image_rel, label_rel = (
                field.strip() for field in row
            )
            if not patch_id or not scene_id:
                raise ManifestError(f"{path}:{lineno}: empty patch_id or scene_id")
            if patch_id in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate patch_id: {patch_id!r}")
            seen.add(patch_id)
            try:
                region = parse_region(region)
                season = parse_season(season)
            except ValueError as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from None
            entries.append(
                ManifestEntry(
                    patch_id=patch_id,
                    scene_id=scene_id,
                    region=region,
                    season=season,
                    image_path=(base / image_rel) if image_rel else None,
                    label_path=(base / label_rel) if label_rel else None,
                )
            )
    return Manifest(tuple(entries))


def write_manifest(entries, path: str | Path) -> None:
    """Write manifest rows; paths are stored relative to the manifest dir."""
    path = Path(path)
    base = path.parent
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MANIFEST_COLUMNS)
    for e in entries:
        writer.writerow(
            [
                e.patch_id,
                e.scene_id,
                e.region,
                e.season,
                e.image_path.relative_to(base).as_posix() if e.image_path else "",
                e.label_path.relative_to(base).as_posix() if e.label_path else "",
            ]
        )
    from geoshift.util import atomic_write_text

    atomic_write_text(path, buf.getvalue())


def write_patch(directory: str | Path, patch: Patch, dtype: str = "f32") -> ManifestEntry:
    """Write one patch (payload + sidecar + labels), returning its entry."""
    if dtype not in _DTYPES:
        raise PatchFormatError(f"dtype tag {dtype!r} not in {sorted(_DTYPES)}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    image_path = directory / f"{patch.patch_id}.img"
    label_path = directory / f"{patch.patch_id}.lbl"

    if dtype == "u16":
        payload = np.rint(patch.image).astype(_DTYPES["u16"])
    else:
        payload = patch.image.astype(_DTYPES["f32"])

    header = PatchFileHeader(
        patch_id=patch.patch_id,
        scene_id=patch.scene_id,
        region=patch.region,
        season=patch.season,
        bands=BAND_NAMES,
        height=PATCH_SIZE,
        width=PATCH_SIZE,
        dtype=dtype,
    )
    from geoshift.util import atomic_write_bytes, atomic_write_text

    atomic_write_bytes(image_path, payload.tobytes(order="C"))
    atomic_write_text(
        image_path.with_suffix(".json"), json.dumps(asdict(header), indent=2) + "\n"
    )
    atomic_write_bytes(label_path, patch.labels.astype(np.uint8).tobytes(order="C"))
    return ManifestEntry(
        patch_id=patch.patch_id,
        scene_id=patch.scene_id,
        region=patch.region,
        season=patch.season,
        image_path=image_path,
        label_path=label_path,
    )


def read_patch_header(image_path: Path) -> PatchFileHeader:
    sidecar = image_path.with_suffix(".json")
    if not sidecar.is_file():
        raise PatchFormatError(f"missing sidecar header: {sidecar}")
    with open(sidecar, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        header = PatchFileHeader(
            patch_id=raw["patch_id"],
            scene_id=raw["scene_id"],
            region=raw["region"],
            season=raw["season"],
            bands=tuple(raw["bands"]),
            height=int(raw["height"]),
            width=int(raw["width"]),
            dtype=raw["dtype"],
            value_scale=raw.get("value_scale", VALUE_SCALE_NOTE),
        )
    except KeyError as exc:
        raise PatchFormatError(f"{sidecar}: missing header field {exc}") from None
    header.validate()
    return header


def load_patch(entry: ManifestEntry) -> Patch:
    """Load and validate one patch from its manifest entry."""
    if entry.image_path is None or entry.label_path is None:
        raise PatchFormatError(
            f"patch {entry.patch_id!r}: metadata-only entry has no pixel payload"
        )
    if not entry.image_path.is_file():
        raise PatchFormatError(f"image file not found: {entry.image_path}")
    if not entry.label_path.is_file():
        raise PatchFormatError(f"label file not found: {entry.label_path}")

    header = read_patch_header(entry.image_path)
    if (header.patch_id, header.scene_id) != (entry.patch_id, entry.scene_id):
        raise PatchFormatError(
            f"header/manifest id mismatch: header says "
            f"{header.patch_id!r}/{header.scene_id!r}, manifest says "
            f"{entry.patch_id!r}/{entry.scene_id!r}"
        )

    dt = _DTYPES[header.dtype]
    expected = NUM_BANDS * PATCH_SIZE * PATCH_SIZE * dt.itemsize
    blob = entry.image_path.read_bytes()
    if len(blob) != expected:
        raise PatchFormatError(
            f"{entry.image_path}: size mismatch, expected {expected} bytes, "
            f"got {len(blob)}"
        )
    image = np.frombuffer(blob, dtype=dt).reshape(NUM_BANDS, PATCH_SIZE, PATCH_SIZE)
    image = clip_reflectance(image)

    expected_lbl = PATCH_SIZE * PATCH_SIZE
    lbl_blob = entry.label_path.read_bytes()
    if len(lbl_blob) != expected_lbl:
        raise PatchFormatError(
            f"{entry.label_path}: size mismatch, expected {expected_lbl} bytes, "
            f"got {len(lbl_blob)}"
        )
    labels = np.frombuffer(lbl_blob, dtype=np.uint8).reshape(PATCH_SIZE, PATCH_SIZE)
    labels = labels.copy()

    return Patch(
        patch_id=entry.patch_id,
        scene_id=entry.scene_id,
        region=entry.region,
        season=entry.season,
        image=image,
        labels=labels,
    )


@dataclass(frozen=True)
class DatasetSummary:
    """Scene and patch counts per (region, season) with marginal totals."""

    scene_cells: dict[tuple[str, str], int]
    patch_cells: dict[tuple[str, str], int]

    def cell(self, region: str, season: str) -> tuple[int, int]:
        key = (region, season)
        return self.scene_cells.get(key, 0), self.patch_cells.get(key, 0)

    def region_total(self, region: str) -> tuple[int, int]:
        return (
            sum(v for (r, _), v in self.scene_cells.items() if r == region),
            sum(v for (r, _), v in self.patch_cells.items() if r == region),
        )

    def season_total(self, season: str) -> tuple[int, int]:
        return (
            sum(v for (_, s), v in self.scene_cells.items() if s == season),
            sum(v for (_, s), v in self.patch_cells.items() if s == season),
        )

    @property
    def total_scenes(self) -> int:
        return sum(self.scene_cells.values())

    @property
    def total_patches(self) -> int:
        return sum(self.patch_cells.values())


def summarize_manifest(manifest: Manifest) -> DatasetSummary:
    """Count scenes and patches per (region, season)."""
    scene_cells: dict[tuple[str, str], int] = {}
    patch_cells: dict[tuple[str, str], int] = {}
    for scene in manifest.scenes.values():
        key = (scene.region, scene.season)
        scene_cells[key] = scene_cells.get(key, 0) + 1
        patch_cells[key] = patch_cells.get(key, 0) + len(scene.patch_ids)
    return DatasetSummary(scene_cells, patch_cells)


def summary_csv(summary: DatasetSummary) -> str:
    """Tidy CSV with one row per cell plus Total rows and columns."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["region", "season", "scenes", "patches"])
    for region in REGIONS:
        for season in SEASONS:
            scenes, patches = summary.cell(region, season)
            writer.writerow([region, season, scenes, patches])
        scenes, patches = summary.region_total(region)
        writer.writerow([region, "Total", scenes, patches])
    for season in SEASONS:
        scenes, patches = summary.season_total(season)
        writer.writerow(["Total", season, scenes, patches])
    writer.writerow(["Total", "Total", summary.total_scenes, summary.total_patches])
    return buf.getvalue()


def summary_table(summary: DatasetSummary) -> str:
    """Human-readable grid, cells formatted as 'scenes (patches)'."""

    def fmt(pair: tuple[int, int]) -> str:
        return f"{pair[0]} ({pair[1]:,})"

    headers = ["Region"] + list(SEASONS) + ["Total"]
    rows = []
    for region in REGIONS:
        cells = [fmt(summary.cell(region, s)) for s in SEASONS]
        rows.append([region] + cells + [fmt(summary.region_total(region))])
    totals = [fmt(summary.season_total(s)) for s in SEASONS]
    rows.append(
        ["Total"] + totals + [fmt((summary.total_scenes, summary.total_patches))]
    )

    widths = [max(len(r[i]) for r in [headers] + rows) for i in range(len(headers))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"
