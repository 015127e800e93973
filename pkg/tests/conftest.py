import numpy as np
import pytest

from geoshift.dataset import Patch
from geoshift.io import write_manifest, write_patch
from geoshift.scheme import NUM_BANDS, PATCH_SIZE


def make_patch(
    patch_id="p0",
    scene_id="s0",
    region="Africa",
    season="Spring",
    image=None,
    labels=None,
    fill=0.0,
    label_fill=0,
):
    """Patch with constant or caller-provided payloads."""
    if image is None:
        image = np.full((NUM_BANDS, PATCH_SIZE, PATCH_SIZE), fill, dtype=np.float32)
    if labels is None:
        labels = np.full((PATCH_SIZE, PATCH_SIZE), label_fill, dtype=np.uint8)
    return Patch(patch_id, scene_id, region, season, image, labels)


def random_patch(rng, patch_id="p0", scene_id="s0", region="Africa", season="Spring"):
    image = rng.uniform(0, 10000, size=(NUM_BANDS, PATCH_SIZE, PATCH_SIZE)).astype(
        np.float32
    )
    labels = rng.integers(0, 8, size=(PATCH_SIZE, PATCH_SIZE)).astype(np.uint8)
    return Patch(patch_id, scene_id, region, season, image, labels)


def two_class_patch(rng, means, sigma, patch_id, scene_id, region, season):
    """Per-pixel class 0/1 patch whose band values are class-dependent
    Gaussians centered at means[class]."""
    labels = rng.integers(0, 2, size=(PATCH_SIZE, PATCH_SIZE)).astype(np.uint8)
    noise = rng.normal(0.0, sigma, size=(NUM_BANDS, PATCH_SIZE, PATCH_SIZE))
    centers = np.where(labels == 0, means[0], means[1])
    image = np.clip(centers[None, :, :] + noise, 0, 10000).astype(np.float32)
    return Patch(patch_id, scene_id, region, season, image, labels)


def write_dataset(directory, patches, dtype="f32", manifest_name="manifest.csv"):
    """Write patches plus a manifest; returns the manifest path."""
    entries = [write_patch(directory / "patches", p, dtype=dtype) for p in patches]
    manifest_path = directory / manifest_name
    write_manifest(entries, manifest_path)
    return manifest_path


@pytest.fixture(scope="session")
def shifted_gap_dataset(tmp_path_factory):
    """Two regions where the same classes occupy shifted band ranges.

    Class 0 sits at 2000 in Africa but 4000 in Europe, while class 1 sits at
    4000 in Africa and 6000 in Europe: a model fit on one region mislabels
    roughly half of the other region's pixels. 2 regions x 6 scenes x 20
    patches, u16 payloads.
    """
    root = tmp_path_factory.mktemp("gap_dataset")
    rng = np.random.default_rng(20240817)
    region_means = {"Africa": (2000.0, 4000.0), "Europe": (4000.0, 6000.0)}
    season_of = {"Africa": "Spring", "Europe": "Summer"}
    patches = []
    for region, means in region_means.items():
        for s in range(6):
            scene_id = f"{region.lower()}_s{s:02d}"
            for p in range(20):
                patches.append(
                    two_class_patch(
                        rng,
                        np.array(means),
                        sigma=300.0,
                        patch_id=f"{scene_id}_p{p:03d}",
                        scene_id=scene_id,
                        region=region,
                        season=season_of[region],
                    )
                )
    return write_dataset(root, patches, dtype="u16")
