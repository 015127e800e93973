"""Cross-group accuracy harness.

Computes per-scene overall accuracy (pooled correct pixels / pooled pixels),
20% scene-level train/validation splits, and the train-group x eval-group
accuracy matrix: train one model per group, score it on its own withheld
scenes (diagonal) and on every scene of every other group (off-diagonal),
and aggregate mean +- population std over scenes per cell.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from geoshift import kernels
from geoshift.baseline import (
    BaselineModel,
    TrainConfig,
    predict_baseline,
    train_baseline,
    with_seed,
)
from geoshift.dataset import Manifest, Patch
from geoshift.errors import EmptyInputError, ManifestError
from geoshift.io import load_patch
from geoshift.scheme import NUM_CLASSES, REGIONS, SEASONS
from geoshift.shift import order_groups
from geoshift.util import child_seed, fmt_float

Predictor = Callable[[Patch], np.ndarray]
DEFAULT_VAL_FRACTION = 0.2


@dataclass(frozen=True)
class SceneAccuracy:
    scene_id: str
    correct: int
    total: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.total


def pixel_accuracy(pred: np.ndarray, label: np.ndarray) -> tuple[int, int, float]:
    """Exact count of matching cells: (correct, total, fraction)."""
    if pred.shape != label.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs label {label.shape}")
    p = np.ascontiguousarray(pred, dtype=np.int64).ravel()
    l = np.ascontiguousarray(label, dtype=np.int64).ravel()
    for name, arr in (("pred", p), ("label", l)):
        if arr.size and (arr.min() < 0 or arr.max() >= NUM_CLASSES):
            raise ValueError(f"{name} contains class values outside [0, {NUM_CLASSES})")
    correct = kernels.count_equal(p, l)
    total = p.size
    return correct, total, correct / total


def scene_accuracy(patches: Iterable[Patch], predictor: Predictor) -> SceneAccuracy:
    """Pooled accuracy over all patches of one scene (pixel-pooled, not
    patch-averaged)."""
    correct = 0
    total = 0
    scene_id = None
    for patch in patches:
        if scene_id is None:
            scene_id = patch.scene_id
        pred = predictor(patch)
        c, t, _ = pixel_accuracy(pred, patch.labels)
        correct += c
        total += t
    if scene_id is None:
        raise EmptyInputError("scene_accuracy: empty scene")
    return SceneAccuracy(scene_id, correct, total)


def split_scenes(
    manifest: Manifest,
    group: str,
    val_fraction: float = DEFAULT_VAL_FRACTION,
    seed: int = 0,
) -> tuple[list[str], list[str]]:
    """Deterministic scene-level split: ceil(val_fraction * n) scenes
    withheld. Splits by scene, never by patch."""
    if group in REGIONS:
        scene_ids = manifest.scene_ids(region=group)
    elif group in SEASONS:
        scene_ids = manifest.scene_ids(season=group)
    else:
        raise ManifestError(f"unknown group label: {group!r}")
    if len(scene_ids) < 2:
        raise ManifestError(
            f"group {group!r} has {len(scene_ids)} scene(s), need >= 2 to split"
        )
    rng = np.random.default_rng(seed)
    shuffled = [scene_ids[i] for i in rng.permutation(len(scene_ids))]
    n_val = math.ceil(val_fraction * len(scene_ids))
    val = sorted(shuffled[:n_val])
    train = sorted(shuffled[n_val:])
    return train, val


@dataclass(frozen=True)
class AccuracyMatrix:
    """Train-group x eval-group grid of per-scene accuracy aggregates."""

    groups: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray  # population std over scenes
    scene_counts: np.ndarray

    def __post_init__(self):
        self.mean.setflags(write=False)
        self.std.setflags(write=False)
        self.scene_counts.setflags(write=False)

    def cell(self, train_group: str, eval_group: str) -> tuple[float, float, int]:
        i = self.groups.index(train_group)
        j = self.groups.index(eval_group)
        return float(self.mean[i, j]), float(self.std[i, j]), int(self.scene_counts[i, j])

    def diagonal_mean(self) -> float:
        return float(np.diag(self.mean).mean())

    def off_diagonal_mean(self) -> float:
        n = len(self.groups)
        mask = ~np.eye(n, dtype=bool)
        return float(self.mean[mask].mean())


@dataclass(frozen=True)
class SceneRecord:
    train_group: str
    eval_group: str
    scene_id: str
    correct: int
    total: int
    accuracy: float
    is_validation: bool


@dataclass(frozen=True)
class ExperimentResult:
    matrix: AccuracyMatrix
    scene_records: tuple[SceneRecord, ...]
    # trained model per group; empty when a predictor hook replaced training
    models: dict[str, BaselineModel]


def aggregate_matrix(
    groups: Sequence[str], records: Sequence[SceneRecord]
) -> AccuracyMatrix:
    """Mean, population std, and scene count per (train, eval) cell."""
    n = len(groups)
    index = {g: i for i, g in enumerate(groups)}
    cells: dict[tuple[int, int], list[float]] = {}
    for r in records:
        cells.setdefault((index[r.train_group], index[r.eval_group]), []).append(
            r.accuracy
        )
    mean = np.zeros((n, n))
    std = np.zeros((n, n))
    counts = np.zeros((n, n), dtype=np.int64)
    for (i, j), accs in cells.items():
        arr = np.asarray(accs)
        mean[i, j] = arr.mean()
        std[i, j] = arr.std()  # population
        counts[i, j] = arr.size
    return AccuracyMatrix(tuple(groups), mean, std, counts)


def _scene_patches(manifest: Manifest, scene_id: str) -> Iterable[Patch]:
    for patch_id in manifest.scenes[scene_id].patch_ids:
        yield load_patch(manifest.entry(patch_id))


def cross_group_experiment(
    manifest: Manifest,
    grouping: str,
    config: TrainConfig | None = None,
    seed: int = 0,
    val_fraction: float = DEFAULT_VAL_FRACTION,
    predictor_factory: Callable[[str, list[str]], Predictor] | None = None,
) -> ExperimentResult:
    """Train one model per group and evaluate it on every group's scenes.

    `grouping` is "continent" or "season". Per train group g the withheld
    scenes of g form the diagonal cell; every scene of every other group
    forms the off-diagonal cells. `predictor_factory(group, train_scene_ids)`
    replaces the trained model when given (test hook).
    """
    if grouping not in ("continent", "season"):
        raise ValueError(f"grouping must be 'continent' or 'season', got {grouping!r}")
    config = config or TrainConfig()

    present = {
        s.region if grouping == "continent" else s.season
        for s in manifest.scenes.values()
    }
    groups = order_groups(present)
    if len(groups) < 2:
        raise ManifestError(f"need >= 2 groups, found {groups}")

    records: list[SceneRecord] = []
    models: dict[str, BaselineModel] = {}
    for train_group in groups:
        train_ids, val_ids = split_scenes(
            manifest, train_group, val_fraction, child_seed(seed, f"split/{train_group}")
        )
        if predictor_factory is not None:
            predictor = predictor_factory(train_group, train_ids)
        else:
            model = train_baseline(
                (p for sid in train_ids for p in _scene_patches(manifest, sid)),
                (p for sid in val_ids for p in _scene_patches(manifest, sid)),
                with_seed(config, child_seed(seed, f"train/{train_group}")),
            )
            models[train_group] = model
            predictor = lambda patch, _m=model: predict_baseline(_m, patch)[0]

        for eval_group in groups:
            if eval_group == train_group:
                scene_ids = val_ids
            elif grouping == "continent":
                scene_ids = manifest.scene_ids(region=eval_group)
            else:
                scene_ids = manifest.scene_ids(season=eval_group)
            for scene_id in scene_ids:
                acc = scene_accuracy(_scene_patches(manifest, scene_id), predictor)
                records.append(
                    SceneRecord(
                        train_group=train_group,
                        eval_group=eval_group,
                        scene_id=scene_id,
                        correct=acc.correct,
                        total=acc.total,
                        accuracy=acc.accuracy,
                        is_validation=eval_group == train_group,
                    )
                )
    return ExperimentResult(aggregate_matrix(groups, records), tuple(records), models)


def labels_oracle_predictor() -> Predictor:
    """Perfect predictor that replays each patch's own labels (test hook)."""

    def predict(patch: Patch) -> np.ndarray:
        return patch.labels.astype(np.int64)

    return predict


def matrix_csv(matrix: AccuracyMatrix) -> str:
    lines = ["train_group," + ",".join(matrix.groups)]
    for i, g in enumerate(matrix.groups):
        cells = []
        for j in range(len(matrix.groups)):
            cells.append(
                f"{fmt_float(matrix.mean[i, j])}±{fmt_float(matrix.std[i, j])}"
                f" ({int(matrix.scene_counts[i, j])})"
            )
        lines.append(f"{g}," + ",".join(cells))
    return "\n".join(lines) + "\n"


def matrix_json(matrix: AccuracyMatrix) -> str:
    cells = []
    for i, tg in enumerate(matrix.groups):
        for j, eg in enumerate(matrix.groups):
            cells.append(
                {
                    "train_group": tg,
                    "eval_group": eg,
                    "mean": float(matrix.mean[i, j]),
                    "std": float(matrix.std[i, j]),
                    "scenes": int(matrix.scene_counts[i, j]),
                    "diagonal": i == j,
                }
            )
    payload = {
        "groups": list(matrix.groups),
        "std_convention": "population",
        "cells": cells,
    }
    return json.dumps(payload, indent=2) + "\n"


def scene_log_csv(records: Sequence[SceneRecord]) -> str:
    lines = ["train_group,eval_group,scene_id,correct,total,accuracy,is_validation"]
    for r in records:
        lines.append(
            f"{r.train_group},{r.eval_group},{r.scene_id},{r.correct},{r.total},"
            f"{fmt_float(r.accuracy)},{str(r.is_validation).lower()}"
        )
    return "\n".join(lines) + "\n"
