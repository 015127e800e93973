"""Landscape clustering: band-mean features and a deterministic K-Means.

Patches are summarized by their 10 per-band mean reflectances and clustered
with k-means++ seeding plus Lloyd iterations. Identical inputs and seed give
bit-identical models regardless of thread count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from geoshift import kernels
from geoshift.dataset import Patch
from geoshift.errors import ClusteringError
from geoshift.scheme import NUM_BANDS, REFLECTANCE_MAX
from geoshift.util import child_seed, fmt_float

DEFAULT_K = 16
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERATIONS = 300

# strict-improvement refinement after Lloyd converges
REFINE_PASS_CAP = 100
# pairwise swap moves are O(n^2) per pass; only worth it on small problems
SWAP_MOVE_LIMIT = 2048


@dataclass(frozen=True)
class FeatureVector:
    """Per-patch feature: mean reflectance of each band, registry order."""

    patch_id: str
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (NUM_BANDS,):
            raise ClusteringError(
                f"feature {self.patch_id!r}: expected {NUM_BANDS} values, "
                f"got shape {self.values.shape}"
            )
        if self.values.min() < 0 or self.values.max() > REFLECTANCE_MAX:
            raise ClusteringError(
                f"feature {self.patch_id!r}: values outside [0, {REFLECTANCE_MAX:g}]"
            )
        self.values.setflags(write=False)


@dataclass(frozen=True)
class Assignment:
    patch_id: str
    cluster: int
    distance: float  # Euclidean distance to the assigned centroid


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centroids: np.ndarray  # (k, 10)
    inertia: float
    iterations: int
    seed: int
    converged: bool
    tol: float
    max_iterations: int
    inertia_history: tuple[float, ...]

    def __post_init__(self):
        self.centroids.setflags(write=False)


def featurize(patch: Patch) -> FeatureVector:
    """Mean of each band over all pixels of the patch."""
    return FeatureVector(patch.patch_id, kernels.band_means(patch.image))


def _feature_matrix(features: Sequence[FeatureVector]) -> np.ndarray:
    return np.ascontiguousarray([f.values for f in features], dtype=np.float64)


def _plusplus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: D^2-weighted draws from the data points."""
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = points[first]
    if k == 1:
        return centroids
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # every remaining point coincides with a chosen centroid
            idx = int(rng.integers(n))
        centroids[c] = points[idx]
        if c + 1 < k:
            d2 = np.minimum(d2, ((points - centroids[c]) ** 2).sum(axis=1))
    return centroids


def kmeans_fit(
    features: Sequence[FeatureVector],
    k: int = DEFAULT_K,
    seed: int = 0,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    tol: float = DEFAULT_TOL,
) -> tuple[ClusterModel, list[Assignment]]:
    """Fit K-Means by Lloyd iteration from a k-means++ start.

    Iterates until the largest centroid displacement drops below `tol` or
    `max_iterations` is hit. Empty clusters seize the point currently
    farthest from its centroid. Converged runs are then polished with
    deterministic strict-improvement sweeps (single-point relocations, plus
    pairwise swaps on small inputs), which markedly improves the odds that a
    handful of restarts reaches the global optimum on brute-forceable
    instances. The recorded inertia sequence never increases.
    """
    if k < 1:
        raise ClusteringError(f"k must be >= 1, got {k}")
    if len(features) < k:
        raise ClusteringError(f"need at least k={k} features, got {len(features)}")
    if tol < 0:
        raise ClusteringError(f"tol must be >= 0, got {tol}")

    points = _feature_matrix(features)
    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(points, k, rng)

    labels, d2 = kernels.nearest_centroids(points, centroids)
    history = [float(d2.sum())]
    converged = False
    iterations = 0

    for _ in range(max_iterations):
        sums, counts = kernels.centroid_sums(points, labels, k)
        new_centroids = centroids.copy()
        nonempty = counts > 0
        new_centroids[nonempty] = sums[nonempty] / counts[nonempty, None]

        # empty-cluster repair: hand each empty cluster the point that is
        # currently worst served, farthest first
        d2_repair = d2.copy()
        for c in np.flatnonzero(~nonempty):
            idx = int(np.argmax(d2_repair))
            new_centroids[c] = points[idx]
            d2_repair[idx] = 0.0

        displacement = float(
            np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        )
        centroids = new_centroids
        labels, d2 = kernels.nearest_centroids(points, centroids)
        history.append(float(d2.sum()))
        iterations += 1
        if displacement < tol:
            converged = True
            break

    sums, counts = kernels.centroid_sums(points, labels, k)
    refined = False
    for _ in range(REFINE_PASS_CAP):
        eps = 1e-12 * (1.0 + history[-1])
        moves = int(
            kernels.refine_sweep(
                points, labels, sums, counts, points.shape[0] <= SWAP_MOVE_LIMIT, eps
            )
        )
        if moves == 0:
            break
        refined = True
        # exact recompute cancels the incremental-update drift
        sums, counts = kernels.centroid_sums(points, labels, k)
        nonempty = counts > 0
        centroids = centroids.copy()
        centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
        history.append(float(((points - centroids[labels]) ** 2).sum()))
    if refined:
        labels, d2 = kernels.nearest_centroids(points, centroids)
        history.append(float(d2.sum()))

    model = ClusterModel(
        k=k,
        centroids=centroids,
        inertia=history[-1],
        iterations=iterations,
        seed=seed,
        converged=converged,
        tol=tol,
        max_iterations=max_iterations,
        inertia_history=tuple(history),
    )
    assignments = [
        Assignment(f.patch_id, int(labels[i]), float(np.sqrt(d2[i])))
        for i, f in enumerate(features)
    ]
    return model, assignments


def kmeans_fit_restarts(
    features: Sequence[FeatureVector],
    k: int = DEFAULT_K,
    seed: int = 0,
    restarts: int = 1,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    tol: float = DEFAULT_TOL,
) -> tuple[ClusterModel, list[Assignment]]:
    """Best-of-N fit by inertia. Restart 0 reuses `seed`, so N=1 equals a
    plain fit and N>1 can only match or improve it; ties keep the earliest."""
    if restarts < 1:
        raise ClusteringError(f"restarts must be >= 1, got {restarts}")
    best = None
    for r in range(restarts):
        run_seed = seed if r == 0 else child_seed(seed, f"restart{r}")
        model, assignments = kmeans_fit(features, k, run_seed, max_iterations, tol)
        if best is None or model.inertia < best[0].inertia:
            best = (model, assignments)
    return best


def kmeans_assign(model: ClusterModel, feature: FeatureVector) -> Assignment:
    """Nearest centroid by Euclidean distance, ties to the lowest index."""
    if feature.values.shape[0] != model.centroids.shape[1]:
        raise ClusteringError(
            f"feature {feature.patch_id!r}: dimension "
            f"{feature.values.shape[0]} != model {model.centroids.shape[1]}"
        )
    point = np.ascontiguousarray(feature.values, dtype=np.float64).reshape(1, -1)
    labels, d2 = kernels.nearest_centroids(point, model.centroids)
    return Assignment(feature.patch_id, int(labels[0]), float(np.sqrt(d2[0])))


def representatives(
    model: ClusterModel, assignments: Iterable[Assignment], m: int
) -> dict[int, list[str]]:
    """Up to `m` patch ids per cluster, closest first, ties by patch id."""
    if m < 1:
        raise ClusteringError(f"m must be >= 1, got {m}")
    by_cluster: dict[int, list[Assignment]] = {c: [] for c in range(model.k)}
    for a in assignments:
        by_cluster[a.cluster].append(a)
    return {
        c: [a.patch_id for a in sorted(members, key=lambda a: (a.distance, a.patch_id))[:m]]
        for c, members in by_cluster.items()
    }


def model_to_json(model: ClusterModel) -> str:
    """Full-precision JSON encoding of a fitted model."""
    payload = {
        "k": model.k,
        "seed": model.seed,
        "tol": model.tol,
        "max_iterations": model.max_iterations,
        "iterations": model.iterations,
        "converged": model.converged,
        "inertia": model.inertia,
        "inertia_history": list(model.inertia_history),
        "centroids": [[float(v) for v in row] for row in model.centroids],
    }
    return json.dumps(payload, indent=2) + "\n"


def model_from_json(text: str) -> ClusterModel:
    raw = json.loads(text)
    return ClusterModel(
        k=int(raw["k"]),
        centroids=np.asarray(raw["centroids"], dtype=np.float64),
        inertia=float(raw["inertia"]),
        iterations=int(raw["iterations"]),
        seed=int(raw["seed"]),
        converged=bool(raw["converged"]),
        tol=float(raw["tol"]),
        max_iterations=int(raw["max_iterations"]),
        inertia_history=tuple(float(v) for v in raw["inertia_history"]),
    )


def assignments_csv(assignments: Iterable[Assignment]) -> str:
    lines = ["patch_id,cluster,distance"]
    for a in assignments:
        lines.append(f"{a.patch_id},{a.cluster},{fmt_float(a.distance)}")
    return "\n".join(lines) + "\n"
