import itertools

import numpy as np
import pytest

from geoshift.clustering import (
    Assignment,
    FeatureVector,
    assignments_csv,
    featurize,
    kmeans_assign,
    kmeans_fit,
    kmeans_fit_restarts,
    model_from_json,
    model_to_json,
    representatives,
)
from geoshift.errors import ClusteringError
from tests.conftest import make_patch, random_patch


def fv(patch_id, first, rest=0.0):
    values = np.full(10, rest)
    values[0] = first
    return FeatureVector(patch_id, values)


def brute_force_two_cluster_inertia(points: np.ndarray) -> float:
    """Exhaustive minimum over all 2-partitions (oracle for tiny n)."""
    n = len(points)
    best = np.inf
    for size_a in range(1, n // 2 + 1):
        for group_a in itertools.combinations(range(n), size_a):
            mask = np.zeros(n, dtype=bool)
            mask[list(group_a)] = True
            cost = 0.0
            for side in (points[mask], points[~mask]):
                center = side.mean(axis=0)
                cost += ((side - center) ** 2).sum()
            best = min(best, cost)
    return best


def test_featurize_constant_bands():
    image = np.empty((10, 256, 256), dtype=np.float32)
    for b in range(10):
        image[b] = float(b * 100)
    feature = featurize(make_patch(image=image))
    np.testing.assert_allclose(feature.values, np.arange(10) * 100.0, atol=1e-9)


def test_featurize_half_and_half():
    image = np.zeros((10, 256, 256), dtype=np.float32)
    image[:, :, 128:] = 100.0
    feature = featurize(make_patch(image=image))
    np.testing.assert_allclose(feature.values, 50.0, atol=1e-9)


def test_featurize_matches_double_loop_oracle():
    rng = np.random.default_rng(41)
    patch = random_patch(rng)
    feature = featurize(patch)
    expected = np.zeros(10)
    for b in range(10):
        total = 0.0
        for row in patch.image[b]:
            total += float(row.sum(dtype=np.float64))
        expected[b] = total / 65536
    np.testing.assert_allclose(feature.values, expected, atol=1e-9)


def test_two_point_groups_k2():
    features = [fv("a", 0.0), fv("b", 0.0), fv("c", 10.0), fv("d", 10.0)]
    model, assignments = kmeans_fit(features, k=2, seed=0)
    assert model.inertia == pytest.approx(0.0, abs=1e-12)
    assert sorted(model.centroids[:, 0]) == [0.0, 10.0]
    assert assignments[0].cluster == assignments[1].cluster
    assert assignments[2].cluster == assignments[3].cluster
    assert model.converged


def test_k_equals_n_saturates():
    rng = np.random.default_rng(43)
    features = [
        FeatureVector(f"p{i}", rng.uniform(0, 10000, 10)) for i in range(5)
    ]
    model, assignments = kmeans_fit(features, k=5, seed=7)
    assert model.inertia == pytest.approx(0.0, abs=1e-9)
    assert sorted(a.cluster for a in assignments) == list(range(5))


def test_small_instance_reaches_exhaustive_optimum():
    rng = np.random.default_rng(47)
    for _ in range(5):
        n = int(rng.integers(4, 9))
        points = rng.uniform(0, 10000, size=(n, 10))
        features = [FeatureVector(f"p{i}", points[i]) for i in range(n)]
        best = min(
            kmeans_fit(features, k=2, seed=s)[0].inertia for s in range(20)
        )
        assert best == pytest.approx(
            brute_force_two_cluster_inertia(points), abs=1e-9 * max(1.0, best)
        )


def test_inertia_history_non_increasing():
    rng = np.random.default_rng(53)
    features = [FeatureVector(f"p{i}", rng.uniform(0, 10000, 10)) for i in range(60)]
    model, _ = kmeans_fit(features, k=4, seed=3)
    history = np.array(model.inertia_history)
    assert (np.diff(history) <= 1e-9 * history[0]).all()
    assert model.iterations <= model.max_iterations


def test_fit_is_deterministic():
    rng = np.random.default_rng(59)
    features = [FeatureVector(f"p{i}", rng.uniform(0, 10000, 10)) for i in range(40)]
    m1, a1 = kmeans_fit(features, k=3, seed=11)
    m2, a2 = kmeans_fit(features, k=3, seed=11)
    np.testing.assert_array_equal(m1.centroids, m2.centroids)
    assert a1 == a2


def test_fit_argument_validation():
    features = [fv("a", 0.0), fv("b", 1.0)]
    with pytest.raises(ClusteringError):
        kmeans_fit(features, k=0)
    with pytest.raises(ClusteringError):
        kmeans_fit(features, k=3)


def test_restarts_never_worse():
    rng = np.random.default_rng(61)
    features = [FeatureVector(f"p{i}", rng.uniform(0, 10000, 10)) for i in range(30)]
    single, _ = kmeans_fit_restarts(features, k=5, seed=2, restarts=1)
    multi, _ = kmeans_fit_restarts(features, k=5, seed=2, restarts=5)
    assert multi.inertia <= single.inertia + 1e-12


def hand_model(centroids: np.ndarray):
    from geoshift.clustering import ClusterModel

    return ClusterModel(
        k=centroids.shape[0], centroids=centroids.astype(np.float64),
        inertia=0.0, iterations=0, seed=0, converged=True, tol=1e-6,
        max_iterations=300, inertia_history=(0.0,),
    )


def test_assign_exact_centroid_hit():
    rng = np.random.default_rng(73)
    features = [FeatureVector(f"p{i}", rng.uniform(0, 10000, 10)) for i in range(24)]
    model, _ = kmeans_fit(features, k=6, seed=1)
    a = kmeans_assign(model, FeatureVector("x", model.centroids[3].copy()))
    assert a.cluster == 3
    assert a.distance == 0.0


def test_assign_tie_breaks_to_lowest_index():
    # probe at 50 on axis 0: exactly 30 away from centroids 1 and 4
    centroids = np.zeros((6, 10))
    centroids[:, 0] = [500.0, 80.0, 400.0, 300.0, 20.0, 200.0]
    model = hand_model(centroids)
    tie = kmeans_assign(model, fv("mid", 50.0))
    assert tie.cluster == 1
    assert tie.distance == 30.0


def test_assign_matches_linear_scan_oracle():
    rng = np.random.default_rng(67)
    features = [FeatureVector(f"p{i}", rng.uniform(0, 10000, 10)) for i in range(50)]
    model, _ = kmeans_fit(features, k=7, seed=5)
    for i in range(20):
        probe = FeatureVector(f"q{i}", rng.uniform(0, 10000, 10))
        a = kmeans_assign(model, probe)
        dists = [float(np.linalg.norm(probe.values - c)) for c in model.centroids]
        assert a.cluster == int(np.argmin(dists))
        assert a.distance == pytest.approx(min(dists), abs=1e-9)


def test_assign_dimension_mismatch():
    features = [fv("a", 0.0), fv("b", 5.0)]
    model, _ = kmeans_fit(features, k=2, seed=0)
    bad = object.__new__(FeatureVector)
    object.__setattr__(bad, "patch_id", "bad")
    object.__setattr__(bad, "values", np.zeros(4))
    with pytest.raises(ClusteringError, match="dimension"):
        kmeans_assign(model, bad)


def test_representatives_ordering_and_truncation():
    features = [fv(f"p{i}", float(i)) for i in range(6)]
    model, assignments = kmeans_fit(features, k=1, seed=0)
    reps = representatives(model, assignments, m=3)
    by_distance = sorted(assignments, key=lambda a: (a.distance, a.patch_id))
    assert reps[0] == [a.patch_id for a in by_distance[:3]]

    small = representatives(model, assignments[:2], m=5)
    assert len(small[0]) == 2


def test_representatives_tie_by_patch_id():
    model, assignments = kmeans_fit([fv("b", 0.0), fv("a", 0.0)], k=1, seed=0)
    reps = representatives(model, assignments, m=2)
    assert reps[0] == ["a", "b"]


def test_representatives_zero_distance_first():
    rng = np.random.default_rng(71)
    features = [FeatureVector(f"p{i}", rng.uniform(0, 10000, 10)) for i in range(12)]
    model, assignments = kmeans_fit(features, k=3, seed=9)
    exact = FeatureVector("zzz_exact", model.centroids[0].copy())
    extra = kmeans_assign(model, exact)
    reps = representatives(model, list(assignments) + [extra], m=1)
    assert reps[0] == ["zzz_exact"]


def test_model_json_roundtrip():
    features = [fv(f"p{i}", float(i)) for i in range(8)]
    model, _ = kmeans_fit(features, k=2, seed=13)
    restored = model_from_json(model_to_json(model))
    np.testing.assert_array_equal(restored.centroids, model.centroids)
    assert restored.inertia == model.inertia
    assert restored.inertia_history == model.inertia_history
    assert restored.seed == model.seed


def test_assignments_csv_shape():
    text = assignments_csv([Assignment("p1", 3, 1.5), Assignment("p2", 0, 0.0)])
    lines = text.strip().splitlines()
    assert lines[0] == "patch_id,cluster,distance"
    assert lines[1] == "p1,3,1.5"
