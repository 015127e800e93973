"""Distribution-shift diagnostics over landscape clusters.

Turns cluster assignments into per-group histograms, the imbalance-corrected
P(group | cluster) table, a 2-D PCA similarity map of the groups, and a
coverage score telling whether a new patch lands in territory a training
group has seen.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from geoshift.clustering import Assignment, ClusterModel, FeatureVector, kmeans_assign
from geoshift.dataset import Patch
from geoshift.errors import EmptyInputError, ZeroVarianceError
from geoshift.scheme import REGIONS, SEASONS
from geoshift.util import fmt_float

Grouping = Mapping[str, str] | Callable[[str], str]


def order_groups(labels: Iterable[str]) -> list[str]:
    """Deterministic group order: vocabulary order for regions/seasons,
    lexicographic otherwise."""
    unique = set(labels)
    for vocab in (REGIONS, SEASONS):
        if unique <= set(vocab):
            return [g for g in vocab if g in unique]
    return sorted(unique)


def _lookup(grouping: Grouping, patch_id: str) -> str:
    if callable(grouping):
        return grouping(patch_id)
    try:
        return grouping[patch_id]
    except KeyError:
        raise ValueError(f"no group label for patch {patch_id!r}") from None


@dataclass(frozen=True)
class ClusterHistogram:
    """Counts of one group's patches per cluster."""

    group: str
    counts: np.ndarray  # (k,) non-negative ints

    def __post_init__(self):
        self.counts.setflags(write=False)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ProbabilityTable:
    """P(group | cluster) per defined cluster column."""

    groups: tuple[str, ...]
    table: np.ndarray  # (groups, k); columns of undefined clusters are 0
    defined: np.ndarray  # (k,) bool

    def __post_init__(self):
        self.table.setflags(write=False)
        self.defined.setflags(write=False)


@dataclass(frozen=True)
class PcaEmbedding:
    groups: tuple[str, ...]
    coordinates: np.ndarray  # (groups, n_components)
    loadings: np.ndarray  # (n_components, k), orthonormal rows
    explained_variance: np.ndarray  # (k,) full spectrum, descending then zeros
    total_variance: float

    def __post_init__(self):
        self.coordinates.setflags(write=False)
        self.loadings.setflags(write=False)
        self.explained_variance.setflags(write=False)


@dataclass(frozen=True)
class CoverageReport:
    patch_id: str
    cluster: int
    distance: float
    training_group: str
    in_training_support: bool
    percentile: float | None  # None when the cluster is unseen by the group


def cluster_histogram(
    assignments: Sequence[Assignment], grouping: Grouping, k: int
) -> list[ClusterHistogram]:
    """Exact per-(group, cluster) counts, one histogram per group."""
    counts: dict[str, np.ndarray] = {}
    for a in assignments:
        group = _lookup(grouping, a.patch_id)
        if group not in counts:
            counts[group] = np.zeros(k, dtype=np.int64)
        counts[group][a.cluster] += 1
    return [ClusterHistogram(g, counts[g]) for g in order_groups(counts)]


def normalize_histogram(histogram: ClusterHistogram) -> np.ndarray:
    """Counts as frequencies summing to 1."""
    total = histogram.total
    if total == 0:
        raise EmptyInputError(f"group {histogram.group!r}: empty histogram")
    return histogram.counts / total


def group_given_cluster(
    histograms: Sequence[ClusterHistogram], strict_bayes: bool = False
) -> ProbabilityTable:
    """Normalized P(group | cluster) with the dataset-imbalance correction.

    Each column scores group g as P(cluster | g) / P(g) and is normalized to
    sum to 1; `strict_bayes=True` multiplies by P(g) instead (the textbook
    posterior with a uniform per-cluster evidence term). Clusters no group
    ever used are flagged undefined and left at zero.
    """
    if not histograms:
        raise EmptyInputError("group_given_cluster: no histograms")
    k = histograms[0].counts.shape[0]
    totals = np.array([h.total for h in histograms], dtype=np.float64)
    grand_total = totals.sum()
    if grand_total == 0:
        raise EmptyInputError("group_given_cluster: all histograms empty")

    counts = np.stack([h.counts for h in histograms]).astype(np.float64)
    nonempty = totals > 0
    p_cluster_given_group = np.zeros_like(counts)
    p_cluster_given_group[nonempty] = counts[nonempty] / totals[nonempty, None]
    p_group = totals / grand_total

    if strict_bayes:
        scores = p_cluster_given_group * p_group[:, None]
    else:
        scores = np.zeros_like(counts)
        scores[nonempty] = p_cluster_given_group[nonempty] / p_group[nonempty, None]

    column_mass = scores.sum(axis=0)
    defined = counts.sum(axis=0) > 0
    table = np.zeros((len(histograms), k))
    table[:, defined] = scores[:, defined] / column_mass[defined]
    return ProbabilityTable(
        groups=tuple(h.group for h in histograms), table=table, defined=defined
    )


def pca_embed(
    histograms: Sequence[ClusterHistogram], n_components: int = 2
) -> PcaEmbedding:
    """Project normalized, mean-centered group histograms onto their
    principal axes.

    Uses an exact singular value decomposition; each component is signed so
    its largest-magnitude loading is positive. The stored spectrum covers
    all cluster dimensions (zeros past the rank), so it sums to the total
    variance.
    """
    if len(histograms) < 2:
        raise EmptyInputError(f"pca_embed: need >= 2 groups, got {len(histograms)}")
    if n_components < 1:
        raise ValueError(f"n_components must be >= 1, got {n_components}")
    k = histograms[0].counts.shape[0]
    freq = np.stack([normalize_histogram(h) for h in histograms])
    centered = freq - freq.mean(axis=0)
    n_groups = centered.shape[0]

    total_variance = float((centered * centered).sum() / n_groups)
    if total_variance == 0.0:
        raise ZeroVarianceError("all groups have identical cluster frequencies")

    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    # sign convention: largest-magnitude loading of each axis points positive
    for i in range(vt.shape[0]):
        j = int(np.argmax(np.abs(vt[i])))
        if vt[i, j] < 0:
            vt[i] = -vt[i]
            u[:, i] = -u[:, i]

    n_components = min(n_components, vt.shape[0])
    coordinates = u[:, :n_components] * s[:n_components]
    spectrum = np.zeros(k)
    spectrum[: s.shape[0]] = (s * s) / n_groups
    return PcaEmbedding(
        groups=tuple(h.group for h in histograms),
        coordinates=coordinates,
        loadings=vt[:n_components],
        explained_variance=spectrum,
        total_variance=total_variance,
    )


def coverage_score(
    model: ClusterModel,
    training_assignments: Sequence[Assignment],
    grouping: Grouping,
    training_group: str,
    new_patch: Patch | FeatureVector,
) -> CoverageReport:
    """Where a new patch falls relative to one training group's clusters.

    The percentile is the inclusive fraction of the group's same-cluster
    distances at or below the new patch's distance; it is None when the
    group never populated that cluster.
    """
    from geoshift.clustering import featurize

    feature = new_patch if isinstance(new_patch, FeatureVector) else featurize(new_patch)
    assignment = kmeans_assign(model, feature)

    reference = [
        a.distance
        for a in training_assignments
        if a.cluster == assignment.cluster
        and _lookup(grouping, a.patch_id) == training_group
    ]
    if reference:
        percentile = sum(d <= assignment.distance for d in reference) / len(reference)
    else:
        percentile = None
    return CoverageReport(
        patch_id=assignment.patch_id,
        cluster=assignment.cluster,
        distance=assignment.distance,
        training_group=training_group,
        in_training_support=bool(reference),
        percentile=percentile,
    )


def histograms_csv(histograms: Sequence[ClusterHistogram]) -> str:
    lines = ["group,cluster,count,frequency"]
    for h in histograms:
        freq = normalize_histogram(h) if h.total else h.counts.astype(float)
        for c in range(h.counts.shape[0]):
            lines.append(f"{h.group},{c},{int(h.counts[c])},{fmt_float(freq[c])}")
    return "\n".join(lines) + "\n"


def probability_csv(table: ProbabilityTable) -> str:
    header = "cluster," + ",".join(table.groups) + ",defined"
    lines = [header]
    for c in range(table.table.shape[1]):
        if table.defined[c]:
            cells = [fmt_float(v) for v in table.table[:, c]]
        else:
            cells = [""] * len(table.groups)
        lines.append(f"{c}," + ",".join(cells) + f",{str(bool(table.defined[c])).lower()}")
    return "\n".join(lines) + "\n"


def embedding_csv(embedding: PcaEmbedding) -> str:
    n = embedding.coordinates.shape[1]
    header = "group," + ",".join(f"pc{i + 1}" for i in range(n))
    lines = [header]
    for g, coords in zip(embedding.groups, embedding.coordinates):
        lines.append(f"{g}," + ",".join(fmt_float(v) for v in coords))
    return "\n".join(lines) + "\n"


def coverage_json(report: CoverageReport) -> str:
    return json.dumps(
        {
            "patch_id": report.patch_id,
            "cluster": report.cluster,
            "distance": report.distance,
            "training_group": report.training_group,
            "in_training_support": report.in_training_support,
            "percentile": report.percentile,
        },
        indent=2,
    ) + "\n"
