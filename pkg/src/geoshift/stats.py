"""Per-band summary statistics and Gaussian kernel density estimates.

Statistics stream over patches one at a time: each patch contributes an
exact partial (count, mean, squared deviations, min, max) per band, and
partials merge in patch order with the standard parallel-moments update, so
the result is independent of how the stream is chunked.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from geoshift import kernels
from geoshift.dataset import Patch
from geoshift.errors import DegenerateSampleError, EmptyInputError
from geoshift.scheme import BAND_NAMES, NUM_BANDS

DEFAULT_STRIDE = 8
DEFAULT_GRID_POINTS = 256


@dataclass(frozen=True)
class BandMoments:
    count: int
    minimum: float
    maximum: float
    mean: float
    variance: float  # population variance


@dataclass(frozen=True)
class BandSummary:
    """Running statistics per band, in registry order."""

    per_band: dict[str, BandMoments]

    def __getitem__(self, band: str) -> BandMoments:
        return self.per_band[band]


@dataclass(frozen=True)
class DensityCurve:
    """A kernel density estimate evaluated on an ascending grid."""

    band: str
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    sample_count: int

    def __post_init__(self):
        if np.any(self.density < 0):
            raise ValueError(f"band {self.band!r}: negative density values")

    def mass(self) -> float:
        """Trapezoidal integral of the curve over its grid."""
        return float(np.trapezoid(self.density, self.grid))


def strided_band_values(patch: Patch, stride: int) -> np.ndarray:
    """Every stride-th pixel of each band, row-major. Shape (10, ceil(P/s))."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    flat = patch.image.reshape(NUM_BANDS, -1)
    return flat[:, ::stride].astype(np.float64)


def _merge_moments(a, b):
    """Chan's parallel update for (count, mean, m2); exact in expectation."""
    na, mean_a, m2a = a
    nb, mean_b, m2b = b
    if nb == 0:
        return a
    if na == 0:
        return b
    n = na + nb
    delta = mean_b - mean_a
    mean = mean_a + delta * nb / n
    m2 = m2a + m2b + delta * delta * na * nb / n
    return n, mean, m2


def band_summary(patches: Iterable[Patch], sample_stride: int = DEFAULT_STRIDE) -> BandSummary:
    """Exact running mean/variance/min/max over strided pixels of a stream."""
    if sample_stride < 1:
        raise ValueError(f"sample_stride must be >= 1, got {sample_stride}")
    moments = [(0, 0.0, 0.0) for _ in range(NUM_BANDS)]
    mins = np.full(NUM_BANDS, np.inf)
    maxs = np.full(NUM_BANDS, -np.inf)
    seen = False
    for patch in patches:
        seen = True
        values = strided_band_values(patch, sample_stride)
        for b in range(NUM_BANDS):
            n, mean, m2, lo, hi = kernels.band_moments(np.ascontiguousarray(values[b]))
            moments[b] = _merge_moments(moments[b], (n, mean, m2))
            mins[b] = min(mins[b], lo)
            maxs[b] = max(maxs[b], hi)
    if not seen:
        raise EmptyInputError("band_summary: empty patch stream")

    per_band = {}
    for b, name in enumerate(BAND_NAMES):
        n, mean, m2 = moments[b]
        per_band[name] = BandMoments(
            count=n,
            minimum=float(mins[b]),
            maximum=float(maxs[b]),
            mean=mean,
            variance=m2 / n if n else 0.0,
        )
    return BandSummary(per_band)


def silverman_bandwidth(samples) -> float:
    """Rule-of-thumb bandwidth 0.9 * min(sigma, IQR/1.34) * n^(-1/5).

    sigma is the population standard deviation; the IQR uses linear
    interpolation between order statistics.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise DegenerateSampleError(f"need >= 2 samples, got {x.size}")
    sigma = float(x.std())
    if sigma == 0.0:
        raise DegenerateSampleError("all samples equal, bandwidth undefined")
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sigma, (q75 - q25) / 1.34)
    if spread == 0.0:
        # zero IQR with nonzero sigma (heavy point mass); fall back to sigma
        spread = sigma
    return 0.9 * spread * x.size ** (-0.2)


def default_grid(samples, bandwidth: float, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Equally spaced evaluation grid over [min - 3h, max + 3h]."""
    x = np.asarray(samples, dtype=np.float64)
    return np.linspace(x.min() - 3 * bandwidth, x.max() + 3 * bandwidth, points)


def kde(samples, bandwidth: float, grid, band: str = "") -> DensityCurve:
    """Gaussian KDE of the samples on an ascending grid."""
    x = np.ascontiguousarray(samples, dtype=np.float64)
    if x.size < 1:
        raise EmptyInputError("kde: need at least 1 sample")
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    g = np.ascontiguousarray(grid, dtype=np.float64)
    if g.size < 1 or np.any(np.diff(g) <= 0):
        raise ValueError("grid must be strictly ascending")
    density = kernels.kde_evaluate(x, float(bandwidth), g)
    return DensityCurve(
        band=band, grid=g, density=density, bandwidth=float(bandwidth),
        sample_count=int(x.size),
    )
