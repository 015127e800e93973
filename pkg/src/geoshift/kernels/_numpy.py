"""Pure-numpy implementations of the hot kernels.

This is the fallback backend (GEOSHIFT_NUMBA=0) and the reference the JIT
backend is tested against. Keep signatures in lockstep with _numba.py.
"""

from __future__ import annotations

import numpy as np

_SQRT_2PI = np.sqrt(2.0 * np.pi)

# Chunk size for the pairwise-distance workspace: 8192 points x K x dims
# stays small while keeping numpy calls coarse.
_ASSIGN_CHUNK = 8192


def kde_evaluate(samples: np.ndarray, bandwidth: float, grid: np.ndarray) -> np.ndarray:
    """Gaussian-kernel density of `samples` at each grid point.

    density(g) = (1 / (n h)) * sum_i phi((g - x_i) / h)
    """
    n = samples.shape[0]
    scale = 1.0 / (n * bandwidth * _SQRT_2PI)
    out = np.empty(grid.shape[0], dtype=np.float64)
    for j in range(grid.shape[0]):
        u = (grid[j] - samples) / bandwidth
        out[j] = scale * np.exp(-0.5 * u * u).sum()
    return out


def nearest_centroids(points: np.ndarray, centroids: np.ndarray):
    """Index of the nearest centroid per point, ties to the lowest index.

    Returns (labels, squared distances). Distances use explicit differences,
    not the expanded dot-product form, so exact ties stay exact.
    """
    n = points.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dist_sq = np.empty(n, dtype=np.float64)
    for start in range(0, n, _ASSIGN_CHUNK):
        stop = min(start + _ASSIGN_CHUNK, n)
        diff = points[start:stop, None, :] - centroids[None, :, :]
        d2 = np.einsum("ikd,ikd->ik", diff, diff)
        idx = np.argmin(d2, axis=1)
        labels[start:stop] = idx
        dist_sq[start:stop] = d2[np.arange(stop - start), idx]
    return labels, dist_sq


def centroid_sums(points: np.ndarray, labels: np.ndarray, k: int):
    """Per-cluster coordinate sums and member counts."""
    dims = points.shape[1]
    sums = np.zeros((k, dims), dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    for c in range(k):
        mask = labels == c
        counts[c] = int(mask.sum())
        if counts[c]:
            sums[c] = points[mask].sum(axis=0)
    return sums, counts


def refine_sweep(points, labels, sums, counts, allow_swaps, eps) -> int:
    """One deterministic pass of strict-improvement moves.

    Single-point relocations (Hartigan style), plus two-point swaps when
    `allow_swaps`, applied in index order whenever the objective drops by
    more than eps. Mutates labels/sums/counts in place; returns move count.
    """
    n, dims = points.shape
    k = sums.shape[0]
    moved = 0
    for i in range(n):
        a = labels[i]
        if counts[a] <= 1:
            continue
        x = points[i]
        mu_a = sums[a] / counts[a]
        loss = counts[a] / (counts[a] - 1) * float(((x - mu_a) ** 2).sum())
        best_b = -1
        best_delta = -eps
        for b in range(k):
            if b == a:
                continue
            if counts[b] == 0:
                gain = 0.0
            else:
                mu_b = sums[b] / counts[b]
                gain = counts[b] / (counts[b] + 1) * float(((x - mu_b) ** 2).sum())
            delta = gain - loss
            if delta < best_delta:
                best_delta = delta
                best_b = b
        if best_b >= 0:
            sums[a] -= x
            counts[a] -= 1
            sums[best_b] += x
            counts[best_b] += 1
            labels[i] = best_b
            moved += 1
    if allow_swaps:
        for i in range(n):
            for j in range(i + 1, n):
                a = labels[i]
                b = labels[j]
                if a == b:
                    continue
                s = points[j] - points[i]
                mu_a = sums[a] / counts[a]
                mu_b = sums[b] / counts[b]
                delta = -2.0 * float(((mu_a - mu_b) * s).sum()) - float(
                    (s * s).sum()
                ) * (1.0 / counts[a] + 1.0 / counts[b])
                if delta < -eps:
                    sums[a] += s
                    sums[b] -= s
                    labels[i] = b
                    labels[j] = a
                    moved += 1
    return moved


def band_means(image: np.ndarray) -> np.ndarray:
    """Mean of each band over all pixels, accumulated in float64."""
    return image.reshape(image.shape[0], -1).mean(axis=1, dtype=np.float64)


def band_moments(values: np.ndarray):
    """(count, mean, sum of squared deviations, min, max) of one band sample."""
    n = values.shape[0]
    if n == 0:
        return 0, 0.0, 0.0, np.inf, -np.inf
    mean = float(values.mean(dtype=np.float64))
    delta = values.astype(np.float64, copy=False) - mean
    m2 = float((delta * delta).sum())
    return n, mean, m2, float(values.min()), float(values.max())


def softmax_probabilities(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise softmax of x @ w.T + b, numerically stabilized."""
    logits = x @ w.T + b
    logits -= logits.max(axis=1, keepdims=True)
    np.exp(logits, out=logits)
    logits /= logits.sum(axis=1, keepdims=True)
    return logits


def softmax_loss_grad(x: np.ndarray, y: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Summed cross-entropy loss and its gradient w.r.t. w and b.

    Returns (loss_sum, grad_w, grad_b); the caller divides by the row count.
    """
    n = x.shape[0]
    p = softmax_probabilities(x, w, b)
    rows = np.arange(n)
    # clip keeps the loss finite when a probability underflows to zero
    loss_sum = -float(np.log(np.maximum(p[rows, y], 1e-300)).sum())
    p[rows, y] -= 1.0
    grad_w = p.T @ x
    grad_b = p.sum(axis=0)
    return loss_sum, grad_w, grad_b


def argmax_rows(p: np.ndarray) -> np.ndarray:
    """Row-wise argmax, ties to the lowest index."""
    return np.argmax(p, axis=1).astype(np.int64)


def count_equal(a: np.ndarray, b: np.ndarray) -> int:
    """Number of positions where the two flat arrays agree."""
    return int(np.count_nonzero(a == b))
