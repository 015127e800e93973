"""Numba-compiled implementations of the hot kernels.

Mirrors _numpy.py exactly. prange is only used where every output element is
written by a single iteration, so results do not depend on the thread count.
Reductions that feed accumulators (gradients, centroid sums) stay serial.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_SQRT_2PI = np.sqrt(2.0 * np.pi)


@njit(cache=True, parallel=True)
def kde_evaluate(samples, bandwidth, grid):
    n = samples.shape[0]
    m = grid.shape[0]
    scale = 1.0 / (n * bandwidth * _SQRT_2PI)
    out = np.empty(m, dtype=np.float64)
    for j in prange(m):
        acc = 0.0
        g = grid[j]
        for i in range(n):
            u = (g - samples[i]) / bandwidth
            acc += np.exp(-0.5 * u * u)
        out[j] = scale * acc
    return out


@njit(cache=True, parallel=True)
def nearest_centroids(points, centroids):
    n, dims = points.shape
    k = centroids.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dist_sq = np.empty(n, dtype=np.float64)
    for i in prange(n):
        best = 0
        best_d = np.inf
        for c in range(k):
            d = 0.0
            for j in range(dims):
                diff = points[i, j] - centroids[c, j]
                d += diff * diff
            if d < best_d:
                best_d = d
                best = c
        labels[i] = best
        dist_sq[i] = best_d
    return labels, dist_sq


@njit(cache=True)
def centroid_sums(points, labels, k):
    n, dims = points.shape
    sums = np.zeros((k, dims), dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    for i in range(n):
        c = labels[i]
        counts[c] += 1
        for j in range(dims):
            sums[c, j] += points[i, j]
    return sums, counts


@njit(cache=True)
def refine_sweep(points, labels, sums, counts, allow_swaps, eps):
    n, dims = points.shape
    k = sums.shape[0]
    moved = 0
    for i in range(n):
        a = labels[i]
        if counts[a] <= 1:
            continue
        da2 = 0.0
        for dd in range(dims):
            diff = points[i, dd] - sums[a, dd] / counts[a]
            da2 += diff * diff
        loss = counts[a] / (counts[a] - 1.0) * da2
        best_b = -1
        best_delta = -eps
        for b in range(k):
            if b == a:
                continue
            if counts[b] == 0:
                gain = 0.0
            else:
                db2 = 0.0
                for dd in range(dims):
                    diff = points[i, dd] - sums[b, dd] / counts[b]
                    db2 += diff * diff
                gain = counts[b] / (counts[b] + 1.0) * db2
            delta = gain - loss
            if delta < best_delta:
                best_delta = delta
                best_b = b
        if best_b >= 0:
            for dd in range(dims):
                sums[a, dd] -= points[i, dd]
                sums[best_b, dd] += points[i, dd]
            counts[a] -= 1
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
                cross = 0.0
                s2 = 0.0
                for dd in range(dims):
                    s = points[j, dd] - points[i, dd]
                    cross += (sums[a, dd] / counts[a] - sums[b, dd] / counts[b]) * s
                    s2 += s * s
                delta = -2.0 * cross - s2 * (1.0 / counts[a] + 1.0 / counts[b])
                if delta < -eps:
                    for dd in range(dims):
                        s = points[j, dd] - points[i, dd]
                        sums[a, dd] += s
                        sums[b, dd] -= s
                    labels[i] = b
                    labels[j] = a
                    moved += 1
    return moved


@njit(cache=True, parallel=True)
def band_means(image):
    bands = image.shape[0]
    pixels = image.shape[1] * image.shape[2]
    flat = image.reshape(bands, pixels)
    out = np.empty(bands, dtype=np.float64)
    for b in prange(bands):
        acc = 0.0
        for i in range(pixels):
            acc += flat[b, i]
        out[b] = acc / pixels
    return out


@njit(cache=True)
def band_moments(values):
    n = values.shape[0]
    if n == 0:
        return 0, 0.0, 0.0, np.inf, -np.inf
    mean = 0.0
    m2 = 0.0
    lo = values[0]
    hi = values[0]
    for i in range(n):
        v = values[i]
        delta = v - mean
        mean += delta / (i + 1)
        m2 += delta * (v - mean)
        if v < lo:
            lo = v
        if v > hi:
            hi = v
    return n, mean, m2, lo, hi


@njit(cache=True, parallel=True)
def softmax_probabilities(x, w, b):
    n, dims = x.shape
    k = w.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    for i in prange(n):
        hi = -np.inf
        for c in range(k):
            logit = b[c]
            for j in range(dims):
                logit += w[c, j] * x[i, j]
            out[i, c] = logit
            if logit > hi:
                hi = logit
        total = 0.0
        for c in range(k):
            e = np.exp(out[i, c] - hi)
            out[i, c] = e
            total += e
        for c in range(k):
            out[i, c] /= total
    return out


@njit(cache=True)
def softmax_loss_grad(x, y, w, b):
    n, dims = x.shape
    k = w.shape[0]
    grad_w = np.zeros((k, dims), dtype=np.float64)
    grad_b = np.zeros(k, dtype=np.float64)
    probs = np.empty(k, dtype=np.float64)
    loss_sum = 0.0
    for i in range(n):
        hi = -np.inf
        for c in range(k):
            logit = b[c]
            for j in range(dims):
                logit += w[c, j] * x[i, j]
            probs[c] = logit
            if logit > hi:
                hi = logit
        total = 0.0
        for c in range(k):
            e = np.exp(probs[c] - hi)
            probs[c] = e
            total += e
        target = y[i]
        for c in range(k):
            p = probs[c] / total
            if c == target:
                if p != p:  # propagate NaN instead of clipping it away
                    loss_sum += p
                else:
                    loss_sum -= np.log(p if p > 1e-300 else 1e-300)
                p -= 1.0
            grad_b[c] += p
            for j in range(dims):
                grad_w[c, j] += p * x[i, j]
    return loss_sum, grad_w, grad_b


@njit(cache=True, parallel=True)
def argmax_rows(p):
    n, k = p.shape
    out = np.empty(n, dtype=np.int64)
    for i in prange(n):
        best = 0
        best_v = p[i, 0]
        for c in range(1, k):
            if p[i, c] > best_v:
                best_v = p[i, c]
                best = c
        out[i] = best
    return out


@njit(cache=True)
def count_equal(a, b):
    n = a.shape[0]
    total = 0
    for i in range(n):
        if a[i] == b[i]:
            total += 1
    return total
