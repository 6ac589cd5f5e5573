"""Gray level co-occurrence features.

Symmetric normalized co-occurrence at distance 1 for angles 0/45/90/135
degrees, over masked pixel pairs only, after equal-width quantization to 8
levels. Per angle: contrast, correlation, energy (angular second moment),
homogeneity, entropy, dissimilarity. A direction with fewer than two
co-occurring in-mask pairs contributes all-zero features.
"""

from __future__ import annotations

import numpy as np

from ..imaging import BinaryMask, GrayImage

LEVELS = 8
# (dy, dx) per angle; 45 degrees points up-right in image coordinates
OFFSETS = {0: (0, 1), 45: (-1, 1), 90: (-1, 0), 135: (-1, -1)}


def quantize(pixels: np.ndarray, levels: int = LEVELS) -> np.ndarray:
    return np.minimum(pixels.astype(np.int64) * levels // 256, levels - 1)


def _pair_views(arr: np.ndarray, mask: np.ndarray, dy: int, dx: int):
    h, w = arr.shape
    y0, y1 = max(0, -dy), min(h, h - dy)
    x0, x1 = max(0, -dx), min(w, w - dx)
    a = arr[y0:y1, x0:x1]
    b = arr[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
    m = mask[y0:y1, x0:x1] & mask[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
    return a[m], b[m]


def cooccurrence_matrix(q: np.ndarray, mask: np.ndarray, angle: int, levels: int = LEVELS) -> np.ndarray:
    """Symmetric, unnormalized pair counts for one angle."""
    dy, dx = OFFSETS[angle]
    a, b = _pair_views(q, mask, dy, dx)
    counts = np.zeros((levels, levels), dtype=np.float64)
    np.add.at(counts, (a, b), 1.0)
    return counts + counts.T


def _stats(p: np.ndarray) -> np.ndarray:
    levels = p.shape[0]
    i, j = np.indices(p.shape)
    contrast = float(np.sum(p * (i - j) ** 2))
    dissimilarity = float(np.sum(p * np.abs(i - j)))
    homogeneity = float(np.sum(p / (1.0 + (i - j) ** 2)))
    energy = float(np.sum(p**2))
    nz = p[p > 0]
    entropy = float(-(nz * np.log2(nz)).sum())
    pi = p.sum(axis=1)
    mu = float(np.sum(np.arange(levels) * pi))
    var = float(np.sum((np.arange(levels) - mu) ** 2 * pi))
    if var > 1e-12:
        correlation = float(np.sum(p * (i - mu) * (j - mu)) / var)
    else:
        correlation = 1.0  # single occupied level: perfectly correlated
    return np.array([contrast, correlation, energy, homogeneity, entropy, dissimilarity])


def glcm_features(patch: GrayImage, mask: BinaryMask, levels: int = LEVELS) -> np.ndarray:
    q = quantize(patch.pixels, levels)
    out = []
    for angle in (0, 45, 90, 135):
        counts = cooccurrence_matrix(q, mask.bits, angle, levels)
        n_pairs = counts.sum() / 2.0
        if n_pairs < 2:
            out.append(np.zeros(6))
            continue
        out.append(_stats(counts / counts.sum()))
    return np.concatenate(out)
