"""Intensity distribution features over the masked pixels of a patch.

Sixteen values: mean, std, skewness, kurtosis, entropy, min, max, median,
then the normalized 8-bin histogram. Moments are population moments
(skewness m3/m2^1.5, kurtosis m4/m2^2, both 0 for a constant patch);
entropy is in bits over the 8 equal-width bins of [0, 255].
"""

from __future__ import annotations

import numpy as np

from ..imaging import BinaryMask, GrayImage

N_BINS = 8


def histogram8(values: np.ndarray) -> np.ndarray:
    bins = np.minimum(values.astype(np.int64) * N_BINS // 256, N_BINS - 1)
    hist = np.bincount(bins, minlength=N_BINS).astype(np.float64)
    return hist / hist.sum()


def intensity_features(patch: GrayImage, mask: BinaryMask) -> np.ndarray:
    if not mask.bits.any():
        raise ValueError("empty mask")
    v = patch.pixels[mask.bits].astype(np.float64)
    mean = v.mean()
    d = v - mean
    m2 = np.mean(d**2)
    std = np.sqrt(m2)
    if m2 > 0:
        skew = np.mean(d**3) / m2**1.5
        kurt = np.mean(d**4) / m2**2
    else:
        skew = 0.0
        kurt = 0.0
    hist = histogram8(patch.pixels[mask.bits])
    nz = hist[hist > 0]
    entropy = float(-(nz * np.log2(nz)).sum())
    return np.array(
        [mean, std, skew, kurt, entropy, v.min(), v.max(), np.median(v), *hist],
        dtype=np.float64,
    )
