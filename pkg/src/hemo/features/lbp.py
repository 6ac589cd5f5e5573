"""Uniform local binary pattern histogram.

Eight discrete neighbors at radius 1, bit set when the neighbor is strictly
brighter than the center. Patterns with at most two circular 0/1 transitions
are uniform and binned by their number of set bits (0..8); everything else
falls into the non-uniform bin, for 10 bins total. Only centers whose full
8-neighborhood lies inside the mask contribute.
"""

from __future__ import annotations

import numpy as np

from ..imaging import BinaryMask, GrayImage

# circular order matters for the transition count
NEIGHBOR_OFFSETS = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)]

N_BINS = 10


def _uniform_bin_table() -> np.ndarray:
    table = np.empty(256, dtype=np.int64)
    for code in range(256):
        bits = [(code >> k) & 1 for k in range(8)]
        transitions = sum(bits[k] != bits[(k + 1) % 8] for k in range(8))
        table[code] = sum(bits) if transitions <= 2 else 9
    return table


_BIN_OF_CODE = _uniform_bin_table()


def lbp_features(patch: GrayImage, mask: BinaryMask) -> np.ndarray:
    pix = patch.pixels.astype(np.int16)
    m = mask.bits
    h, w = pix.shape
    if h < 3 or w < 3:
        return np.zeros(N_BINS)
    center = pix[1:-1, 1:-1]
    valid = m[1:-1, 1:-1].copy()
    code = np.zeros(center.shape, dtype=np.int64)
    for k, (dy, dx) in enumerate(NEIGHBOR_OFFSETS):
        nb = pix[1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx]
        valid &= m[1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx]
        code |= (nb > center).astype(np.int64) << k
    if not valid.any():
        return np.zeros(N_BINS)
    bins = _BIN_OF_CODE[code[valid]]
    hist = np.bincount(bins, minlength=N_BINS).astype(np.float64)
    return hist / hist.sum()
