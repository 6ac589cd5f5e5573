"""Gray level run length features.

Run-length matrices for the four scan directions (0/45/90/135 degrees) over
the 8-level quantized patch; a run is a maximal streak of equal-level in-mask
pixels along a scan line, broken by mask gaps. Per direction, the eleven
classic statistics: SRE, LRE, GLN, RLN, RP, LGRE, HGRE, SRLGE, SRHGE, LRLGE,
LRHGE. Gray levels are 1-indexed inside the low/high emphasis weights.
"""

from __future__ import annotations

import numpy as np

from ..imaging import BinaryMask, GrayImage
from .glcm import LEVELS, quantize


def _lines(q: np.ndarray, angle: int):
    """Scan lines of the patch for one direction (with -1 marking off-mask)."""
    if angle == 0:
        return [q[y, :] for y in range(q.shape[0])]
    if angle == 90:
        return [q[:, x] for x in range(q.shape[1])]
    if angle == 135:  # top-left to bottom-right diagonals
        return [np.diagonal(q, offset=k) for k in range(-q.shape[0] + 1, q.shape[1])]
    if angle == 45:  # bottom-left to top-right anti-diagonals
        flipped = np.flipud(q)
        return [np.diagonal(flipped, offset=k) for k in range(-q.shape[0] + 1, q.shape[1])]
    raise ValueError(f"unsupported angle {angle}")


def run_length_matrix(q: np.ndarray, mask: np.ndarray, angle: int, levels: int = LEVELS) -> np.ndarray:
    """Counts of runs; rows = gray level, columns = run length - 1."""
    marked = np.where(mask, q, -1)
    max_len = max(q.shape)
    rlm = np.zeros((levels, max_len), dtype=np.float64)
    for line in _lines(marked, angle):
        line = np.asarray(line)
        if line.size == 0:
            continue
        # boundaries where the value changes (off-mask -1 breaks runs naturally)
        change = np.nonzero(np.diff(line))[0] + 1
        starts = np.concatenate(([0], change))
        ends = np.concatenate((change, [line.size]))
        for s, e in zip(starts, ends):
            level = line[s]
            if level >= 0:
                rlm[level, e - s - 1] += 1
    return rlm


def _stats(rlm: np.ndarray, n_pixels: int) -> np.ndarray:
    n_runs = rlm.sum()
    if n_runs == 0:
        return np.zeros(11)
    g = np.arange(1, rlm.shape[0] + 1, dtype=np.float64)[:, None]  # 1-indexed level
    r = np.arange(1, rlm.shape[1] + 1, dtype=np.float64)[None, :]  # run length
    p = rlm / n_runs
    sre = float(np.sum(p / r**2))
    lre = float(np.sum(p * r**2))
    gln = float(np.sum(rlm.sum(axis=1) ** 2) / n_runs)
    rln = float(np.sum(rlm.sum(axis=0) ** 2) / n_runs)
    rp = float(n_runs / n_pixels)
    lgre = float(np.sum(p / g**2))
    hgre = float(np.sum(p * g**2))
    srlge = float(np.sum(p / (g**2 * r**2)))
    srhge = float(np.sum(p * g**2 / r**2))
    lrlge = float(np.sum(p * r**2 / g**2))
    lrhge = float(np.sum(p * g**2 * r**2))
    return np.array([sre, lre, gln, rln, rp, lgre, hgre, srlge, srhge, lrlge, lrhge])


def glrlm_features(patch: GrayImage, mask: BinaryMask, levels: int = LEVELS) -> np.ndarray:
    n_pixels = int(mask.bits.sum())
    if n_pixels == 0:
        raise ValueError("empty mask")
    q = quantize(patch.pixels, levels)
    out = []
    for angle in (0, 45, 90, 135):
        rlm = run_length_matrix(q, mask.bits, angle, levels)
        out.append(_stats(rlm, n_pixels))
    return np.concatenate(out)
