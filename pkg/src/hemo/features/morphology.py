"""Shape descriptors of a cell region.

Areas are pixel counts, ellipse axes come from the normalized second central
moments of the pixel coordinates, and the perimeter is the traced outer
contour length with diagonal steps weighted sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..imaging import CellRegion


@dataclass(frozen=True)
class MorphFeatures:
    area: int
    filled_area: int
    convex_area: int
    bbox_area: int
    solidity: float
    eccentricity: float
    extent: float
    minor_axis_length: float
    major_axis_length: float
    axis_ratio: float
    perimeter: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.area, self.filled_area, self.convex_area, self.bbox_area,
                self.solidity, self.eccentricity, self.extent,
                self.minor_axis_length, self.major_axis_length,
                self.axis_ratio, self.perimeter,
            ],
            dtype=np.float64,
        )


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain hull of 2-D points, counter-clockwise, degenerate-safe."""
    pts = np.unique(points, axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def half(iterable):
        chain = []
        for p in iterable:
            while len(chain) >= 2:
                o, a = chain[-2], chain[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= 0:
                    chain.pop()
                else:
                    break
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    return hull


def _convex_area(xs: np.ndarray, ys: np.ndarray, bbox: tuple[int, int, int, int]) -> int:
    """Count bbox pixels whose centers lie inside the hull of the region pixels."""
    hull = _convex_hull(np.column_stack([xs, ys]).astype(np.float64))
    min_x, min_y, max_x, max_y = bbox
    gx, gy = np.meshgrid(np.arange(min_x, max_x + 1), np.arange(min_y, max_y + 1))
    gx = gx.ravel().astype(np.float64)
    gy = gy.ravel().astype(np.float64)
    if len(hull) <= 2:
        # collinear region: pixels on the segment are exactly the region pixels
        return len(np.unique(np.column_stack([xs, ys]), axis=0))
    inside = np.ones(gx.shape, dtype=bool)
    eps = 1e-9
    for i in range(len(hull)):
        x0, y0 = hull[i]
        x1, y1 = hull[(i + 1) % len(hull)]
        cross = (x1 - x0) * (gy - y0) - (y1 - y0) * (gx - x0)
        inside &= cross >= -eps
    return int(inside.sum())


def _perimeter(filled: np.ndarray) -> float:
    """Moore-neighbor outer contour trace; diagonal steps weighted sqrt(2).

    Walks the 8-connected boundary until the (pixel, search direction) state
    repeats; the accumulated cycle length is the perimeter. A one-pixel-wide
    spur is walked out and back, contributing twice its length.
    """
    ys, xs = np.nonzero(filled)
    if len(ys) <= 1:
        return 0.0
    pad = np.pad(filled, 1)
    # 8-neighborhood in clockwise order starting from west
    nbrs = [(0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1)]
    cur = (int(ys[0]) + 1, int(xs[0]) + 1)  # raster-first pixel: west neighbor is background
    prev_dir = 0
    total = 0.0
    seen: dict[tuple, float] = {}
    while True:
        state = (cur, prev_dir)
        if state in seen:
            return total - seen[state]
        seen[state] = total
        found_dir = None
        for k in range(8):
            d = (prev_dir + k) % 8
            if pad[cur[0] + nbrs[d][0], cur[1] + nbrs[d][1]]:
                found_dir = d
                break
        if found_dir is None:
            return 0.0  # isolated pixel
        dy, dx = nbrs[found_dir]
        total += math.sqrt(2.0) if (dy != 0 and dx != 0) else 1.0
        cur = (cur[0] + dy, cur[1] + dx)
        prev_dir = (found_dir + 5) % 8  # resume scan before the direction we came from


def morphological_features(region: CellRegion) -> MorphFeatures:
    if region.area == 0:
        raise ValueError("empty region")
    xs = region.pixels[:, 0].astype(np.int64)
    ys = region.pixels[:, 1].astype(np.int64)
    min_x, min_y, max_x, max_y = region.bbox

    local = np.zeros((max_y - min_y + 1, max_x - min_x + 1), dtype=bool)
    local[ys - min_y, xs - min_x] = True

    area = int(local.sum())
    filled = ndimage.binary_fill_holes(local)
    filled_area = int(filled.sum())
    convex_area = _convex_area(xs, ys, region.bbox)
    bbox_area = local.shape[0] * local.shape[1]

    # normalized second central moments of the pixel coordinates
    cx, cy = xs.mean(), ys.mean()
    mu20 = np.mean((xs - cx) ** 2)
    mu02 = np.mean((ys - cy) ** 2)
    mu11 = np.mean((xs - cx) * (ys - cy))
    common = math.sqrt(((mu20 - mu02) / 2.0) ** 2 + mu11**2)
    lam1 = (mu20 + mu02) / 2.0 + common
    lam2 = (mu20 + mu02) / 2.0 - common
    major = 4.0 * math.sqrt(max(lam1, 0.0))
    minor = 4.0 * math.sqrt(max(lam2, 0.0))
    minor = max(minor, 1.0)  # single-pixel and line regions keep axis_ratio finite
    major = max(major, minor)
    eccentricity = math.sqrt(max(0.0, 1.0 - (minor / major) ** 2))

    return MorphFeatures(
        area=area,
        filled_area=filled_area,
        convex_area=max(convex_area, filled_area),
        bbox_area=bbox_area,
        solidity=area / max(convex_area, filled_area),
        eccentricity=eccentricity,
        extent=area / bbox_area,
        minor_axis_length=minor,
        major_axis_length=major,
        axis_ratio=major / minor,
        perimeter=_perimeter(filled),
    )
