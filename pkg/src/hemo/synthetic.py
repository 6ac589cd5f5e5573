"""Programmatic rendering of cell-like shapes for experiments and tests.

Three shape classes mimic the morphology axes that matter: plain disks
(class 0, majority), elongated ellipses (class 1) and ring-shaped "target"
cells with a pale centre (class 2). Class parameter ranges deliberately
overlap a little, so a classifier trained on the imbalanced mixture has a
real minority-class problem to solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .features import FeatureVector, extract_feature_vector
from .imaging import BinaryMask, GrayImage, connected_components, otsu_threshold
from .resampling import LabeledDataset

TILE = 64
BACKGROUND = 200.0
CELL = 120.0
NOISE_STD = 8.0

SHAPE_NAMES = ("disk", "ellipse", "target")


@dataclass(frozen=True)
class RenderedCell:
    image: GrayImage
    label: int


def _shape_mask(rng: np.random.Generator, kind: int) -> tuple[np.ndarray, float]:
    """Boolean cell mask on the tile plus the ring pallor depth (targets only)."""
    yy, xx = np.mgrid[0:TILE, 0:TILE].astype(np.float64)
    cy = TILE / 2 + rng.uniform(-3, 3)
    cx = TILE / 2 + rng.uniform(-3, 3)
    r = rng.uniform(9.0, 15.0)
    if kind == 1:  # ellipse: elongation overlaps the disk jitter range
        ratio = rng.uniform(1.15, 2.0)
    else:
        ratio = rng.uniform(1.0, 1.12)
    theta = rng.uniform(0, np.pi)
    a = r * np.sqrt(ratio)
    b = r / np.sqrt(ratio)
    u = (xx - cx) * np.cos(theta) + (yy - cy) * np.sin(theta)
    v = -(xx - cx) * np.sin(theta) + (yy - cy) * np.cos(theta)
    mask = (u / a) ** 2 + (v / b) ** 2 <= 1.0
    pallor = rng.uniform(0.25, 0.95) if kind == 2 else 0.0
    return mask, pallor


def render_cell(rng: np.random.Generator, kind: int) -> GrayImage:
    """One cell on a noisy bright background, darker interior, soft edges."""
    mask, pallor = _shape_mask(rng, kind)
    tile = np.full((TILE, TILE), BACKGROUND)
    depth = BACKGROUND - CELL
    tile -= np.where(mask, depth, 0.0)
    if pallor > 0.0:
        # pale centre: intensity climbs back toward background inside the rim
        yy, xx = np.mgrid[0:TILE, 0:TILE].astype(np.float64)
        dist = ndimage.distance_transform_edt(mask)
        rim = 3.0
        inner = np.clip((dist - rim) / max(dist.max() - rim, 1.0), 0.0, 1.0)
        tile += inner * depth * pallor
    tile = ndimage.uniform_filter(tile, size=3, mode="reflect")
    tile += rng.normal(0.0, NOISE_STD, size=tile.shape)
    return GrayImage(np.clip(np.rint(tile), 0, 255).astype(np.uint8))


def render_cell_pair(rng: np.random.Generator) -> GrayImage:
    """Two merged disks, the geometry the overlap separator must flag."""
    yy, xx = np.mgrid[0:TILE, 0:TILE].astype(np.float64)
    r1, r2 = rng.uniform(9.0, 13.0, size=2)
    cy = TILE / 2 + rng.uniform(-2, 2)
    cx1 = TILE / 2 - r1 * 0.7
    gap = rng.uniform(0.8, 1.2)
    cx2 = cx1 + (r1 + r2) * 0.7 * gap
    mask = ((xx - cx1) ** 2 + (yy - cy) ** 2 <= r1**2) | (
        (xx - cx2) ** 2 + (yy - cy + rng.uniform(-3, 3)) ** 2 <= r2**2
    )
    tile = np.full((TILE, TILE), BACKGROUND)
    tile -= np.where(mask, BACKGROUND - CELL, 0.0)
    tile = ndimage.uniform_filter(tile, size=3, mode="reflect")
    tile += rng.normal(0.0, NOISE_STD, size=tile.shape)
    return GrayImage(np.clip(np.rint(tile), 0, 255).astype(np.uint8))


def segment_tile(image: GrayImage):
    """Largest foreground region of a rendered tile via the real pipeline."""
    _, mask = otsu_threshold(image, dark_foreground=True)
    bits = ndimage.binary_closing(mask.bits, structure=np.ones((3, 3)))
    _, regions = connected_components(
        BinaryMask(bits), connectivity=8, min_area=30, discard_border=False
    )
    if not regions:
        return None
    return max(regions, key=lambda r: r.area)


def featurize_tile(image: GrayImage, label: int) -> FeatureVector | None:
    region = segment_tile(image)
    if region is None:
        return None
    return extract_feature_vector(image, region, label)


def generate_dataset(
    n_cells: int, frequencies=(0.80, 0.15, 0.05), seed: int = 0
) -> LabeledDataset:
    """Render, segment and featurize a seeded imbalanced shape dataset."""
    rng = np.random.default_rng(seed)
    labels = rng.choice(len(frequencies), size=n_cells, p=frequencies)
    rows, kept = [], []
    for label in labels:
        vec = featurize_tile(render_cell(rng, int(label)), int(label))
        if vec is not None:
            rows.append(vec.values)
            kept.append(int(label))
    return LabeledDataset(np.array(rows), np.array(kept))


def generate_separator_dataset(n_cells: int, overlap_fraction=0.3, seed: int = 0) -> LabeledDataset:
    """Single disks (label 0) versus merged double-disks (label 1)."""
    rng = np.random.default_rng(seed)
    rows, kept = [], []
    for _ in range(n_cells):
        overlapped = rng.random() < overlap_fraction
        image = render_cell_pair(rng) if overlapped else render_cell(rng, 0)
        vec = featurize_tile(image, int(overlapped))
        if vec is not None:
            rows.append(vec.values)
            kept.append(int(overlapped))
    return LabeledDataset(np.array(rows), np.array(kept))
