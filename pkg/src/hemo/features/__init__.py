"""Fixed-order 124-feature representation of a cell region.

Eleven morphological features plus five texture groups (intensity 16,
co-occurrence 24, binary-pattern 10, run-length 44, complex-wavelet 19)
computed over the region's masked pixels only.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..imaging import CellRegion, GrayImage, extract_patch
from .manifest import FEATURE_MANIFEST, FeatureManifest, feature_names
from .morphology import MorphFeatures, morphological_features
from .intensity import intensity_features
from .glcm import glcm_features
from .lbp import lbp_features
from .glrlm import glrlm_features
from .dtcwt import dtcwt_features

__all__ = [
    "FEATURE_MANIFEST",
    "FeatureManifest",
    "FeatureVector",
    "MorphFeatures",
    "dtcwt_features",
    "extract_feature_vector",
    "feature_names",
    "glcm_features",
    "glrlm_features",
    "intensity_features",
    "lbp_features",
    "morphological_features",
    "read_feature_csv",
    "write_feature_csv",
]

PATCH_PAD = 2


@dataclass
class FeatureVector:
    """124 values in manifest order plus an optional class label."""

    values: np.ndarray
    label: int | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(FEATURE_MANIFEST),):
            raise ValueError(
                f"feature vector must have {len(FEATURE_MANIFEST)} values, got {self.values.shape}"
            )


def extract_feature_vector(img: GrayImage, region: CellRegion, label: int | None = None) -> FeatureVector:
    """Concatenate all feature groups in manifest order for one cell region."""
    patch, mask = extract_patch(img, region, pad=PATCH_PAD)
    morph = morphological_features(region)
    values = np.concatenate(
        [
            morph.as_array(),
            intensity_features(patch, mask),
            glcm_features(patch, mask),
            lbp_features(patch, mask),
            glrlm_features(patch, mask),
            dtcwt_features(patch, mask),
        ]
    )
    return FeatureVector(values, label)


def write_feature_csv(path, vectors: list[FeatureVector], synthetic: list[bool] | None = None) -> None:
    """Feature table: header = 124 manifest names + `label` (+ `synthetic`)."""
    header = feature_names() + ["label"]
    if synthetic is not None:
        header.append("synthetic")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, vec in enumerate(vectors):
            row = [repr(float(v)) for v in vec.values]
            row.append("" if vec.label is None else str(int(vec.label)))
            if synthetic is not None:
                row.append(str(int(synthetic[i])))
            writer.writerow(row)


def read_feature_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a feature table; returns (features, labels, synthetic flags)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = feature_names()
        if header[: len(expected)] != expected:
            raise ValueError(f"{path}: header does not match the feature manifest")
        has_synth = "synthetic" in header
        label_col = header.index("label")
        rows, labels, synth = [], [], []
        for row in reader:
            rows.append([float(v) for v in row[: len(expected)]])
            labels.append(int(row[label_col]) if row[label_col] != "" else -1)
            synth.append(bool(int(row[header.index("synthetic")])) if has_synth else False)
    return (
        np.asarray(rows, dtype=np.float64),
        np.asarray(labels, dtype=np.int64),
        np.asarray(synth, dtype=bool),
    )
