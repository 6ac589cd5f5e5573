"""Canonical ordering of the 124 cell features.

The manifest fixes the column order of every feature table: 11 morphological
values, then the texture groups (16 intensity, 24 co-occurrence, 10 binary
pattern, 44 run length, 19 complex wavelet). A copy is shipped as
docs/feature_manifest.csv for external consumers.
"""

from __future__ import annotations

from dataclasses import dataclass

GLCM_STATS = ("contrast", "correlation", "energy", "homogeneity", "entropy", "dissimilarity")
GLRLM_STATS = ("sre", "lre", "gln", "rln", "rp", "lgre", "hgre", "srlge", "srhge", "lrlge", "lrhge")
ANGLES = (0, 45, 90, 135)
DTCWT_ORIENTATIONS = (15, 45, 75, 105, 135, 165)
DTCWT_LEVELS = (1, 2, 3)


@dataclass(frozen=True)
class FeatureManifest:
    """Ordered (name, group) entries; names unique, length fixed."""

    entries: tuple[tuple[str, str], ...]

    def __post_init__(self):
        names = [n for n, _ in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("manifest names must be unique")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.entries]

    @property
    def groups(self) -> list[str]:
        return [g for _, g in self.entries]

    def index(self, name: str) -> int:
        return self.names.index(name)


def _build() -> FeatureManifest:
    entries: list[tuple[str, str]] = []

    for name in (
        "area", "filled_area", "convex_area", "bbox_area", "solidity",
        "eccentricity", "extent", "minor_axis_length", "major_axis_length",
        "axis_ratio", "perimeter",
    ):
        entries.append((name, "morphological"))

    for name in ("mean", "std", "skewness", "kurtosis", "entropy", "min", "max", "median"):
        entries.append((f"intensity_{name}", "intensity"))
    for b in range(8):
        entries.append((f"intensity_hist_{b}", "intensity"))

    for angle in ANGLES:
        for stat in GLCM_STATS:
            entries.append((f"glcm_{stat}_{angle}", "glcm"))

    for b in range(9):
        entries.append((f"lbp_uniform_{b}", "lbp"))
    entries.append(("lbp_nonuniform", "lbp"))

    for angle in ANGLES:
        for stat in GLRLM_STATS:
            entries.append((f"glrlm_{stat}_{angle}", "glrlm"))

    for level in DTCWT_LEVELS:
        for orient in DTCWT_ORIENTATIONS:
            entries.append((f"dtcwt_l{level}_o{orient}", "dtcwt"))
    entries.append(("dtcwt_lowpass_energy", "dtcwt"))

    manifest = FeatureManifest(tuple(entries))
    assert len(manifest) == 124
    return manifest


FEATURE_MANIFEST = _build()


def feature_names() -> list[str]:
    return FEATURE_MANIFEST.names


def write_manifest_csv(path) -> None:
    with open(path, "w") as fh:
        fh.write("index,name,group\n")
        for i, (name, group) in enumerate(FEATURE_MANIFEST.entries):
            fh.write(f"{i},{name},{group}\n")
