"""Expert annotations to per-region labels and pixel-wise label masks.

Experts mark only the centre of each cell they are confident about. A region
holding exactly one annotated class takes that class; regions flagged by the
overlap separator, or holding annotations of different classes, become
`overlapping`; identified but unannotated regions become `unknown`.
Annotations landing on background are reported as orphans, never dropped
silently.

Mask encodings per scheme are fixed small integers (background 0) and are
shipped as docs/class_schemes.csv.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .imaging import RegionMap

CLASS_NAMES = (
    "normal", "microcyte", "macrocyte", "spherocyte", "target", "ovalocyte",
    "stomatocyte", "teardrop", "burr", "hypochromia", "schistocyte",
)
# region-label space: true classes 0..10 plus the two synthetic outcomes
OVERLAPPING = 11
UNKNOWN = 12

SCHEME_NAMES = ("two", "five", "nine", "eleven")

# named individual types kept by the nine-class scheme
_NINE_INDIVIDUAL = {3: 2, 6: 3, 4: 4, 5: 5}  # spherocyte, stomatocyte, target, ovalocyte


@dataclass(frozen=True)
class AnnotationPoint:
    x: int
    y: int
    class_id: int

    def __post_init__(self):
        if not 0 <= self.class_id <= 10:
            raise ValueError(f"class id must be 0..10, got {self.class_id}")


@dataclass(frozen=True)
class ClassScheme:
    """Total mapping from {classes 0..10, overlapping, unknown, background}
    to scheme ids, plus names for rendering."""

    name: str
    background: int
    mapping: dict[int, int]
    id_names: dict[int, str]

    @property
    def n_ids(self) -> int:
        return len(self.id_names)


def _build_schemes() -> dict[str, ClassScheme]:
    five = ClassScheme(
        name="five",
        background=0,
        mapping={**{0: 1}, **{c: 2 for c in range(1, 11)}, OVERLAPPING: 3, UNKNOWN: 4},
        id_names={0: "background", 1: "normal", 2: "abnormal", 3: "overlapping", 4: "unknown"},
    )
    nine_map = {0: 1}
    for c in range(1, 11):
        nine_map[c] = _NINE_INDIVIDUAL.get(c, 6)
    nine_map[OVERLAPPING] = 7
    nine_map[UNKNOWN] = 8
    nine = ClassScheme(
        name="nine",
        background=0,
        mapping=nine_map,
        id_names={
            0: "background", 1: "normal", 2: "spherocyte", 3: "stomatocyte",
            4: "target", 5: "ovalocyte", 6: "other_abnormal", 7: "overlapping",
            8: "unknown",
        },
    )
    eleven = ClassScheme(
        name="eleven",
        background=0,
        mapping={**{c: c + 1 for c in range(11)}, OVERLAPPING: 12, UNKNOWN: 13},
        id_names={
            0: "background",
            **{c + 1: CLASS_NAMES[c] for c in range(11)},
            12: "overlapping",
            13: "unknown",
        },
    )
    return {"five": five, "nine": nine, "eleven": eleven}


SCHEMES = _build_schemes()


def scheme_map(class_id: int, scheme: str) -> int:
    """Map a region label (class 0..10, overlapping, unknown) to a scheme id.

    The two-class scheme is a row-label scheme (normal=0, abnormal=1) and is
    defined for the 11 true classes only.
    """
    if scheme == "two":
        if not 0 <= class_id <= 10:
            raise ValueError(
                f"two-class scheme is defined for classes 0..10, got {class_id}"
            )
        return 0 if class_id == 0 else 1
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEME_NAMES}")
    mapping = SCHEMES[scheme].mapping
    if class_id not in mapping:
        raise ValueError(f"label {class_id} outside the region-label space")
    return mapping[class_id]


def assign_region_labels(
    region_map: RegionMap,
    annotations: list[AnnotationPoint],
    overlap_flags: set[int] | None = None,
) -> tuple[dict[int, int], list[AnnotationPoint]]:
    """Per-region labels in {0..10, OVERLAPPING, UNKNOWN} plus orphan points."""
    overlap_flags = overlap_flags or set()
    ids = region_map.ids
    h, w = ids.shape
    classes_by_region: dict[int, set[int]] = {}
    orphans: list[AnnotationPoint] = []
    for pt in annotations:
        if not (0 <= pt.x < w and 0 <= pt.y < h):
            raise ValueError(f"annotation ({pt.x}, {pt.y}) outside the {w}x{h} image")
        rid = int(ids[pt.y, pt.x])
        if rid == 0:
            orphans.append(pt)
            continue
        classes_by_region.setdefault(rid, set()).add(pt.class_id)

    labels: dict[int, int] = {}
    for rid in range(1, region_map.n_regions + 1):
        if rid in overlap_flags:
            labels[rid] = OVERLAPPING
        elif rid in classes_by_region:
            classes = classes_by_region[rid]
            # two different expert classes in one component: it holds two cells
            labels[rid] = classes.pop() if len(classes) == 1 else OVERLAPPING
        else:
            labels[rid] = UNKNOWN
    return labels, orphans


def build_label_mask(
    region_map: RegionMap, region_labels: dict[int, int], scheme: str
) -> np.ndarray:
    """Paint each region with its scheme id; everything else is background."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown mask scheme {scheme!r}; expected one of {tuple(SCHEMES)}")
    table = SCHEMES[scheme]
    lut = np.zeros(region_map.n_regions + 1, dtype=np.uint8)
    lut[0] = table.background
    for rid, label in region_labels.items():
        lut[rid] = table.mapping[label]
    return lut[region_map.ids]


# ---------------------------------------------------------------------------
# I/O

def read_annotations_csv(path) -> list[AnnotationPoint]:
    """Annotation file: header x,y,class; one row per expert centre point."""
    points = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"x", "y", "class"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header with columns x,y,class")
        for row in reader:
            points.append(AnnotationPoint(int(row["x"]), int(row["y"]), int(row["class"])))
    return points


def write_label_mask_png(mask: np.ndarray, path) -> None:
    Image.fromarray(mask.astype(np.uint8), mode="L").save(path)


def read_label_mask_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.int64)


def write_scheme_table_csv(path) -> None:
    """The documented scheme mapping table (docs/class_schemes.csv)."""
    with open(path, "w") as fh:
        fh.write("scheme,input_label,input_name,scheme_id,scheme_name\n")
        for scheme_name, scheme in SCHEMES.items():
            inputs = {**{c: CLASS_NAMES[c] for c in range(11)},
                      OVERLAPPING: "overlapping", UNKNOWN: "unknown"}
            for label, label_name in inputs.items():
                sid = scheme.mapping[label]
                fh.write(f"{scheme_name},{label},{label_name},{sid},{scheme.id_names[sid]}\n")
