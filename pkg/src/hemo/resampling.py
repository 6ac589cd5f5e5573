"""Feature-space resampling for imbalanced classes.

Minority classes are oversampled by interpolating toward same-class nearest
neighbors; the majority class can be undersampled by keeping the members
closest (on average) to the farthest out-of-class samples. Four per-class
policies decide the target counts; class 0 is the designated majority and
MaxMinSize is the size of the largest minority class.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

VARIANTS = ("smote1", "smote2", "smote3-2", "smote3-3")
SMALL_CLASS_THRESHOLD = 500
DEFAULT_K_FAR = 3


@dataclass
class LabeledDataset:
    """Feature rows with mandatory integer class labels.

    synthetic marks rows added by oversampling; the flag survives round trips
    through the CSV table format.
    """

    features: np.ndarray
    labels: np.ndarray
    synthetic: np.ndarray = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise ValueError("features must be (N, D) with one label per row")
        if self.synthetic is None:
            self.synthetic = np.zeros(len(self.labels), dtype=bool)
        else:
            self.synthetic = np.asarray(self.synthetic, dtype=bool)

    def __len__(self) -> int:
        return len(self.labels)

    def class_counts(self) -> dict[int, int]:
        ids, counts = np.unique(self.labels, return_counts=True)
        return {int(c): int(n) for c, n in zip(ids, counts)}

    def subset(self, idx: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(self.features[idx], self.labels[idx], self.synthetic[idx])


@dataclass(frozen=True)
class SmoteParams:
    k: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class ResamplingPlan:
    """Per-class target counts plus the originals they were derived from."""

    variant: str
    targets: dict[int, int] = field(default_factory=dict)
    original: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if any(t < 0 for t in self.targets.values()):
            raise ValueError("targets must be >= 0")


def smote_oversample(
    ds: LabeledDataset, class_id: int, target: int, params: SmoteParams
) -> np.ndarray:
    """Synthesize (target - n) rows for one class.

    Each synthetic row is x + lam * (x_nn - x) with lam uniform in [0, 1),
    x visited round-robin over the class and x_nn drawn uniformly from its k
    nearest same-class neighbors (Euclidean, ties by row index).
    """
    members = ds.features[ds.labels == class_id]
    n = len(members)
    if n < 2:
        raise ValueError(f"class {class_id} has {n} samples; need at least 2 to oversample")
    if target < n:
        raise ValueError(f"target {target} below class size {n}")
    if params.k >= n:
        raise ValueError(f"k={params.k} neighbors unavailable in a class of {n}")
    need = target - n
    if need == 0:
        return np.empty((0, ds.features.shape[1]))

    d = cdist(members, members)
    np.fill_diagonal(d, np.inf)
    # stable: sort by (distance, index) so ties break on original order
    order = np.lexsort((np.tile(np.arange(n), (n, 1)), d), axis=1)
    neighbors = order[:, : params.k]

    rng = np.random.default_rng(params.seed)
    out = np.empty((need, ds.features.shape[1]))
    for i in range(need):
        base_idx = i % n
        x = members[base_idx]
        x_nn = members[neighbors[base_idx][rng.integers(params.k)]]
        lam = rng.random()
        out[i] = x + lam * (x_nn - x)
    return out


def nearmiss2_undersample(
    ds: LabeledDataset, class_id: int, target: int, k_far: int = DEFAULT_K_FAR
) -> np.ndarray:
    """Indices (into ds) of the retained subset of one class.

    Members are ranked by average distance to their k_far farthest
    out-of-class samples; the target members with the smallest averages are
    kept, ties broken by original row index.
    """
    member_idx = np.nonzero(ds.labels == class_id)[0]
    other = ds.features[ds.labels != class_id]
    if target > len(member_idx):
        raise ValueError(f"target {target} above class size {len(member_idx)}")
    if len(other) == 0:
        raise ValueError("no out-of-class samples to compare against")
    k = min(k_far, len(other))
    d = cdist(ds.features[member_idx], other)
    d.sort(axis=1)
    avg_far = d[:, -k:].mean(axis=1)
    order = np.lexsort((member_idx, avg_far))
    keep = np.sort(member_idx[order[:target]])
    return keep


def build_plan(
    variant: str,
    class_counts: dict[int, int],
    majority_class: int = 0,
    small_class_threshold: int = SMALL_CLASS_THRESHOLD,
) -> ResamplingPlan:
    """Target counts for one of the four per-class policies.

    smote1: minorities raised to MaxMinSize, majority unchanged.
    smote2: like smote1 but the majority is undersampled to MaxMinSize.
    smote3-2 / smote3-3: minorities below the small-class threshold go to
    2x / 3x their original size instead of MaxMinSize.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    minorities = {c: n for c, n in class_counts.items() if c != majority_class}
    if not minorities:
        raise ValueError("no minority class present")
    max_min_size = max(minorities.values())
    targets: dict[int, int] = {}
    for c, n in class_counts.items():
        if c == majority_class:
            targets[c] = max_min_size if variant == "smote2" else n
        elif variant in ("smote1", "smote2"):
            targets[c] = max_min_size
        else:
            factor = 2 if variant == "smote3-2" else 3
            targets[c] = factor * n if n < small_class_threshold else max_min_size
    return ResamplingPlan(variant=variant, targets=targets, original=dict(class_counts))


def apply_plan(ds: LabeledDataset, plan: ResamplingPlan, params: SmoteParams,
               k_far: int = DEFAULT_K_FAR) -> LabeledDataset:
    """Resample every class to its plan target.

    Classes above target are undersampled (NearMiss-2), classes below are
    oversampled (SMOTE). All retained original rows come first, in their
    original order, followed by synthetic rows grouped by class id.
    """
    counts = ds.class_counts()
    if plan.original != counts:
        raise ValueError("plan was built from different class counts")
    keep_idx: list[np.ndarray] = []
    synth_feats: list[np.ndarray] = []
    synth_labels: list[np.ndarray] = []
    for c in sorted(counts):
        target = plan.targets.get(c, counts[c])
        n = counts[c]
        if target < n:
            keep_idx.append(nearmiss2_undersample(ds, c, target, k_far))
        else:
            keep_idx.append(np.nonzero(ds.labels == c)[0])
            if target > n:
                rows = smote_oversample(ds, c, target, SmoteParams(params.k, params.seed + c))
                synth_feats.append(rows)
                synth_labels.append(np.full(len(rows), c, dtype=np.int64))
    kept = np.sort(np.concatenate(keep_idx))
    features = [ds.features[kept]]
    labels = [ds.labels[kept]]
    synthetic = [ds.synthetic[kept]]
    if synth_feats:
        features.append(np.concatenate(synth_feats))
        labels.append(np.concatenate(synth_labels))
        synthetic.append(np.ones(sum(len(f) for f in synth_feats), dtype=bool))
    return LabeledDataset(
        np.concatenate(features), np.concatenate(labels), np.concatenate(synthetic)
    )


def write_plan_csv(plan: ResamplingPlan, path) -> None:
    with open(path, "w") as fh:
        fh.write("class_id,original_count,target_count\n")
        for c in sorted(plan.original):
            fh.write(f"{c},{plan.original[c]},{plan.targets[c]}\n")


def read_plan_csv(path, variant: str = "custom") -> ResamplingPlan:
    original: dict[int, int] = {}
    targets: dict[int, int] = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "class_id,original_count,target_count":
            raise ValueError(f"{path}: unexpected plan header {header!r}")
        for line in fh:
            c, orig, tgt = line.strip().split(",")
            original[int(c)] = int(orig)
            targets[int(c)] = int(tgt)
    return ResamplingPlan(variant=variant, targets=targets, original=original)
