"""Cross-validation and imbalance-aware scoring.

Metrics are computed one-against-all: the class in question is positive and
everything else is pooled as negative, which inflates true negatives — that
accounting is reproduced as-is, since it is how the scores are defined here.
The headline score is f2 (recall-weighted F-measure); plain accuracy is
deliberately not reported. Segmentation masks are scored cell-based: a cell
counts as matched when at least 70% of its non-border pixels carry the true
class label.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import classifier as clf
from .imaging import CellRegion
from .resampling import (
    DEFAULT_K_FAR,
    LabeledDataset,
    SmoteParams,
    apply_plan,
    build_plan,
)

MATCH_THRESHOLD = 0.70


# ---------------------------------------------------------------------------
# stratified folds

@dataclass(frozen=True)
class FoldSplit:
    fold_of: np.ndarray
    k: int
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)


def stratified_kfold(labels: np.ndarray, k: int, seed: int) -> FoldSplit:
    """Shuffle within class, deal members round-robin to folds."""
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=np.int64)
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if len(members) < k:
            raise ValueError(f"class {int(c)} has {len(members)} members; needs at least {k}")
        members = members[rng.permutation(len(members))]
        fold_of[members] = np.arange(len(members)) % k
    return FoldSplit(fold_of=fold_of, k=k, seed=seed)


def binarize(labels: np.ndarray, positive: int) -> np.ndarray:
    return (np.asarray(labels) == positive).astype(np.int64)


# ---------------------------------------------------------------------------
# confusion matrices

def confusion(true: np.ndarray, pred: np.ndarray, n_classes: int) -> np.ndarray:
    true = np.asarray(true, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if len(true) != len(pred):
        raise ValueError("label vectors differ in length")
    for name, v in (("true", true), ("pred", pred)):
        if len(v) and (v.min() < 0 or v.max() >= n_classes):
            raise ValueError(f"{name} labels out of range [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (true, pred), 1)
    return cm


def row_normalize(cm: np.ndarray) -> np.ndarray:
    """Rows as percentages summing to 100; all-zero rows stay zero."""
    cm = np.asarray(cm, dtype=np.float64)
    sums = cm.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(sums > 0, cm / sums * 100.0, 0.0)
    return out


def render_percent_rows(cm: np.ndarray, decimals: int = 2) -> list[list[float]]:
    """Rounded percentage rows that sum to exactly 100 (last column absorbs
    the rounding residue)."""
    rows = []
    for row in row_normalize(cm):
        rounded = [round(float(v), decimals) for v in row]
        if sum(rounded) > 0:
            rounded[-1] = round(100.0 - sum(rounded[:-1]), decimals)
        rows.append(rounded)
    return rows


# ---------------------------------------------------------------------------
# metrics

@dataclass(frozen=True)
class Metrics:
    sensitivity: float
    specificity: float
    precision: float
    f2: float
    degenerate: bool = False  # some ratio was 0/0 and reported as 0


def f_beta(precision: float, recall: float, beta: float = 2.0) -> float:
    denom = beta**2 * precision + recall
    if denom == 0:
        return 0.0
    return (1 + beta**2) * precision * recall / denom


def metrics_from_counts(tp: int, fn: int, fp: int, tn: int) -> Metrics:
    degenerate = False

    def ratio(num, den):
        nonlocal degenerate
        if den == 0:
            degenerate = True
            return 0.0
        return num / den

    sens = ratio(tp, tp + fn)
    spec = ratio(tn, tn + fp)
    prec = ratio(tp, tp + fp)
    return Metrics(sens, spec, prec, f_beta(prec, sens), degenerate)


@dataclass
class MetricsReport:
    per_class: dict[int, Metrics]
    frequencies: dict[int, int]
    macro: Metrics = field(init=False)

    def __post_init__(self):
        ms = list(self.per_class.values())
        if not ms:
            raise ValueError("empty report")
        self.macro = Metrics(
            sensitivity=float(np.mean([m.sensitivity for m in ms])),
            specificity=float(np.mean([m.specificity for m in ms])),
            precision=float(np.mean([m.precision for m in ms])),
            f2=float(np.mean([m.f2 for m in ms])),
            degenerate=any(m.degenerate for m in ms),
        )


def one_against_all_report(cm: np.ndarray) -> MetricsReport:
    """Per-class metrics from a multiclass confusion matrix (rows = true)."""
    n = cm.shape[0]
    total = int(cm.sum())
    per_class = {}
    freqs = {}
    for c in range(n):
        tp = int(cm[c, c])
        fn = int(cm[c].sum() - tp)
        fp = int(cm[:, c].sum() - tp)
        tn = total - tp - fn - fp
        per_class[c] = metrics_from_counts(tp, fn, fp, tn)
        freqs[c] = int(cm[c].sum())
    return MetricsReport(per_class=per_class, frequencies=freqs)


# ---------------------------------------------------------------------------
# cell-based mask matching

@dataclass
class CellMatch:
    region_id: int
    true_class: int
    predicted_class: int
    agreement: float
    matched: bool


@dataclass
class CellMatchResult:
    cells: list[CellMatch]
    confusion: np.ndarray
    skipped: int  # regions with zero non-border pixels

    @property
    def match_rate(self) -> float:
        if not self.cells:
            return 0.0
        return float(np.mean([c.matched for c in self.cells]))


def cell_match(
    label_mask: np.ndarray,
    pred_mask: np.ndarray,
    regions: list[CellRegion],
    n_classes: int,
    threshold: float = MATCH_THRESHOLD,
) -> CellMatchResult:
    """Score a predicted label mask against the ground truth, cell by cell.

    Agreement is the fraction of the region's non-border pixels whose
    predicted class equals the region's true class; the predicted class
    entering the confusion matrix is the majority vote over those pixels
    (lowest class id on ties). Borders are excluded as a one-pixel rind.
    """
    label_mask = np.asarray(label_mask)
    pred_mask = np.asarray(pred_mask)
    if label_mask.shape != pred_mask.shape:
        raise ValueError(f"mask shapes differ: {label_mask.shape} vs {pred_mask.shape}")
    cells = []
    skipped = 0
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    for region in regions:
        border = {tuple(p) for p in region.border_pixels}
        inner = np.array([p for p in region.pixels if tuple(p) not in border])
        if len(inner) == 0:
            skipped += 1
            continue
        xs, ys = inner[:, 0], inner[:, 1]
        true_class = int(np.bincount(label_mask[ys, xs]).argmax())
        pred = pred_mask[ys, xs]
        agreement = float(np.mean(pred == true_class))
        pred_class = int(np.bincount(pred, minlength=n_classes).argmax())
        matched = agreement >= threshold
        cells.append(CellMatch(region.id, true_class, pred_class, agreement, matched))
        cm[true_class, pred_class] += 1
    return CellMatchResult(cells=cells, confusion=cm, skipped=skipped)


# ---------------------------------------------------------------------------
# cross-validation driver

@dataclass
class CvConfig:
    task: str = "multiclass"  # or "binary"
    resample_variant: str | None = None
    weight_scheme: str | None = None  # "distribution", "1:2", "2:3" or None
    c: float = 1.0
    gamma: float | None = None  # None: 1 / n_features
    tol: float = 1e-3
    k_folds: int = 5
    seed: int = 0
    smote_k: int = 5
    k_far: int = DEFAULT_K_FAR
    small_class_threshold: int = 500
    max_passes: int = 200

    def __post_init__(self):
        if self.task not in ("binary", "multiclass"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.weight_scheme not in (None, "distribution", "1:2", "2:3"):
            raise ValueError(f"unknown weight scheme {self.weight_scheme!r}")


@dataclass
class FoldOutcome:
    fold: int
    confusion: np.ndarray
    report: MetricsReport


@dataclass
class CvReport:
    config: CvConfig
    folds: list[FoldOutcome]
    class_ids: list[int]

    @property
    def mean_confusion(self) -> np.ndarray:
        return np.mean([f.confusion for f in self.folds], axis=0)

    @property
    def summed_confusion(self) -> np.ndarray:
        return np.sum([f.confusion for f in self.folds], axis=0)

    def mean_metric(self, class_id: int, name: str) -> float:
        return float(np.mean([getattr(f.report.per_class[class_id], name) for f in self.folds]))

    def macro_metric(self, name: str) -> float:
        return float(np.mean([self.mean_metric(c, name) for c in self.class_ids]))


def _fold_weights(config: CvConfig, labels: np.ndarray) -> dict[int, float] | None:
    if config.weight_scheme is None:
        return None
    if config.weight_scheme == "distribution":
        ids, counts = np.unique(labels, return_counts=True)
        return clf.weights_from_distribution({int(c): int(n) for c, n in zip(ids, counts)})
    return clf.designed_binary_weights(config.weight_scheme)


def run_cv(ds: LabeledDataset, config: CvConfig) -> CvReport:
    """Per fold: split, resample the training rows, fit, score the held-out fold.

    Folds are stratified on the full multi-class labels even for the binary
    task; resampling also happens on the multi-class labels, and rows are
    relabeled to {normal=0, abnormal=1} afterwards.
    """
    split = stratified_kfold(ds.labels, config.k_folds, config.seed)
    if config.task == "binary":
        eval_labels = np.where(ds.labels == 0, 0, 1)
        class_ids = [0, 1]
    else:
        eval_labels = ds.labels
        class_ids = sorted(int(c) for c in np.unique(ds.labels))
    position = {c: i for i, c in enumerate(class_ids)}

    folds = []
    for fold in range(config.k_folds):
        train_idx = split.train_indices(fold)
        test_idx = split.test_indices(fold)
        train = ds.subset(train_idx)
        if config.resample_variant is not None:
            plan = build_plan(
                config.resample_variant,
                train.class_counts(),
                small_class_threshold=config.small_class_threshold,
            )
            train = apply_plan(
                train, plan, SmoteParams(k=config.smote_k, seed=config.seed + fold),
                k_far=config.k_far,
            )
        if config.task == "binary":
            train_labels = np.where(train.labels == 0, 0, 1)
        else:
            train_labels = train.labels
        weights = _fold_weights(config, train_labels)
        gamma = config.gamma if config.gamma is not None else 1.0 / ds.features.shape[1]
        model = clf.train_multiclass(
            train.features,
            train_labels,
            c=config.c,
            weights=weights,
            kernel=clf.KernelParams("rbf", gamma),
            tol=config.tol,
            max_passes=config.max_passes,
            class_ids=class_ids,
        )
        pred = clf.predict(model, ds.features[test_idx])
        cm = confusion(
            np.array([position[int(v)] for v in eval_labels[test_idx]]),
            np.array([position[int(v)] for v in pred]),
            len(class_ids),
        )
        compact = one_against_all_report(cm)
        report = MetricsReport(
            per_class={c: compact.per_class[position[c]] for c in class_ids},
            frequencies={c: compact.frequencies[position[c]] for c in class_ids},
        )
        folds.append(FoldOutcome(fold=fold, confusion=cm, report=report))
    return CvReport(config=config, folds=folds, class_ids=class_ids)
