import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hemo.evaluation import (
    CvConfig,
    binarize,
    cell_match,
    confusion,
    f_beta,
    metrics_from_counts,
    one_against_all_report,
    render_percent_rows,
    row_normalize,
    run_cv,
    stratified_kfold,
)
from hemo.imaging import BinaryMask, connected_components
from hemo.resampling import LabeledDataset


# ---------------------------------------------------------------------------
# stratified_kfold

def test_kfold_balanced_two_classes():
    labels = np.array([0] * 5 + [1] * 5)
    split = stratified_kfold(labels, 5, seed=0)
    for fold in range(5):
        test = split.test_indices(fold)
        assert len(test) == 2
        assert set(labels[test]) == {0, 1}


def test_kfold_partitions_indices():
    rng = np.random.default_rng(1)
    labels = rng.integers(0, 3, size=60)
    labels[:15] = np.arange(15) % 3  # every class >= 5
    split = stratified_kfold(labels, 5, seed=3)
    all_test = np.concatenate([split.test_indices(f) for f in range(5)])
    assert sorted(all_test) == list(range(60))
    for f in range(5):
        assert set(split.test_indices(f)).isdisjoint(split.train_indices(f))
        assert len(split.test_indices(f)) + len(split.train_indices(f)) == 60


def test_kfold_small_class_errors_with_name():
    labels = np.array([0, 0, 0, 0, 0, 1, 1])
    with pytest.raises(ValueError, match="class 1"):
        stratified_kfold(labels, 5, seed=0)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_kfold_per_class_counts_floor_ceil(seed):
    rng = np.random.default_rng(seed)
    k = 5
    n_classes = int(rng.integers(2, 6))
    counts = rng.integers(k, 40, size=n_classes)
    labels = np.repeat(np.arange(n_classes), counts)
    rng.shuffle(labels)
    split = stratified_kfold(labels, k, seed=seed)
    for c in range(n_classes):
        n_c = int((labels == c).sum())
        for fold in range(k):
            in_fold = int((labels[split.test_indices(fold)] == c).sum())
            assert in_fold in (n_c // k, -(-n_c // k))


# ---------------------------------------------------------------------------
# binarize

def test_binarize_all_positive():
    assert binarize(np.array([3, 3, 3]), 3).tolist() == [1, 1, 1]


def test_binarize_absent_positive():
    assert binarize(np.array([1, 2, 4]), 3).tolist() == [0, 0, 0]


def test_binarize_counts():
    labels = np.array([0, 1, 2, 1, 1, 0])
    assert binarize(labels, 1).sum() == 3


# ---------------------------------------------------------------------------
# confusion

def test_confusion_perfect_is_diagonal():
    y = np.array([0, 1, 2, 2, 1, 0])
    cm = confusion(y, y, 3)
    assert np.array_equal(cm, np.diag([2, 2, 2]))


def test_confusion_hand_counted():
    true = np.array([0, 0, 1, 1, 2, 2, 2])
    pred = np.array([0, 1, 1, 1, 0, 2, 1])
    cm = confusion(true, pred, 3)
    expected = np.array([[1, 1, 0], [0, 2, 0], [1, 1, 1]])
    assert np.array_equal(cm, expected)


def test_confusion_rejects_out_of_range():
    with pytest.raises(ValueError):
        confusion(np.array([0, 3]), np.array([0, 0]), 3)


def test_row_normalize_sums_to_100():
    rng = np.random.default_rng(2)
    cm = rng.integers(0, 30, size=(4, 4))
    cm[1] = 0  # zero row stays zero
    norm = row_normalize(cm)
    sums = norm.sum(axis=1)
    assert sums[0] == pytest.approx(100.0, abs=1e-9)
    assert sums[1] == 0.0
    assert sums[2] == pytest.approx(100.0, abs=1e-9)


def test_render_percent_rows_absorb_residue():
    cm = np.array([[1, 1, 1]])
    rows = render_percent_rows(cm, decimals=2)
    assert sum(rows[0]) == pytest.approx(100.0, abs=1e-9)


# ---------------------------------------------------------------------------
# metrics

def test_metrics_hand_arithmetic_fixture():
    m = metrics_from_counts(tp=9, fn=1, fp=3, tn=7)
    assert m.sensitivity == pytest.approx(0.9)
    assert m.specificity == pytest.approx(0.7)
    assert m.precision == pytest.approx(0.75)
    assert m.f2 == pytest.approx(0.86538, abs=1e-5)


def test_metrics_perfect():
    m = metrics_from_counts(tp=10, fn=0, fp=0, tn=10)
    assert (m.sensitivity, m.specificity, m.precision, m.f2) == (1.0, 1.0, 1.0, 1.0)


def test_metrics_degenerate_flagged():
    m = metrics_from_counts(tp=0, fn=0, fp=0, tn=5)
    assert m.degenerate
    assert m.sensitivity == 0.0
    assert m.f2 == 0.0


def test_paper_reference_binary_row_documented():
    # headline binary SVM row: sensitivity 93.6, specificity 79.4, f2 93.1
    # (not reproducible without the private dataset; kept as documentation)
    reference = {"sensitivity": 93.6, "specificity": 79.4, "f2": 93.1}
    assert set(reference) == {"sensitivity", "specificity", "f2"}


def test_f2_weighs_recall_above_precision():
    grid = np.linspace(0.01, 0.99, 99)
    for p in grid:
        for r in grid:
            if r > p:
                f1 = 2 * p * r / (p + r)
                assert f_beta(p, r) > f1


def test_f2_edges():
    assert f_beta(1.0, 1.0) == 1.0
    assert f_beta(0.0, 0.0) == 0.0


def test_one_against_all_accounting():
    # true negatives pool every other class (the inflation is reproduced, not fixed)
    cm = np.array([[5, 1, 0], [2, 7, 1], [0, 1, 9]])
    report = one_against_all_report(cm)
    m0 = report.per_class[0]
    assert m0.sensitivity == pytest.approx(5 / 6)
    tn0 = cm.sum() - 6 - 2  # total - row0 - fp
    assert m0.specificity == pytest.approx(tn0 / (tn0 + 2))
    assert report.frequencies == {0: 6, 1: 10, 2: 10}


# ---------------------------------------------------------------------------
# cell_match

def _regions_for(mask_bits):
    _, regions = connected_components(BinaryMask(mask_bits), min_area=1, discard_border=False)
    return regions


def test_cell_match_identical_masks():
    bits = np.zeros((20, 20), dtype=bool)
    bits[4:10, 4:10] = True
    bits[12:18, 12:18] = True
    regions = _regions_for(bits)
    label = np.where(bits, 2, 0).astype(np.int64)
    result = cell_match(label, label.copy(), regions, n_classes=3)
    assert len(result.cells) == 2
    assert all(c.matched and c.agreement == 1.0 for c in result.cells)
    assert result.confusion[2, 2] == 2


def _fixture_with_agreement(n_agree, n_inner=10):
    # a 1 x n_inner interior row inside a 3 x (n_inner + 2) block
    bits = np.zeros((8, n_inner + 6), dtype=bool)
    bits[2:5, 2 : n_inner + 4] = True
    regions = _regions_for(bits)
    assert len(regions) == 1
    region = regions[0]
    border = {tuple(p) for p in region.border_pixels}
    inner = [p for p in region.pixels if tuple(p) not in border]
    assert len(inner) == n_inner
    label = np.where(bits, 1, 0).astype(np.int64)
    pred = label.copy()
    for k, (x, y) in enumerate(inner):
        if k >= n_agree:
            pred[y, x] = 2
    return label, pred, regions


def test_cell_match_threshold_inclusive_at_70():
    label, pred, regions = _fixture_with_agreement(7, 10)
    result = cell_match(label, pred, regions, n_classes=3)
    assert result.cells[0].agreement == pytest.approx(0.70)
    assert result.cells[0].matched  # >= is inclusive


def test_cell_match_unmatched_below_threshold():
    label, pred, regions = _fixture_with_agreement(6, 10)
    result = cell_match(label, pred, regions, n_classes=3)
    assert result.cells[0].agreement == pytest.approx(0.60)
    assert not result.cells[0].matched


def test_cell_match_at_71_percent():
    label, pred, regions = _fixture_with_agreement(71, 100)
    result = cell_match(label, pred, regions, n_classes=3)
    assert result.cells[0].agreement == pytest.approx(0.71)
    assert result.cells[0].matched


def test_cell_match_skips_regions_without_interior():
    bits = np.zeros((6, 6), dtype=bool)
    bits[2:4, 2:4] = True  # 2x2: every pixel is border
    regions = _regions_for(bits)
    label = np.where(bits, 1, 0).astype(np.int64)
    result = cell_match(label, label.copy(), regions, n_classes=2)
    assert result.skipped == 1
    assert len(result.cells) == 0


def test_cell_match_self_evaluation_always_matches():
    rng = np.random.default_rng(5)
    bits = rng.random((30, 30)) < 0.3
    from scipy import ndimage

    bits = ndimage.binary_dilation(bits, iterations=1)
    regions = [r for r in _regions_for(bits) if r.area > 8]
    label = np.where(bits, 1, 0).astype(np.int64)
    result = cell_match(label, label.copy(), regions, n_classes=2)
    assert all(c.matched for c in result.cells)


def test_cell_match_dimension_mismatch_errors():
    with pytest.raises(ValueError):
        cell_match(np.zeros((4, 4), dtype=int), np.zeros((5, 4), dtype=int), [], 2)


# ---------------------------------------------------------------------------
# run_cv

def _blob_dataset(rng, counts, spread=0.3):
    feats, labels = [], []
    centers = {0: (-3, 0), 1: (3, 0), 2: (0, 4)}
    for c, n in counts.items():
        feats.append(rng.normal(0, spread, size=(n, 2)) + centers[c])
        labels.extend([c] * n)
    return LabeledDataset(np.concatenate(feats), np.array(labels))


def test_run_cv_separable_blobs_high_sensitivity():
    rng = np.random.default_rng(7)
    ds = _blob_dataset(rng, {0: 40, 1: 25, 2: 20})
    report = run_cv(ds, CvConfig(task="multiclass", c=10.0, gamma=0.5, k_folds=5, seed=1))
    assert report.macro_metric("sensitivity") >= 0.99
    assert len(report.folds) == 5


def test_run_cv_identity_resampling_matches_none():
    rng = np.random.default_rng(8)
    ds = _blob_dataset(rng, {0: 20, 1: 20, 2: 20})
    base = run_cv(ds, CvConfig(task="multiclass", gamma=0.5, seed=3))
    # balanced counts: smote1 targets equal the original counts
    resampled = run_cv(
        ds, CvConfig(task="multiclass", resample_variant="smote1", gamma=0.5, seed=3)
    )
    for a, b in zip(base.folds, resampled.folds):
        np.testing.assert_array_equal(a.confusion, b.confusion)


def test_run_cv_binary_task_stratifies_on_multiclass():
    rng = np.random.default_rng(9)
    ds = _blob_dataset(rng, {0: 30, 1: 15, 2: 10})
    report = run_cv(ds, CvConfig(task="binary", gamma=0.5, seed=2))
    assert report.class_ids == [0, 1]
    for fold in report.folds:
        assert fold.confusion.shape == (2, 2)
    assert report.macro_metric("sensitivity") > 0.9


def test_run_cv_fold_count():
    rng = np.random.default_rng(10)
    ds = _blob_dataset(rng, {0: 20, 1: 15, 2: 10})
    report = run_cv(ds, CvConfig(task="multiclass", gamma=0.5, k_folds=4, seed=0))
    assert len(report.folds) == 4
