"""Acceptance gate: one test per criterion, each printing a pass line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; the tolerances here are contractual and must not be loosened.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from hemo.classifier import KernelParams, dual_objective, kernel_matrix, train_binary
from hemo.evaluation import (
    CvConfig,
    cell_match,
    f_beta,
    metrics_from_counts,
    row_normalize,
    run_cv,
    stratified_kfold,
)
from hemo.features import extract_feature_vector
from hemo.features.morphology import morphological_features
from hemo.imaging import BinaryMask, GrayImage, connected_components, otsu_threshold
from hemo.resampling import (
    LabeledDataset,
    SmoteParams,
    apply_plan,
    build_plan,
    nearmiss2_undersample,
    smote_oversample,
)
from hemo.synthetic import generate_dataset

from test_classifier import kkt_satisfied, projected_gradient_qp


def _pass(n: int, text: str) -> None:
    print(f"\nACCEPTANCE {n}: PASS - {text}")


# ---------------------------------------------------------------------------
# 1. SMO vs brute-force projected-gradient QP oracle

def test_criterion_1_smo_dual_objective_and_kkt():
    t0 = time.perf_counter()
    kernel = KernelParams("rbf", 1.0)
    rng_master = np.random.default_rng(2024)
    checked = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 9))
        x = rng.normal(size=(n, 2))
        y = rng.integers(0, 2, size=n)
        if len(np.unique(y)) < 2:
            y[0] = 1 - y[0]
        c = float(rng_master.choice([1.0, 10.0]))
        model = train_binary(x, y.astype(int), c=c, kernel=kernel, tol=1e-3)
        k = kernel_matrix(x, x, kernel)
        oracle = projected_gradient_qp(k, model.sign, model.box)
        got = dual_objective(model.alpha, model.sign, k)
        want = dual_objective(oracle, model.sign, k)
        assert got >= want - 1e-3, f"seed {seed}: SMO objective {got} < oracle {want} - 1e-3"
        assert kkt_satisfied(model, x, y, c, None, 1e-3), f"seed {seed}: KKT violated at 1e-3"
        checked += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0, f"runtime {elapsed:.1f}s exceeds 30s"
    assert checked == 100
    _pass(1, f"SMO matches QP oracle on 100 datasets, KKT at 1e-3, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2. Otsu equals exhaustive between-class-variance maximization

def _otsu_exhaustive(values: np.ndarray) -> int:
    v = values.astype(float)
    best_level, best_var = 0, -1.0
    for t in range(256):
        lo = v[v < t]
        hi = v[v >= t]
        var = 0.0
        if len(lo) and len(hi):
            w0 = len(lo) / len(v)
            var = w0 * (1 - w0) * (lo.mean() - hi.mean()) ** 2
        if var > best_var + 1e-12:
            best_var, best_level = var, t
    return best_level


def test_criterion_2_otsu_oracle_equivalence():
    t0 = time.perf_counter()
    for seed in range(200):
        rng = np.random.default_rng(seed)
        n_values = int(rng.integers(2, 12))
        levels = rng.choice(256, size=n_values, replace=False)
        counts = rng.integers(1, 30, size=n_values)
        values = np.repeat(levels, counts).astype(np.uint8)
        level, _ = otsu_threshold(GrayImage(values.reshape(1, -1)))
        assert level == _otsu_exhaustive(values), f"seed {seed}"
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0, f"runtime {elapsed:.1f}s exceeds 5s"
    _pass(2, f"otsu equals exhaustive scan on 200 histograms, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 3. SMOTE geometry and plan counts

def _on_some_segment(point, members, tol=1e-9):
    for i in range(len(members)):
        for j in range(len(members)):
            if i == j:
                continue
            a, b = members[i], members[j]
            ab = b - a
            denom = float(ab @ ab)
            if denom == 0:
                continue
            t = float((point - a) @ ab) / denom
            residual = np.linalg.norm(point - a - t * ab)
            if residual < tol and -tol <= t <= 1 + tol:
                return True
    return False


def test_criterion_3_smote_geometry_and_plan_counts():
    for seed in range(50):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 12))
        members = rng.normal(size=(n, 3))
        ds = LabeledDataset(members, np.ones(n, dtype=int))
        rows = smote_oversample(
            ds, 1, n + int(rng.integers(1, 8)), SmoteParams(k=int(rng.integers(1, n)), seed=seed)
        )
        for p in rows:
            assert _on_some_segment(p, members), f"seed {seed}: point off every member segment"

    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        counts = {0: int(rng.integers(30, 90))}
        for c in range(1, int(rng.integers(2, 6))):
            counts[c] = int(rng.integers(7, 30))
        feats, labels = [], []
        for c, num in counts.items():
            feats.append(rng.normal(loc=2.0 * c, size=(num, 3)))
            labels.extend([c] * num)
        ds = LabeledDataset(np.concatenate(feats), np.array(labels))
        for variant in ("smote1", "smote2", "smote3-2", "smote3-3"):
            plan = build_plan(variant, counts, small_class_threshold=15)
            out = apply_plan(ds, plan, SmoteParams(k=3, seed=seed))
            assert out.class_counts() == plan.targets, f"{variant} seed {seed}"
    _pass(3, "synthetic points on member segments (50 runs); plan counts exact (4 variants x 20)")


# ---------------------------------------------------------------------------
# 4. NearMiss-2 equals exhaustive average-distance selection

def test_criterion_4_nearmiss_oracle():
    for seed in range(50):
        rng = np.random.default_rng(seed)
        n0 = int(rng.integers(5, 25))
        n1 = int(rng.integers(2, max(3, 30 - n0)))
        feats = np.concatenate([rng.normal(size=(n0, 2)), rng.normal(2.0, 1.0, size=(n1, 2))])
        labels = np.array([0] * n0 + [1] * n1)
        ds = LabeledDataset(feats, labels)
        target = int(rng.integers(1, n0 + 1))
        k_far = int(rng.integers(1, 6))
        keep = nearmiss2_undersample(ds, 0, target, k_far)
        member_idx = [i for i in range(len(ds)) if labels[i] == 0]
        others = feats[labels != 0]
        k = min(k_far, len(others))
        scored = sorted(
            (float(np.mean(sorted(np.linalg.norm(feats[i] - o) for o in others)[-k:])), i)
            for i in member_idx
        )
        want = sorted(i for _, i in scored[:target])
        assert list(keep) == want, f"seed {seed}"
    _pass(4, "NearMiss-2 selection identical to brute force on 50 fixtures")


# ---------------------------------------------------------------------------
# 5. Stratified folds

def test_criterion_5_stratification():
    k = 5
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n_classes = int(rng.integers(2, 8))
        counts = rng.integers(k, 60, size=n_classes)
        labels = np.repeat(np.arange(n_classes), counts)
        rng.shuffle(labels)
        split = stratified_kfold(labels, k, seed=seed)
        seen = np.concatenate([split.test_indices(f) for f in range(k)])
        assert sorted(seen) == list(range(len(labels))), "folds must partition the index set"
        for c in range(n_classes):
            n_c = int((labels == c).sum())
            for f in range(k):
                got = int((labels[split.test_indices(f)] == c).sum())
                assert got in (n_c // k, -(-n_c // k)), f"seed {seed} class {c} fold {f}"
    _pass(5, "per-fold class counts in {floor, ceil}; folds partition (100 label vectors)")


# ---------------------------------------------------------------------------
# 6. Metrics algebra

def test_criterion_6_metrics_algebra():
    m = metrics_from_counts(tp=9, fn=1, fp=3, tn=7)
    assert abs(m.sensitivity - 0.9) < 1e-12
    assert abs(m.specificity - 0.7) < 1e-12
    assert abs(m.precision - 0.75) < 1e-12
    assert abs(m.f2 - 0.86538) < 1e-5

    rng = np.random.default_rng(6)
    cm = rng.integers(1, 40, size=(6, 6))
    norm = row_normalize(cm)
    assert np.all(np.abs(norm.sum(axis=1) - 100.0) < 1e-9)

    grid = np.linspace(0.01, 0.99, 99)
    for p in grid:
        for r in grid:
            if r > p:
                f1 = 2 * p * r / (p + r)
                assert f_beta(p, r) > f1, f"f2 <= f1 at P={p} R={r}"
    _pass(6, "hand fixture at 1e-5; rows sum to 100 +/- 1e-9; f2 > f1 whenever R > P")


# ---------------------------------------------------------------------------
# 7. Cell-match threshold semantics

def _agreement_fixture(n_agree, n_inner):
    bits = np.zeros((8, n_inner + 6), dtype=bool)
    bits[2:5, 2 : n_inner + 4] = True
    _, regions = connected_components(BinaryMask(bits), min_area=1, discard_border=False)
    region = regions[0]
    border = {tuple(p) for p in region.border_pixels}
    inner = [p for p in region.pixels if tuple(p) not in border]
    assert len(inner) == n_inner  # one-pixel rind excluded from the denominator
    label = np.where(bits, 1, 0).astype(np.int64)
    pred = label.copy()
    for idx, (x, y) in enumerate(inner):
        if idx >= n_agree:
            pred[y, x] = 2
    return label, pred, regions


def test_criterion_7_cell_match_rule():
    for n_agree, n_inner, expect in ((69, 100, False), (70, 100, True), (71, 100, True)):
        label, pred, regions = _agreement_fixture(n_agree, n_inner)
        result = cell_match(label, pred, regions, n_classes=3)
        cell = result.cells[0]
        assert abs(cell.agreement - n_agree / 100.0) < 1e-12
        assert cell.matched is expect, f"agreement {n_agree / 100} should be matched={expect}"
    _pass(7, "agreement 0.69/0.70/0.71 -> unmatched/matched/matched, borders excluded")


# ---------------------------------------------------------------------------
# 8. Feature sanity

def test_criterion_8_feature_fixtures_and_finiteness():
    # 10x10 square
    bits = np.zeros((14, 14), dtype=bool)
    bits[2:12, 2:12] = True
    _, regions = connected_components(BinaryMask(bits), min_area=1, discard_border=False)
    m = morphological_features(regions[0])
    assert (m.area, m.filled_area, m.bbox_area) == (100, 100, 100)
    assert m.extent == 1.0 and m.solidity == 1.0

    # square with hole
    holed = bits.copy()
    holed[6:8, 6:8] = False
    _, regions = connected_components(BinaryMask(holed), min_area=1, discard_border=False)
    m = morphological_features(regions[0])
    assert (m.area, m.filled_area) == (96, 100)

    # rasterized ellipse semi-axes (20, 10)
    yy, xx = np.mgrid[0:61, 0:61].astype(float)
    ell = ((xx - 30) / 20.0) ** 2 + ((yy - 30) / 10.0) ** 2 <= 1.0
    _, regions = connected_components(BinaryMask(ell), min_area=1, discard_border=False)
    m = morphological_features(regions[0])
    assert abs(m.axis_ratio - 2.0) / 2.0 < 0.05
    assert abs(m.eccentricity - np.sqrt(3) / 2) / (np.sqrt(3) / 2) < 0.05

    rng = np.random.default_rng(88)
    checked = 0
    while checked < 1000:
        size = int(rng.integers(3, 13))
        canvas = np.zeros((size + 10, size + 10), dtype=bool)
        blob = rng.random((size, size)) < rng.uniform(0.45, 0.95)
        blob[size // 2, size // 2] = True
        canvas[5 : 5 + size, 5 : 5 + size] = blob
        img = GrayImage(rng.integers(0, 256, size=canvas.shape, dtype=np.uint8))
        _, regions = connected_components(BinaryMask(canvas), min_area=1, discard_border=False)
        for region in regions:
            vec = extract_feature_vector(img, region)
            assert vec.values.shape == (124,)
            assert np.all(np.isfinite(vec.values)), "non-finite feature value"
            checked += 1
    _pass(8, f"morphological fixtures at stated tolerances; {checked} random regions all finite")


# ---------------------------------------------------------------------------
# 9. Directional reproduction on synthetic imbalanced shapes

@pytest.fixture(scope="module")
def shape_dataset():
    return generate_dataset(2000, frequencies=(0.80, 0.15, 0.05), seed=42)


def test_criterion_9_smote_csl_direction(shape_dataset):
    t0 = time.perf_counter()
    ds = shape_dataset
    baseline = run_cv(ds, CvConfig(task="multiclass", seed=7))
    combined = run_cv(
        ds,
        CvConfig(task="multiclass", resample_variant="smote1",
                 weight_scheme="distribution", seed=7),
    )
    minority = [c for c in baseline.class_ids if c != 0]
    base_sens = float(np.mean([baseline.mean_metric(c, "sensitivity") for c in minority]))
    comb_sens = float(np.mean([combined.mean_metric(c, "sensitivity") for c in minority]))
    elapsed = time.perf_counter() - t0
    assert comb_sens > base_sens, (
        f"SMOTE1+weights minority sensitivity {comb_sens:.4f} "
        f"not strictly above baseline {base_sens:.4f}"
    )
    assert comb_sens >= 0.85, f"minority sensitivity {comb_sens:.4f} below 0.85"
    assert elapsed < 300.0, f"runtime {elapsed:.0f}s exceeds 5 minutes"
    _pass(9, f"minority sensitivity {base_sens:.3f} -> {comb_sens:.3f}, {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 10. End-to-end determinism of the experiment command

def test_criterion_10_experiment_determinism(shape_dataset, tmp_path):
    from hemo.cli import main
    from hemo.features import FeatureVector, write_feature_csv

    table = tmp_path / "table.csv"
    sub = shape_dataset.subset(np.arange(400))
    write_feature_csv(
        table, [FeatureVector(r, int(l)) for r, l in zip(sub.features, sub.labels)]
    )
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        code = main(["--seed", "13", "experiment", "--recipe", "smote1-csl-multiclass",
                     "--features", str(table), "--out", str(out)])
        assert code == 0
        outs.append(out)
    csvs = sorted(p.name for p in outs[0].glob("*.csv"))
    assert csvs, "experiment produced no CSV outputs"
    for name in csvs:
        a = (outs[0] / name).read_bytes()
        b = (outs[1] / name).read_bytes()
        assert a == b, f"{name} differs between reruns"
    _pass(10, f"rerun byte-identical across {len(csvs)} CSV outputs")
