import numpy as np
import pytest

from hemo.classifier import (
    KernelParams,
    designed_binary_weights,
    dual_objective,
    fit_scaler,
    grid_search_hyperparams,
    inverse_transform,
    kernel_matrix,
    load_model,
    predict,
    rbf,
    save_model,
    train_binary,
    train_multiclass,
    transform,
    weights_from_distribution,
)


# ---------------------------------------------------------------------------
# oracle: brute-force projected-gradient ascent on the dual QP

def project_feasible(v, sign, box):
    """Project onto {0 <= a <= box, sum a*sign = 0}.

    The balance h(t) = sum sign_i * clip(v_i - t*sign_i, 0, box_i) is
    piecewise linear and non-increasing in t; find its root exactly by
    scanning the sorted clip breakpoints.
    """
    def balance(t):
        return float(np.sum(np.clip(v - t * sign, 0.0, box) * sign))

    # each term clips at t = v_i*sign_i and t = (v_i - box_i)*sign_i;
    # h is saturated (constant) outside the breakpoint range
    bps = np.sort(np.concatenate([v * sign, (v - box) * sign]))
    h = np.array([balance(t) for t in bps])
    if h[0] <= 0.0:
        t_star = bps[0]
    elif h[-1] > 0.0:
        t_star = bps[-1]
    else:
        k = int(np.searchsorted(-h, 0.0, side="left"))  # first index with h <= 0
        t0, t1 = bps[k - 1], bps[k]
        h0, h1 = h[k - 1], h[k]
        t_star = t0 if h0 == h1 else t0 + h0 * (t1 - t0) / (h0 - h1)
    return np.clip(v - t_star * sign, 0.0, box)


def projected_gradient_qp(k, sign, box, iters=3000):
    q = np.outer(sign, sign) * k
    step = 1.0 / max(np.linalg.eigvalsh(q).max(), 1e-9)
    a = project_feasible(np.zeros(len(sign)), sign, box)
    for _ in range(iters):
        a = project_feasible(a + step * (1.0 - q @ a), sign, box)
    return a


def kkt_satisfied(model, x, y, c, weights, tol):
    """KKT of the dual solution: some bias must satisfy every condition at tol."""
    sign = model.sign
    box = model.box
    alpha = model.alpha
    f0 = model.decision_function(x) - model.bias
    u = sign - f0  # bias putting each point exactly on its margin
    ok = True
    ok &= bool(abs(np.sum(alpha * sign)) <= tol + 1e-9)
    ok &= bool(np.all(alpha >= -1e-9) and np.all(alpha <= box + 1e-9))
    lower = ((sign > 0) & (alpha < box - 1e-8)) | ((sign < 0) & (alpha > 1e-8))
    upper = ((sign > 0) & (alpha > 1e-8)) | ((sign < 0) & (alpha < box - 1e-8))
    b_lo = u[lower].max() if lower.any() else -np.inf
    b_hi = u[upper].min() if upper.any() else np.inf
    ok &= bool(b_lo - b_hi <= 2.0 * tol + 1e-9)
    return ok


def random_instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 9))
    x = rng.normal(size=(n, 2))
    y = rng.integers(0, 2, size=n)
    if len(np.unique(y)) < 2:
        y[0] = 1 - y[0]
    c = float(rng.choice([1.0, 10.0]))
    return x, y.astype(int), c


# ---------------------------------------------------------------------------
# scaler

def test_scaler_constant_column_zeroed():
    rows = np.array([[1.0, 5.0], [1.0, 7.0], [1.0, 9.0]])
    sp = fit_scaler(rows)
    out = transform(rows, sp)
    assert np.all(out[:, 0] == 0.0)
    assert out[:, 1].mean() == pytest.approx(0.0, abs=1e-9)
    assert out[:, 1].std() == pytest.approx(1.0, abs=1e-9)


def test_scaler_test_rows_use_train_statistics():
    rng = np.random.default_rng(0)
    train = rng.normal(loc=0.0, size=(50, 3))
    test = rng.normal(loc=10.0, size=(20, 3))
    sp = fit_scaler(train)
    out = transform(test, sp)
    assert out.mean() > 5.0  # shifted distribution is not re-centered


def test_scaler_round_trip():
    rng = np.random.default_rng(1)
    rows = rng.normal(size=(30, 4)) * rng.uniform(0.5, 3.0, size=4)
    sp = fit_scaler(rows)
    back = inverse_transform(transform(rows, sp), sp)
    np.testing.assert_allclose(back, rows, atol=1e-9)


def test_scaler_needs_two_rows():
    with pytest.raises(ValueError):
        fit_scaler(np.zeros((1, 4)))


# ---------------------------------------------------------------------------
# rbf kernel

def test_rbf_identity():
    x = np.array([1.0, 2.0, 3.0])
    assert rbf(x, x, 0.5) == 1.0


def test_rbf_unit_distance():
    assert rbf(np.array([0.0]), np.array([1.0]), 1.0) == pytest.approx(0.36788, abs=1e-5)


def test_rbf_symmetric():
    rng = np.random.default_rng(2)
    for _ in range(10):
        x, y = rng.normal(size=(2, 5))
        assert rbf(x, y, 0.7) == rbf(y, x, 0.7)


def test_kernel_matrix_positive_semidefinite():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(20, 4))
    k = kernel_matrix(pts, pts, KernelParams("rbf", 0.3))
    np.testing.assert_allclose(k, k.T, atol=1e-12)
    assert np.linalg.eigvalsh(k).min() >= -1e-8


# ---------------------------------------------------------------------------
# train_binary / SMO

def test_symmetric_pair_decision_zero_at_origin():
    x = np.array([[-1.0], [1.0]])
    y = np.array([0, 1])
    model = train_binary(x, y, c=1.0, kernel=KernelParams("rbf", 1.0), tol=1e-6)
    assert model.decision_function(np.array([[0.0]]))[0] == pytest.approx(0.0, abs=1e-6)
    d = model.decision_function(x)
    assert d[0] < 0 < d[1]


def test_xor_fixture_separable_with_rbf():
    x = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([0, 0, 1, 1])
    model = train_binary(x, y, c=10.0, kernel=KernelParams("rbf", 1.0))
    d = model.decision_function(x)
    assert np.all(np.sign(d) == np.array([-1, -1, 1, 1]))


def test_smo_matches_projected_gradient_oracle():
    kernel = KernelParams("rbf", 1.0)
    for seed in range(30):
        x, y, c = random_instance(seed)
        model = train_binary(x, y, c=c, kernel=kernel, tol=1e-4)
        k = kernel_matrix(x, x, kernel)
        oracle_alpha = projected_gradient_qp(k, model.sign, model.box)
        got = dual_objective(model.alpha, model.sign, k)
        want = dual_objective(oracle_alpha, model.sign, k)
        assert got >= want - 1e-3
        assert kkt_satisfied(model, x, y, c, None, 1e-4)


def test_smo_kkt_with_class_weights():
    rng = np.random.default_rng(5)
    x = np.vstack([rng.normal(0, 1, size=(30, 2)), rng.normal(2.0, 1, size=(10, 2))])
    y = np.array([0] * 30 + [1] * 10)
    weights = {0: 1.0, 1: 3.0}
    model = train_binary(x, y, c=1.0, weights=weights, kernel=KernelParams("rbf", 0.5), tol=1e-3)
    # box respects per-class weights
    assert np.all(model.box[y == 0] == 1.0)
    assert np.all(model.box[y == 1] == 3.0)
    assert abs(np.sum(model.alpha * model.sign)) <= 1e-3 + 1e-9
    assert kkt_satisfied(model, x, y, 1.0, weights, 1e-3)


def test_train_binary_rejects_single_class():
    with pytest.raises(ValueError):
        train_binary(np.zeros((3, 2)), np.array([1, 1, 1]))


def test_predictions_invariant_to_row_order():
    rng = np.random.default_rng(7)
    x = np.vstack([rng.normal(-2, 0.3, size=(15, 2)), rng.normal(2, 0.3, size=(15, 2))])
    y = np.array([0] * 15 + [1] * 15)
    grid = rng.normal(0, 2, size=(40, 2))
    m1 = train_binary(x, y, c=1.0, kernel=KernelParams("rbf", 0.5))
    perm = rng.permutation(30)
    m2 = train_binary(x[perm], y[perm], c=1.0, kernel=KernelParams("rbf", 0.5))
    d1 = m1.decision_function(grid)
    d2 = m2.decision_function(grid)
    # up to tie-breaking: compare where neither model sits on the boundary
    clear = (np.abs(d1) > 1e-3) & (np.abs(d2) > 1e-3)
    assert clear.sum() > 30
    np.testing.assert_array_equal(np.sign(d1[clear]), np.sign(d2[clear]))


def test_weight_c_scale_invariance():
    rng = np.random.default_rng(8)
    x = np.vstack([rng.normal(-1, 0.8, size=(20, 2)), rng.normal(1, 0.8, size=(20, 2))])
    y = np.array([0] * 20 + [1] * 20)
    grid = rng.normal(0, 1.5, size=(30, 2))
    kernel = KernelParams("rbf", 0.5)
    m1 = train_binary(x, y, c=2.0, weights={0: 1.0, 1: 2.0}, kernel=kernel, tol=1e-5)
    m2 = train_binary(x, y, c=1.0, weights={0: 2.0, 1: 4.0}, kernel=kernel, tol=1e-5)
    np.testing.assert_array_equal(
        np.sign(m1.decision_function(grid)), np.sign(m2.decision_function(grid))
    )


# ---------------------------------------------------------------------------
# multiclass

def blobs(rng, centers, n_per=12, spread=0.25):
    x, y = [], []
    for label, center in enumerate(centers):
        x.append(rng.normal(0, spread, size=(n_per, len(center))) + center)
        y.extend([label] * n_per)
    return np.concatenate(x), np.array(y)


def test_two_class_multiclass_equals_binary():
    rng = np.random.default_rng(9)
    x, y = blobs(rng, [(-2, 0), (2, 0)])
    model = train_multiclass(x, y, c=1.0, kernel=KernelParams("rbf", 0.5))
    assert len(model.pairs) == 1
    xs = transform(x, model.scaler)
    binary = train_binary(xs, y, c=1.0, kernel=KernelParams("rbf", 0.5))
    np.testing.assert_array_equal(
        predict(model, x), np.where(binary.decision_function(xs) > 0, 1, 0)
    )


def test_three_blobs_training_accuracy():
    rng = np.random.default_rng(10)
    x, y = blobs(rng, [(-3, 0), (3, 0), (0, 4)])
    model = train_multiclass(x, y, c=10.0, kernel=KernelParams("rbf", 0.5))
    assert np.mean(predict(model, x) == y) == 1.0


def test_eleven_classes_give_55_pairs():
    rng = np.random.default_rng(11)
    centers = [(np.cos(2 * np.pi * k / 11) * 10, np.sin(2 * np.pi * k / 11) * 10) for k in range(11)]
    x, y = blobs(rng, centers, n_per=5, spread=0.1)
    model = train_multiclass(x, y, c=1.0, kernel=KernelParams("rbf", 0.5))
    assert len(model.pairs) == 55


def test_missing_class_pair_skipped_with_warning():
    rng = np.random.default_rng(12)
    x, y = blobs(rng, [(-2, 0), (2, 0)])
    with pytest.warns(UserWarning, match="missing a class"):
        model = train_multiclass(x, y, class_ids=[0, 1, 2], kernel=KernelParams("rbf", 0.5))
    assert len(model.pairs) == 1
    assert set(predict(model, x)) <= {0, 1}


def test_predict_deterministic():
    rng = np.random.default_rng(13)
    x, y = blobs(rng, [(-2, 0), (2, 0), (0, 3)])
    model = train_multiclass(x, y, kernel=KernelParams("rbf", 0.5))
    p1 = predict(model, x)
    p2 = predict(model, x)
    np.testing.assert_array_equal(p1, p2)


def test_training_rows_predicted_correctly_on_separable_fixture():
    rng = np.random.default_rng(14)
    x, y = blobs(rng, [(-4, 0), (4, 0), (0, 5)], n_per=15)
    model = train_multiclass(x, y, c=10.0, kernel=KernelParams("rbf", 0.5))
    np.testing.assert_array_equal(predict(model, x), y)


# ---------------------------------------------------------------------------
# weights

def test_distribution_weights_balanced():
    w = weights_from_distribution({0: 20, 1: 20, 2: 20})
    assert all(v == pytest.approx(1.0) for v in w.values())


def test_distribution_weights_formula():
    w = weights_from_distribution({0: 90, 1: 10})
    assert w[0] == pytest.approx(0.5556, abs=1e-4)
    assert w[1] == pytest.approx(5.0)


def test_distribution_weights_identity():
    counts = {0: 37, 1: 11, 2: 52}
    w = weights_from_distribution(counts)
    assert sum(counts[c] * w[c] for c in counts) == pytest.approx(sum(counts.values()))


def test_distribution_weights_zero_count_errors():
    with pytest.raises(ValueError):
        weights_from_distribution({0: 5, 1: 0})


def test_designed_weights():
    assert designed_binary_weights("1:2") == {0: 1.0, 1: 2.0}
    assert designed_binary_weights("2:3") == {0: 2.0, 1: 3.0}
    with pytest.raises(ValueError):
        designed_binary_weights("3:4")


# ---------------------------------------------------------------------------
# persistence and search

def test_model_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(15)
    x, y = blobs(rng, [(-2, 0), (2, 0), (0, 3)])
    model = train_multiclass(x, y, kernel=KernelParams("rbf", 0.5))
    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    np.testing.assert_array_equal(predict(model, x), predict(loaded, x))


def test_grid_search_smoke():
    rng = np.random.default_rng(16)
    x, y = blobs(rng, [(-2, 0), (2, 0)], n_per=20)
    c, gamma = grid_search_hyperparams(
        x, y, c_grid=(1.0, 10.0), gamma_grid=(0.1, 1.0), seed=0
    )
    assert c in (1.0, 10.0)
    assert gamma in (0.1, 1.0)
