"""Cost-sensitive soft-margin SVM trained by sequential minimal optimization.

The dual problem max sum(a) - 1/2 sum a_i a_j y_i y_j K_ij, subject to
0 <= a_i <= C * w_class(i) and sum a_i y_i = 0, is solved two multipliers at
a time: the first index is the worst KKT violator, the second maximizes
|E_i - E_j|. Per-class weights scale the box constraint, which is how
misclassifying a minority class is made more expensive. Multiclass problems
are decomposed one-vs-one with majority voting; feature scaling is fit once
on the training rows and stored with the model.
"""

from __future__ import annotations

import json
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

EPS_STD = 1e-12
EPS_ALPHA = 1e-10


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature mean and standard deviation, fit on training rows only."""

    mean: np.ndarray
    std: np.ndarray


def fit_scaler(rows: np.ndarray) -> ScalerParams:
    rows = np.asarray(rows, dtype=np.float64)
    if len(rows) < 2:
        raise ValueError(f"need at least 2 rows to fit a scaler, got {len(rows)}")
    std = rows.std(axis=0)
    return ScalerParams(mean=rows.mean(axis=0), std=np.maximum(std, EPS_STD))


def transform(rows: np.ndarray, scaler: ScalerParams) -> np.ndarray:
    return (np.asarray(rows, dtype=np.float64) - scaler.mean) / scaler.std


def inverse_transform(rows: np.ndarray, scaler: ScalerParams) -> np.ndarray:
    return np.asarray(rows, dtype=np.float64) * scaler.std + scaler.mean


@dataclass(frozen=True)
class KernelParams:
    kind: str = "rbf"
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("rbf", "linear"):
            raise ValueError(f"unsupported kernel {self.kind!r}")
        if self.kind == "rbf" and self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


def rbf(x: np.ndarray, y: np.ndarray, gamma: float) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.exp(-gamma * np.sum((x - y) ** 2)))


def kernel_matrix(a: np.ndarray, b: np.ndarray, kernel: KernelParams) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if kernel.kind == "linear":
        return a @ b.T
    sq = np.sum(a**2, axis=1)[:, None] + np.sum(b**2, axis=1)[None, :] - 2.0 * (a @ b.T)
    return np.exp(-kernel.gamma * np.maximum(sq, 0.0))


class KernelCache:
    """Row-wise kernel cache with an LRU byte budget."""

    def __init__(self, x: np.ndarray, kernel: KernelParams, max_mb: float = 512.0):
        self.x = x
        self.kernel = kernel
        self.full: np.ndarray | None = None
        n = len(x)
        if n * n * 8 <= max_mb * 2**20:
            self.full = kernel_matrix(x, x, kernel)
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()
        self._max_rows = max(2, int(max_mb * 2**20 / max(n * 8, 1)))

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        if i in self._rows:
            self._rows.move_to_end(i)
            return self._rows[i]
        r = kernel_matrix(self.x[i : i + 1], self.x, self.kernel)[0]
        self._rows[i] = r
        if len(self._rows) > self._max_rows:
            self._rows.popitem(last=False)
        return r

    def diag(self) -> np.ndarray:
        if self.full is not None:
            return np.diag(self.full).copy()
        if self.kernel.kind == "rbf":
            return np.ones(len(self.x))
        return np.sum(self.x**2, axis=1)


@dataclass
class BinarySvmModel:
    """Pairwise decision model; dual_coef holds alpha_i * y_i for support rows."""

    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    kernel: KernelParams
    class_neg: int
    class_pos: int
    # training diagnostics, not serialized
    alpha: np.ndarray = field(default=None, repr=False)
    box: np.ndarray = field(default=None, repr=False)
    sign: np.ndarray = field(default=None, repr=False)
    n_iter: int = 0
    converged: bool = True

    def decision_function(self, rows: np.ndarray) -> np.ndarray:
        k = kernel_matrix(np.atleast_2d(rows), self.support_vectors, self.kernel)
        return k @ self.dual_coef + self.bias


def dual_objective(alpha: np.ndarray, sign: np.ndarray, k: np.ndarray) -> float:
    """Value of the dual: sum a - 1/2 a^T (yy^T * K) a."""
    ay = alpha * sign
    return float(alpha.sum() - 0.5 * ay @ k @ ay)


def train_binary(
    x: np.ndarray,
    y: np.ndarray,
    c: float = 1.0,
    weights: dict[int, float] | None = None,
    kernel: KernelParams | None = None,
    tol: float = 1e-3,
    max_passes: int = 200,
    cache_mb: float = 512.0,
) -> BinarySvmModel:
    """SMO on a two-class dataset with per-sample box C * w_class(i).

    Terminates when every KKT violation is within tol, or after
    max_passes * n pair updates without reaching that point.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    classes = np.unique(y)
    if len(classes) != 2:
        raise ValueError(f"need exactly two classes, got {list(classes)}")
    class_neg, class_pos = int(classes[0]), int(classes[1])
    if kernel is None:
        kernel = KernelParams("rbf", 1.0 / x.shape[1])
    if weights is None:
        weights = {}
    w_of = np.array([float(weights.get(int(lbl), 1.0)) for lbl in y])
    if np.any(w_of <= 0):
        raise ValueError("class weights must be positive")

    n = len(y)
    sign = np.where(y == class_pos, 1.0, -1.0)
    box = c * w_of
    cache = KernelCache(x, kernel, cache_mb)
    kdiag = cache.diag()

    alpha = np.zeros(n)
    e0 = -sign.copy()  # bias-free error f0(x_i) - y_i with f0 = 0
    max_iter = max(1000, max_passes * n)
    it = 0
    since_refresh = 0
    converged = False
    excluded = np.zeros(n, dtype=bool)
    progressed_since_clear = True

    def refresh_e0():
        nonlocal e0
        nz = alpha > EPS_ALPHA
        if nz.any():
            e0 = (alpha[nz] * sign[nz]) @ kernel_matrix(x[nz], x, kernel) - sign
        else:
            e0 = -sign.copy()

    while it < max_iter:
        it += 1
        # u_i is the bias that would put point i exactly on its margin;
        # a feasible bias exists iff the two bound sets overlap within tol
        u = -e0  # = y_i - f0_i
        can_up = ((sign > 0) & (alpha < box - EPS_ALPHA)) | ((sign < 0) & (alpha > EPS_ALPHA))
        can_dn = ((sign > 0) & (alpha > EPS_ALPHA)) | ((sign < 0) & (alpha < box - EPS_ALPHA))
        b_lo = u[can_up].max() if can_up.any() else -np.inf
        b_hi = u[can_dn].min() if can_dn.any() else np.inf
        if b_lo - b_hi <= 2.0 * tol:
            converged = True
            break
        b_mid = 0.5 * (b_lo + b_hi)
        viol = np.zeros(n)
        lo_side = can_up & (u - tol > b_mid)
        hi_side = can_dn & (u + tol < b_mid)
        viol[lo_side] = np.maximum(viol[lo_side], (u - tol - b_mid)[lo_side])
        viol[hi_side] = np.maximum(viol[hi_side], (b_mid - u - tol)[hi_side])
        viol[excluded] = 0.0
        i = int(np.argmax(viol))
        if viol[i] <= 0.0:
            if excluded.any():
                if not progressed_since_clear:
                    break  # remaining violators are all un-improvable
                excluded[:] = False
                progressed_since_clear = False
                continue
            converged = True
            break

        k_i = cache.row(i)
        gap = np.abs(e0 - e0[i])
        gap[i] = -1.0
        progressed = False
        # descending |E_i - E_j| (bias cancels); fall through to a workable pair
        for j in np.argsort(-gap):
            j = int(j)
            if j == i:
                continue
            s = sign[i] * sign[j]
            if s < 0:
                lo = max(0.0, alpha[j] - alpha[i])
                hi = min(box[j], box[i] + alpha[j] - alpha[i])
            else:
                lo = max(0.0, alpha[i] + alpha[j] - box[i])
                hi = min(box[j], alpha[i] + alpha[j])
            if lo >= hi - 1e-14:
                continue
            eta = kdiag[i] + kdiag[j] - 2.0 * k_i[j]
            if eta <= 1e-14:
                continue
            aj_new = alpha[j] + sign[j] * (e0[i] - e0[j]) / eta
            aj_new = min(max(aj_new, lo), hi)
            d_j = aj_new - alpha[j]
            if abs(d_j) < 1e-12:
                continue
            k_j = cache.row(j)
            ai_new = alpha[i] - s * d_j
            d_i = ai_new - alpha[i]
            e0 = e0 + sign[i] * d_i * k_i + sign[j] * d_j * k_j
            alpha[i], alpha[j] = ai_new, aj_new
            progressed = True
            break
        if not progressed:
            excluded[i] = True
            continue
        progressed_since_clear = True
        if excluded.any():
            excluded[:] = False
        since_refresh += 1
        if since_refresh >= 500:
            refresh_e0()
            since_refresh = 0

    # exact bias from the converged multipliers: average over free support
    # vectors, else midpoint of the feasible bias interval
    nz = alpha > EPS_ALPHA
    if nz.any():
        f0 = (alpha[nz] * sign[nz]) @ kernel_matrix(x[nz], x, kernel)
    else:
        f0 = np.zeros(n)
    u = sign - f0
    free = (alpha > EPS_ALPHA) & (alpha < box - EPS_ALPHA)
    if free.any():
        b = float(np.mean(u[free]))
    else:
        can_up = ((sign > 0) & (alpha < box - EPS_ALPHA)) | ((sign < 0) & (alpha > EPS_ALPHA))
        can_dn = ((sign > 0) & (alpha > EPS_ALPHA)) | ((sign < 0) & (alpha < box - EPS_ALPHA))
        b_lo = u[can_up].max() if can_up.any() else None
        b_hi = u[can_dn].min() if can_dn.any() else None
        if b_lo is not None and b_hi is not None:
            b = float(0.5 * (b_lo + b_hi))
        elif b_lo is not None:
            b = float(b_lo)
        elif b_hi is not None:
            b = float(b_hi)
        else:
            b = 0.0

    if not converged:
        warnings.warn(f"SMO stopped after {it} updates without full KKT satisfaction")

    sv = alpha > EPS_ALPHA
    return BinarySvmModel(
        support_vectors=x[sv].copy(),
        dual_coef=(alpha * sign)[sv].copy(),
        bias=b,
        kernel=kernel,
        class_neg=class_neg,
        class_pos=class_pos,
        alpha=alpha,
        box=box,
        sign=sign,
        n_iter=it,
        converged=converged,
    )


@dataclass
class MulticlassSvmModel:
    """One-vs-one decomposition: one BinarySvmModel per unordered class pair."""

    class_ids: list[int]
    pairs: dict[tuple[int, int], BinarySvmModel]
    scaler: ScalerParams
    kernel: KernelParams


def weights_from_distribution(class_counts: dict[int, int]) -> dict[int, float]:
    """w_c = N / (K * n_c): balanced inverse-frequency weights."""
    if any(n <= 0 for n in class_counts.values()):
        raise ValueError("every class must have a positive count")
    total = sum(class_counts.values())
    k = len(class_counts)
    return {c: total / (k * n) for c, n in class_counts.items()}


def designed_binary_weights(scheme: str) -> dict[int, float]:
    """The two designed normal:abnormal weightings (classes 0 and 1)."""
    if scheme == "1:2":
        return {0: 1.0, 1: 2.0}
    if scheme == "2:3":
        return {0: 2.0, 1: 3.0}
    raise ValueError(f"unknown weighting scheme {scheme!r}; expected '1:2' or '2:3'")


def train_multiclass(
    x: np.ndarray,
    y: np.ndarray,
    c: float = 1.0,
    weights: dict[int, float] | None = None,
    kernel: KernelParams | None = None,
    tol: float = 1e-3,
    max_passes: int = 200,
    cache_mb: float = 512.0,
    class_ids: list[int] | None = None,
) -> MulticlassSvmModel:
    """One pairwise model per class pair; scaler fit once on all rows.

    class_ids may declare classes beyond those present in y; pairs missing a
    class are skipped with a warning and excluded from voting at predict time.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if class_ids is None:
        class_ids = sorted(int(v) for v in np.unique(y))
    else:
        class_ids = sorted(int(v) for v in class_ids)
    if len(class_ids) < 2:
        raise ValueError(f"need at least 2 classes, got {class_ids}")
    scaler = fit_scaler(x)
    xs = transform(x, scaler)
    if kernel is None:
        kernel = KernelParams("rbf", 1.0 / x.shape[1])
    pairs: dict[tuple[int, int], BinarySvmModel] = {}
    for ai in range(len(class_ids)):
        for bi in range(ai + 1, len(class_ids)):
            a_id, b_id = class_ids[ai], class_ids[bi]
            mask = (y == a_id) | (y == b_id)
            if len(np.unique(y[mask])) < 2:
                warnings.warn(f"pair ({a_id}, {b_id}) is missing a class; skipped")
                continue
            pairs[(a_id, b_id)] = train_binary(
                xs[mask], y[mask], c=c, weights=weights, kernel=kernel,
                tol=tol, max_passes=max_passes, cache_mb=cache_mb,
            )
    return MulticlassSvmModel(class_ids=class_ids, pairs=pairs, scaler=scaler, kernel=kernel)


def decision_summary(model: MulticlassSvmModel, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Votes and summed signed decision values per class, rows pre-scaling."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    xs = transform(rows, model.scaler)
    k = len(model.class_ids)
    col = {c: i for i, c in enumerate(model.class_ids)}
    votes = np.zeros((len(rows), k))
    scores = np.zeros((len(rows), k))
    for (a_id, b_id), pair in model.pairs.items():
        d = pair.decision_function(xs)
        pos = d > 0
        votes[pos, col[b_id]] += 1
        votes[~pos, col[a_id]] += 1
        scores[:, col[b_id]] += d
        scores[:, col[a_id]] -= d
    return votes, scores


def predict(model: MulticlassSvmModel, rows: np.ndarray) -> np.ndarray:
    """Majority vote; ties broken by larger summed decision value, then lower id."""
    votes, scores = decision_summary(model, rows)
    ids = np.array(model.class_ids)
    # lexicographic argmax: votes, then scores, then -id; stable over lowest id
    out = np.empty(len(votes), dtype=np.int64)
    for r in range(len(votes)):
        best = np.flatnonzero(votes[r] == votes[r].max())
        if len(best) > 1:
            sub = best[scores[r][best] == scores[r][best].max()]
            best = sub
        out[r] = ids[best[0]]
    return out


def grid_search_hyperparams(
    x: np.ndarray,
    y: np.ndarray,
    c_grid=(0.1, 1.0, 10.0, 100.0),
    gamma_grid=(1e-3, 1e-2, 1e-1, 1.0),
    val_fraction: float = 0.25,
    seed: int = 0,
    weights: dict[int, float] | None = None,
    tol: float = 1e-3,
) -> tuple[float, float]:
    """Pick (C, gamma) by macro recall on a stratified holdout split."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    rng = np.random.default_rng(seed)
    val_idx = []
    for c_id in np.unique(y):
        members = np.flatnonzero(y == c_id)
        members = members[rng.permutation(len(members))]
        n_val = max(1, int(round(val_fraction * len(members))))
        val_idx.extend(members[:n_val])
    val = np.zeros(len(y), dtype=bool)
    val[val_idx] = True
    best = (-1.0, c_grid[0], gamma_grid[0])
    for c in c_grid:
        for gamma in gamma_grid:
            model = train_multiclass(
                x[~val], y[~val], c=c, weights=weights,
                kernel=KernelParams("rbf", gamma), tol=tol,
            )
            pred = predict(model, x[val])
            recalls = []
            for c_id in np.unique(y[val]):
                m = y[val] == c_id
                recalls.append(float(np.mean(pred[m] == c_id)))
            score = float(np.mean(recalls))
            if score > best[0]:
                best = (score, c, gamma)
    return best[1], best[2]


# ---------------------------------------------------------------------------
# model file (versioned JSON container, documented in docs/model_format.md)

FORMAT_VERSION = "hemo-svm/1"


def save_model(model: MulticlassSvmModel, path) -> None:
    payload = {
        "format": FORMAT_VERSION,
        "kernel": {"kind": model.kernel.kind, "gamma": model.kernel.gamma},
        "scaler": {"mean": model.scaler.mean.tolist(), "std": model.scaler.std.tolist()},
        "class_ids": model.class_ids,
        "pairs": [
            {
                "class_neg": pair.class_neg,
                "class_pos": pair.class_pos,
                "support_vectors": pair.support_vectors.tolist(),
                "dual_coef": pair.dual_coef.tolist(),
                "bias": pair.bias,
            }
            for pair in model.pairs.values()
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_model(path) -> MulticlassSvmModel:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model format {payload.get('format')!r}")
    kernel = KernelParams(payload["kernel"]["kind"], payload["kernel"]["gamma"])
    scaler = ScalerParams(
        mean=np.array(payload["scaler"]["mean"]), std=np.array(payload["scaler"]["std"])
    )
    pairs = {}
    for entry in payload["pairs"]:
        pair = BinarySvmModel(
            support_vectors=np.array(entry["support_vectors"]),
            dual_coef=np.array(entry["dual_coef"]),
            bias=float(entry["bias"]),
            kernel=kernel,
            class_neg=int(entry["class_neg"]),
            class_pos=int(entry["class_pos"]),
        )
        pairs[(pair.class_neg, pair.class_pos)] = pair
    return MulticlassSvmModel(
        class_ids=[int(c) for c in payload["class_ids"]],
        pairs=pairs,
        scaler=scaler,
        kernel=kernel,
    )
