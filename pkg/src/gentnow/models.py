"""Statistics and regression models for the nowcasting study.

Pearson correlation and Welch's t-test are computed from their closed forms
with exact t-distribution p-values (regularized incomplete beta); OLS runs on
numpy's least-squares solver; the random forest is a CART regression ensemble
with variance-reduction splits whose importance score is the sample-weighted
share of splits per feature, normalized to 100%.

``evaluate`` reproduces the study protocol: in-sample OLS per feature set,
out-of-sample random forests over repeated seeded 50/50 splits, and a
predict-zero baseline on the same test sets.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from gentnow.accel import maybe_jit
from gentnow.errors import ComputationError
from gentnow.scoring import percentile_rank
from gentnow.seeds import derive_seed


class ModelError(ComputationError):
    pass


def significance_stars(p):
    if p is None or not np.isfinite(p):
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


def _t_sf_two_sided(t, dof):
    """Two-sided p-value of a t statistic via the regularized incomplete beta."""
    if not np.isfinite(t):
        return 0.0
    if t == 0.0:
        return 1.0
    return float(betainc(dof / 2.0, 0.5, dof / (dof + t * t)))


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    p_value: float
    n: int
    stars: str

    @property
    def missing(self):
        return not np.isfinite(self.r)


def pearson_r(x, y):
    """Sample Pearson correlation with an exact two-sided t-test p-value.

    Constant inputs make r undefined; the result is returned with NaN r/p and
    flagged missing rather than raising.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ModelError("pearson_r needs two equal-length 1-d arrays")
    n = x.size
    if n < 3:
        raise ModelError("pearson_r needs at least 3 observations")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = float(np.sqrt(xd @ xd))
    sy = float(np.sqrt(yd @ yd))
    if sx == 0.0 or sy == 0.0:
        return CorrelationResult(r=float("nan"), p_value=float("nan"), n=n, stars="")
    r = float(xd @ yd) / (sx * sy)
    r = max(-1.0, min(1.0, r))
    if 1.0 - r * r <= 0.0:
        p = 0.0
    else:
        t = r * np.sqrt((n - 2) / (1.0 - r * r))
        p = _t_sf_two_sided(t, n - 2)
    return CorrelationResult(r=r, p_value=p, n=n, stars=significance_stars(p))


def correlation_matrix(X, include=None):
    """Pairwise Pearson r (and p) matrix over the columns of ``X``.

    Returns ``(R, P)``; the diagonal is exactly 1 / 0 and both matrices are
    symmetric. Constant columns yield NaN off-diagonal entries.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ModelError("correlation_matrix needs a 2-d matrix with >= 2 columns")
    cols = range(X.shape[1]) if include is None else include
    cols = list(cols)
    m = len(cols)
    R = np.eye(m)
    P = np.zeros((m, m))
    for a in range(m):
        for b in range(a + 1, m):
            res = pearson_r(X[:, cols[a]], X[:, cols[b]])
            R[a, b] = R[b, a] = res.r
            P[a, b] = P[b, a] = res.p_value
    return R, P


@dataclass(frozen=True)
class TTestResult:
    t: float
    p_value: float
    dof: float
    n_a: int
    n_b: int


def two_sample_t_test(a, b):
    """Welch's unequal-variance two-sample t-test, two-sided."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ModelError("two_sample_t_test needs at least 2 observations per sample")
    na, nb = a.size, b.size
    va = float(a.var(ddof=1))
    vb = float(b.var(ddof=1))
    diff = float(a.mean() - b.mean())
    se2 = va / na + vb / nb
    if se2 == 0.0:
        # both samples constant: equal means is a no-op, unequal is a sure difference
        if diff == 0.0:
            return TTestResult(t=0.0, p_value=1.0, dof=float(na + nb - 2), n_a=na, n_b=nb)
        return TTestResult(t=float(np.sign(diff)) * float("inf"), p_value=0.0,
                           dof=float(na + nb - 2), n_a=na, n_b=nb)
    t = diff / np.sqrt(se2)
    dof = se2 * se2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    return TTestResult(t=float(t), p_value=_t_sf_two_sided(float(t), dof),
                       dof=float(dof), n_a=na, n_b=nb)


# ---------------------------------------------------------------------------
# ordinary least squares

@dataclass
class OLSModel:
    coef: np.ndarray  # intercept first
    rank: int
    n_features: int


def ols_fit(X, y):
    """Least-squares fit with an internal intercept column.

    Rank-deficient designs fall back to the minimum-norm (pseudoinverse)
    solution with a warning.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[0] != y.shape[0]:
        raise ModelError("ols_fit needs a non-empty X aligned with y")
    A = np.column_stack([np.ones(X.shape[0]), X])
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        warnings.warn(
            f"design matrix is rank deficient ({rank}/{A.shape[1]}); "
            "using the pseudoinverse solution",
            stacklevel=2,
        )
    return OLSModel(coef=coef, rank=int(rank), n_features=X.shape[1])


def ols_predict(model, X):
    X = np.asarray(X, dtype=float)
    if X.shape[1] != model.n_features:
        raise ModelError("feature count does not match the fitted model")
    return model.coef[0] + X @ model.coef[1:]


def rmse(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))


def baseline_rmse(y):
    """RMSE of the constant predict-zero model: sqrt(mean(y^2))."""
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ModelError("baseline_rmse needs a non-empty target")
    return float(np.sqrt(np.mean(y * y)))


# ---------------------------------------------------------------------------
# random forest regression (CART, variance-reduction splits)

@maybe_jit
def _build_tree(X, y, sample_idx, feat_perm, mtry, min_leaf, node_feature,
                node_thresh, node_left, node_right, node_value, node_n):
    m = sample_idx.shape[0]
    p = X.shape[1]
    idx = sample_idx.copy()
    stack_node = np.empty(2 * m + 2, dtype=np.int64)
    stack_start = np.empty(2 * m + 2, dtype=np.int64)
    stack_end = np.empty(2 * m + 2, dtype=np.int64)
    vals = np.empty(m)
    n_nodes = 1
    internal_count = 0
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = m
    top = 1
    while top > 0:
        top -= 1
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        nn = end - start
        ysum = 0.0
        ysq = 0.0
        for t in range(start, end):
            yv = y[idx[t]]
            ysum += yv
            ysq += yv * yv
        node_value[node] = ysum / nn
        node_n[node] = nn
        node_feature[node] = -1
        impurity = ysq - ysum * ysum / nn
        if nn < 2 * min_leaf or impurity <= 1e-12:
            continue

        best_gain = -1.0
        best_feat = -1
        best_thresh = 0.0
        perm_row = internal_count % feat_perm.shape[0]
        tried = 0
        for pi in range(p):
            if tried >= mtry:
                break
            f = feat_perm[perm_row, pi]
            for t in range(nn):
                vals[t] = X[idx[start + t], f]
            order = np.argsort(vals[:nn], kind="mergesort")
            if vals[order[0]] == vals[order[nn - 1]]:
                continue  # constant here; does not count toward mtry
            tried += 1
            suml = 0.0
            for t in range(nn - 1):
                suml += y[idx[start + order[t]]]
                lo = vals[order[t]]
                hi = vals[order[t + 1]]
                if lo == hi:
                    continue
                nl = t + 1
                nr = nn - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                sumr = ysum - suml
                gain = suml * suml / nl + sumr * sumr / nr
                if gain > best_gain:
                    thresh = lo + (hi - lo) / 2.0
                    if thresh == hi:
                        thresh = lo
                    best_gain = gain
                    best_feat = f
                    best_thresh = thresh
        if best_feat < 0:
            continue  # nothing splittable among the sampled features

        internal_count += 1
        nl = 0
        for t in range(start, end):
            if X[idx[t], best_feat] <= best_thresh:
                nl += 1
        left_buf = np.empty(nl, dtype=np.int64)
        right_buf = np.empty(nn - nl, dtype=np.int64)
        li = 0
        ri = 0
        for t in range(start, end):
            if X[idx[t], best_feat] <= best_thresh:
                left_buf[li] = idx[t]
                li += 1
            else:
                right_buf[ri] = idx[t]
                ri += 1
        for t in range(nl):
            idx[start + t] = left_buf[t]
        for t in range(nn - nl):
            idx[start + nl + t] = right_buf[t]

        left = n_nodes
        right = n_nodes + 1
        n_nodes += 2
        node_feature[node] = best_feat
        node_thresh[node] = best_thresh
        node_left[node] = left
        node_right[node] = right
        stack_node[top] = left
        stack_start[top] = start
        stack_end[top] = start + nl
        top += 1
        stack_node[top] = right
        stack_start[top] = start + nl
        stack_end[top] = end
        top += 1
    return n_nodes


@maybe_jit
def _predict_tree(X, node_feature, node_thresh, node_left, node_right,
                  node_value, out):
    for r in range(X.shape[0]):
        node = 0
        while node_feature[node] >= 0:
            if X[r, node_feature[node]] <= node_thresh[node]:
                node = node_left[node]
            else:
                node = node_right[node]
        out[r] += node_value[node]


@dataclass
class RandomForest:
    trees: list
    n_features: int
    n_trees: int
    max_features: int
    min_samples_leaf: int
    bootstrap: bool
    seed: int


def rf_fit(X, y, n_trees=100, max_features=None, min_samples_leaf=1,
           bootstrap=True, seed=0):
    """Bootstrap-aggregated CART regression trees; deterministic given seed.

    ``max_features`` defaults to the regression convention floor(p/3) (at
    least 1); trees grow to purity with ``min_samples_leaf`` = 1.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[0] != y.shape[0]:
        raise ModelError("rf_fit needs >= 2 aligned rows")
    n, p = X.shape
    mtry = max_features if max_features is not None else max(1, p // 3)
    mtry = min(max(1, int(mtry)), p)

    trees = []
    max_nodes = 2 * n + 1
    for t in range(n_trees):
        rng = np.random.default_rng(derive_seed(seed, t))
        if bootstrap:
            sample_idx = rng.integers(0, n, size=n).astype(np.int64)
        else:
            sample_idx = np.arange(n, dtype=np.int64)
        feat_perm = np.argsort(rng.random((n, p)), axis=1).astype(np.int64)
        node_feature = np.empty(max_nodes, dtype=np.int64)
        node_thresh = np.empty(max_nodes)
        node_left = np.zeros(max_nodes, dtype=np.int64)
        node_right = np.zeros(max_nodes, dtype=np.int64)
        node_value = np.empty(max_nodes)
        node_n = np.empty(max_nodes, dtype=np.int64)
        n_nodes = _build_tree(X, y, sample_idx, feat_perm, mtry,
                              min_samples_leaf, node_feature, node_thresh,
                              node_left, node_right, node_value, node_n)
        trees.append((
            node_feature[:n_nodes].copy(), node_thresh[:n_nodes].copy(),
            node_left[:n_nodes].copy(), node_right[:n_nodes].copy(),
            node_value[:n_nodes].copy(), node_n[:n_nodes].copy(),
        ))
    return RandomForest(trees=trees, n_features=p, n_trees=n_trees,
                        max_features=mtry, min_samples_leaf=min_samples_leaf,
                        bootstrap=bootstrap, seed=seed)


def rf_predict(forest, X):
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise ModelError("feature count does not match the fitted forest")
    out = np.zeros(X.shape[0])
    for node_feature, node_thresh, node_left, node_right, node_value, _ in forest.trees:
        _predict_tree(X, node_feature, node_thresh, node_left, node_right,
                      node_value, out)
    return out / forest.n_trees


def mdi_importance(forest):
    """Per-feature share of splits weighted by samples split, as percentages."""
    weights = np.zeros(forest.n_features)
    total = 0.0
    for node_feature, _, _, _, _, node_n in forest.trees:
        for i in range(node_feature.shape[0]):
            f = node_feature[i]
            if f >= 0:
                weights[f] += node_n[i]
                total += node_n[i]
    if total == 0.0:
        return weights  # single-leaf forest: nothing was ever split
    return 100.0 * weights / total


# ---------------------------------------------------------------------------
# evaluation protocol

@dataclass(frozen=True)
class EvaluationProtocol:
    n_simulations: int = 100
    test_fraction: float = 0.5
    master_seed: int = 0
    rf_trees: int = 100


@dataclass
class EvaluationReport:
    selectors: list
    in_sample_rmse: dict
    baseline_in_sample: float
    oos_mean_rmse: dict
    oos_sd_rmse: dict
    baseline_oos_mean: float
    baseline_oos_sd: float
    mdi: dict = field(default_factory=dict)  # feature name -> mean MDI %
    protocol: EvaluationProtocol = None
    n_rows: int = 0


def evaluate(matrices, y, protocol, feature_names=None, mdi_selector="all"):
    """Run the in-/out-of-sample comparison across feature sets.

    ``matrices`` maps selector name -> design matrix; all share row order and
    the target ``y``. Per-simulation split and forest seeds derive from the
    protocol's master seed, so the whole report is a pure function of its
    inputs.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    selectors = list(matrices)
    for sel in selectors:
        if np.asarray(matrices[sel]).shape[0] != n:
            raise ModelError(f"selector {sel!r} is not aligned with the target")
    n_test = int(round(n * protocol.test_fraction))
    if n_test < 2 or n - n_test < 2:
        raise ModelError(f"n={n} is too small for a {protocol.test_fraction:.0%} test split")

    in_sample = {}
    for sel in selectors:
        model = ols_fit(matrices[sel], y)
        in_sample[sel] = rmse(y, ols_predict(model, matrices[sel]))
    baseline_in = baseline_rmse(y)

    oos = {sel: np.empty(protocol.n_simulations) for sel in selectors}
    base_oos = np.empty(protocol.n_simulations)
    mdi_acc = None
    for i in range(protocol.n_simulations):
        split_rng = np.random.default_rng(derive_seed(protocol.master_seed, i, 0))
        perm = split_rng.permutation(n)
        test_idx, train_idx = perm[:n_test], perm[n_test:]
        base_oos[i] = baseline_rmse(y[test_idx])
        for s_i, sel in enumerate(selectors):
            X = np.asarray(matrices[sel], dtype=float)
            forest = rf_fit(
                X[train_idx], y[train_idx], n_trees=protocol.rf_trees,
                seed=derive_seed(protocol.master_seed, i, 1 + s_i),
            )
            oos[sel][i] = rmse(y[test_idx], rf_predict(forest, X[test_idx]))
            if sel == mdi_selector:
                imp = mdi_importance(forest)
                mdi_acc = imp if mdi_acc is None else mdi_acc + imp

    mdi = {}
    if mdi_acc is not None:
        mdi_mean = mdi_acc / protocol.n_simulations
        names = feature_names or [f"f{j}" for j in range(mdi_mean.size)]
        mdi = dict(zip(names, mdi_mean.tolist()))

    return EvaluationReport(
        selectors=selectors,
        in_sample_rmse=in_sample,
        baseline_in_sample=baseline_in,
        oos_mean_rmse={s: float(v.mean()) for s, v in oos.items()},
        oos_sd_rmse={s: float(v.std(ddof=1)) for s, v in oos.items()},
        baseline_oos_mean=float(base_oos.mean()),
        baseline_oos_sd=float(base_oos.std(ddof=1)),
        mdi=mdi,
        protocol=protocol,
        n_rows=n,
    )


@dataclass(frozen=True)
class QuartileContrast:
    upper_mean: float
    lower_mean: float
    t: float
    p_value: float
    n_upper: int
    n_lower: int


def quartile_contrast(values_by_neighborhood, scores):
    """Compare per-review values between top- and bottom-quartile neighborhoods.

    Quartiles are Hazen percentile ranks of the neighborhood scores (upper:
    rank >= 75, lower: rank <= 25); the pooled per-review values of the two
    groups are compared with Welch's t-test.
    """
    ids = sorted(set(values_by_neighborhood) & set(scores))
    if len(ids) < 4:
        raise ModelError("quartile_contrast needs at least 4 neighborhoods")
    pcts = percentile_rank([scores[i] for i in ids])
    upper, lower = [], []
    for nb, pct in zip(ids, pcts):
        vals = list(values_by_neighborhood[nb])
        if pct >= 75.0:
            upper.extend(vals)
        elif pct <= 25.0:
            lower.extend(vals)
    if not upper or not lower:
        raise ModelError("a score quartile has no review values")
    res = two_sample_t_test(upper, lower)
    return QuartileContrast(
        upper_mean=float(np.mean(upper)), lower_mean=float(np.mean(lower)),
        t=res.t, p_value=res.p_value, n_upper=len(upper), n_lower=len(lower),
    )
