"""Regression learners over a numeric design matrix.

Six kinds share one train/predict contract: ordinary least squares,
elastic net, k-nearest-neighbors, a variance-reduction regression tree,
a random forest, and gradient-boosted trees. All randomness flows from
an explicit seed; forests and boosting draw per-tree streams keyed by
tree index so refits are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LEARNER_KINDS = (
    "linear",
    "elastic_net",
    "knn",
    "tree",
    "random_forest",
    "gradient_boosting",
)

DEFAULT_MIN_LEAF = 5


class LearnerError(ValueError):
    pass


def default_grid(kind: str, n_features: int | None = None) -> list[dict]:
    """Small hyperparameter grids searched by cross-validation.

    The forest grid needs the design-matrix width to center its
    features-per-split candidates on round(sqrt(p)).
    """
    if kind == "linear":
        return [{}]
    if kind == "elastic_net":
        return [{"alpha": a, "l1_ratio": 0.5} for a in (0.001, 0.01, 0.1)]
    if kind == "knn":
        return [{"k": k} for k in (5, 7, 9)]
    if kind == "tree":
        return [{"max_depth": d} for d in (4, 8, 12)]
    if kind == "random_forest":
        if n_features is None:
            raise LearnerError("random_forest grid requires n_features")
        center = int(round(np.sqrt(n_features)))
        values = sorted({min(max(m, 1), n_features) for m in (center - 2, center, center + 2)})
        return [{"mtry": m, "n_trees": 100} for m in values]
    if kind == "gradient_boosting":
        return [
            {"n_rounds": r, "max_depth": d, "learning_rate": lr}
            for r in (50, 100, 150)
            for d in (2, 3, 4)
            for lr in (0.05, 0.1, 0.3)
        ]
    raise LearnerError(f"unknown learner kind: {kind!r}")


# ---------------------------------------------------------------- linear


class _Linear:
    def __init__(self, X: np.ndarray, y: np.ndarray):
        A = np.hstack([np.ones((X.shape[0], 1)), X])
        coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
        self.coef = coef
        self.rank_deficient = rank < A.shape[1]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.coef[0] + X @ self.coef[1:]


class _ElasticNet:
    """Coordinate descent on centered data; intercept is unpenalized."""

    def __init__(self, X, y, alpha=0.01, l1_ratio=0.5, max_iter=10_000, tol=1e-10):
        if alpha < 0 or not 0 <= l1_ratio <= 1:
            raise LearnerError("elastic_net needs alpha >= 0 and l1_ratio in [0, 1]")
        n, p = X.shape
        self.x_mean = X.mean(axis=0)
        self.y_mean = float(y.mean())
        Xc = X - self.x_mean
        yc = y - self.y_mean
        col_sq = (Xc**2).sum(axis=0) / n
        w = np.zeros(p)
        resid = yc.copy()
        l1 = alpha * l1_ratio
        l2 = alpha * (1 - l1_ratio)
        for _ in range(max_iter):
            max_delta = 0.0
            for j in range(p):
                if col_sq[j] == 0.0:
                    continue
                rho = (Xc[:, j] @ resid) / n + col_sq[j] * w[j]
                new = np.sign(rho) * max(abs(rho) - l1, 0.0) / (col_sq[j] + l2)
                delta = new - w[j]
                if delta != 0.0:
                    resid -= delta * Xc[:, j]
                    w[j] = new
                    max_delta = max(max_delta, abs(delta))
            if max_delta <= tol * max(1.0, float(np.max(np.abs(w)))):
                break
        self.coef = w

    def predict(self, X):
        return self.y_mean + (X - self.x_mean) @ self.coef


# ------------------------------------------------------------------ knn


class _Knn:
    def __init__(self, X, y, k=5):
        if not 1 <= k <= X.shape[0]:
            raise LearnerError(f"knn needs 1 <= k <= n_rows, got k={k}")
        self.X = X.copy()
        self.y = y.copy()
        self.k = k

    def predict(self, X):
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            d = np.sum((self.X - row) ** 2, axis=1)
            nearest = np.argsort(d, kind="stable")[: self.k]
            out[i] = self.y[nearest].mean()
        return out


# ----------------------------------------------------------------- tree


@dataclass
class TreeNode:
    value: float
    n: int
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


def _best_split(X, y, features, min_leaf):
    """Scan candidate features with prefix sums; returns (sse, feature, threshold)."""
    n = len(y)
    best = None
    for j in features:
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ys = y[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        sizes = np.arange(1, n)
        valid = (xs[1:] > xs[:-1]) & (sizes >= min_leaf) & (n - sizes >= min_leaf)
        if not valid.any():
            continue
        nl = sizes[valid]
        sl, sql = csum[nl - 1], csq[nl - 1]
        nr = n - nl
        sr, sqr = csum[-1] - sl, csq[-1] - sql
        sse = (sql - sl * sl / nl) + (sqr - sr * sr / nr)
        k = int(np.argmin(sse))
        if best is None or sse[k] < best[0] - 1e-12:
            cut = nl[k]
            best = (float(sse[k]), j, float((xs[cut - 1] + xs[cut]) / 2.0))
    return best


class _Tree:
    def __init__(self, X, y, max_depth=None, min_leaf=DEFAULT_MIN_LEAF, rng=None, mtry=None):
        if min_leaf < 1:
            raise LearnerError("min_leaf must be >= 1")
        self.max_depth = max_depth if max_depth is not None else 64
        self.min_leaf = min_leaf
        self.mtry = mtry
        self.n_features = X.shape[1]
        self.root = self._build(X, y, 0, rng)

    def _build(self, X, y, depth, rng):
        node = TreeNode(value=float(y.mean()), n=len(y))
        if depth >= self.max_depth or len(y) < 2 * self.min_leaf or np.all(y == y[0]):
            return node
        if self.mtry is not None and rng is not None and self.mtry < self.n_features:
            features = np.sort(rng.choice(self.n_features, size=self.mtry, replace=False))
        else:
            features = np.arange(self.n_features)
        split = _best_split(X, y, features, self.min_leaf)
        if split is None:
            return node
        parent_sse = float(np.sum((y - y.mean()) ** 2))
        if split[0] >= parent_sse - 1e-12:
            return node
        _, j, thr = split
        mask = X[:, j] <= thr
        node.feature, node.threshold = j, thr
        node.left = self._build(X[mask], y[mask], depth + 1, rng)
        node.right = self._build(X[~mask], y[~mask], depth + 1, rng)
        return node

    def predict(self, X):
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            node = self.root
            while not node.is_leaf:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.value
        return out

    def depth(self) -> int:
        def walk(node):
            if node.is_leaf:
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)

    def leaf_count(self) -> int:
        def walk(node):
            if node.is_leaf:
                return 1
            return walk(node.left) + walk(node.right)

        return walk(self.root)


# --------------------------------------------------------------- forest


class _Forest:
    def __init__(self, X, y, n_trees=100, mtry=None, min_leaf=DEFAULT_MIN_LEAF, seed=0):
        p = X.shape[1]
        if mtry is None:
            mtry = max(1, int(round(np.sqrt(p))))
        if not 1 <= mtry <= p:
            raise LearnerError(f"mtry must be in [1, {p}], got {mtry}")
        if n_trees < 1:
            raise LearnerError("n_trees must be >= 1")
        self.mtry = mtry
        self.trees: list[_Tree] = []
        self.bootstrap_indices: list[np.ndarray] = []
        n = X.shape[0]
        for t in range(n_trees):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(t,)))
            idx = rng.integers(0, n, size=n)
            self.bootstrap_indices.append(idx)
            self.trees.append(_Tree(X[idx], y[idx], min_leaf=min_leaf, rng=rng, mtry=mtry))

    def predict_per_tree(self, X):
        return np.vstack([t.predict(X) for t in self.trees])

    def predict(self, X):
        return self.predict_per_tree(X).mean(axis=0)


# ------------------------------------------------------------- boosting


class _Boosted:
    """Squared-loss stagewise trees from a constant-mean start."""

    def __init__(
        self,
        X,
        y,
        n_rounds=100,
        max_depth=3,
        learning_rate=0.1,
        min_leaf=DEFAULT_MIN_LEAF,
        seed=0,
    ):
        if n_rounds < 1 or learning_rate <= 0:
            raise LearnerError("gradient_boosting needs n_rounds >= 1 and learning_rate > 0")
        self.init = float(y.mean())
        self.learning_rate = learning_rate
        self.trees: list[_Tree] = []
        self.train_loss: list[float] = []
        current = np.full_like(y, self.init, dtype=float)
        for _ in range(n_rounds):
            resid = y - current
            tree = _Tree(X, resid, max_depth=max_depth, min_leaf=min_leaf)
            current = current + learning_rate * tree.predict(X)
            self.trees.append(tree)
            self.train_loss.append(float(np.mean((y - current) ** 2)))

    def predict(self, X):
        out = np.full(X.shape[0], self.init)
        for tree in self.trees:
            out = out + self.learning_rate * tree.predict(X)
        return out


# -------------------------------------------------------------- wrapper


@dataclass
class Learner:
    """A fitted model plus the provenance needed to reproduce it."""

    kind: str
    params: dict
    seed: int
    n_features: int
    model: object
    flags: tuple[str, ...] = field(default=())

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise LearnerError(
                f"design matrix has {X.shape[1] if X.ndim == 2 else '?'} columns, "
                f"model expects {self.n_features}"
            )
        if not np.all(np.isfinite(X)):
            raise LearnerError("design matrix contains non-finite values")
        out = np.asarray(self.model.predict(X), dtype=float)
        if not np.all(np.isfinite(out)):
            raise LearnerError("model produced non-finite predictions")
        return out


def train(kind: str, params: dict, X: np.ndarray, y: np.ndarray, seed: int = 0) -> Learner:
    """Fit one learner; any unknown hyperparameter name is an error."""
    if kind not in LEARNER_KINDS:
        raise LearnerError(f"unknown learner kind: {kind!r}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise LearnerError("X must be (n, p) and y must be (n,)")
    if X.shape[0] < 2:
        raise LearnerError("need at least 2 training rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise LearnerError("training data contains non-finite values")
    if np.all(y == y[0]):
        raise LearnerError("outcome has zero variance on training rows")

    params = dict(params)
    flags: tuple[str, ...] = ()
    if kind == "linear":
        _expect(params, set())
        model = _Linear(X, y)
        if model.rank_deficient:
            flags = ("rank_deficient_minimum_norm",)
    elif kind == "elastic_net":
        _expect(params, {"alpha", "l1_ratio", "max_iter", "tol"})
        model = _ElasticNet(X, y, **params)
    elif kind == "knn":
        _expect(params, {"k"})
        model = _Knn(X, y, **params)
    elif kind == "tree":
        _expect(params, {"max_depth", "min_leaf"})
        model = _Tree(X, y, **params)
    elif kind == "random_forest":
        _expect(params, {"n_trees", "mtry", "min_leaf"})
        model = _Forest(X, y, seed=seed, **params)
    else:
        _expect(params, {"n_rounds", "max_depth", "learning_rate", "min_leaf"})
        model = _Boosted(X, y, seed=seed, **params)
    return Learner(
        kind=kind,
        params=params,
        seed=seed,
        n_features=X.shape[1],
        model=model,
        flags=flags,
    )


def _expect(params: dict, allowed: set[str]) -> None:
    unknown = set(params) - allowed
    if unknown:
        raise LearnerError(f"unknown hyperparameters: {sorted(unknown)}")
