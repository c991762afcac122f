"""Classifiers, cross-validation, metrics, and the stability report.

Samples are the token matrices emitted by the fusion stage; each is
mean-pooled over its rows into a single vector before classification.
Three from-scratch models are provided (softmax regression, k nearest
neighbours, diagonal Gaussian naive Bayes) together with a stratified
k-fold harness and the balanced-score stability summary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import (
    ClassTooSmall,
    DegenerateLabels,
    EmptyTrain,
    InvalidConfig,
    LengthMismatch,
)
from .fusion import Representation

__all__ = [
    "SoftmaxParams",
    "SoftmaxModel",
    "KnnModel",
    "GnbModel",
    "FoldResult",
    "StabilityReport",
    "pool_samples",
    "softmax_loss_and_grad",
    "softmax_train",
    "softmax_predict",
    "knn_fit",
    "knn_predict",
    "gnb_fit",
    "gnb_predict",
    "stratified_kfold",
    "accuracy",
    "macro_f1",
    "macro_auc",
    "evaluate",
    "run_cv",
    "stability_report",
    "balanced_score",
]


def pool_samples(rep: Representation) -> tuple[np.ndarray, np.ndarray]:
    """Mean-pool every sample's token rows into one vector.

    Returns
    -------
    (X, y) : (n, D) pooled vectors and integer labels.
    """
    x = np.stack([s.matrix.mean(axis=0) for s in rep.samples])
    y = rep.labels()
    return x, y


# ---------------------------------------------------------------------------
# softmax regression
# ---------------------------------------------------------------------------


@dataclass
class SoftmaxParams:
    """Minibatch gradient-descent settings.

    ``max_steps`` caps the total number of parameter updates so very large
    datasets do not multiply the epoch budget; small datasets are
    unaffected.
    """

    epochs: int = 300
    eta: float = 0.05
    lam: float = 1e-4
    batch_size: int = 32
    max_steps: int = 60_000

    def validate(self) -> None:
        if self.epochs < 1 or self.batch_size < 1 or self.max_steps < 1:
            raise InvalidConfig("epochs, batch_size and max_steps must be >= 1")
        if self.eta <= 0:
            raise InvalidConfig(f"eta must be positive, got {self.eta}")
        if self.lam < 0:
            raise InvalidConfig(f"lam must be non-negative, got {self.lam}")


@dataclass
class SoftmaxModel:
    weights: np.ndarray  # (C, D)
    bias: np.ndarray  # (C,)
    n_classes: int


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_loss_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    lam: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Regularized cross-entropy and its exact gradient (full batch).

    Loss is the mean cross-entropy plus ``lam * (||W||^2 + ||b||^2)``.
    """
    n = len(x)
    probs = _softmax(x @ weights.T + bias)
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), y] = 1.0
    ce = -np.mean(np.log(probs[np.arange(n), y] + 1e-300))
    loss = ce + lam * (float((weights**2).sum()) + float((bias**2).sum()))
    delta = (probs - onehot) / n
    grad_w = delta.T @ x + 2.0 * lam * weights
    grad_b = delta.sum(axis=0) + 2.0 * lam * bias
    return float(loss), grad_w, grad_b


def softmax_train(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    params: SoftmaxParams | None = None,
    seed: int = 0,
) -> SoftmaxModel:
    """Train softmax regression by seeded minibatch gradient descent.

    Raises
    ------
    EmptyTrain
        If the training set is empty.
    DegenerateLabels
        If the training labels hold fewer than 2 classes.
    """
    p = params or SoftmaxParams()
    p.validate()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if len(x) == 0:
        raise EmptyTrain("no training samples")
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} samples but {len(y)} labels")
    if len(np.unique(y)) < 2:
        raise DegenerateLabels("training labels hold fewer than 2 classes")
    n, d = x.shape
    weights = np.zeros((n_classes, d))
    bias = np.zeros(n_classes)
    rng = np.random.default_rng(seed)
    steps = 0
    for _ in range(p.epochs):
        if steps >= p.max_steps:
            break
        order = rng.permutation(n)
        for lo in range(0, n, p.batch_size):
            if steps >= p.max_steps:
                break
            idx = order[lo : lo + p.batch_size]
            xb, yb = x[idx], y[idx]
            probs = _softmax(xb @ weights.T + bias)
            probs[np.arange(len(idx)), yb] -= 1.0
            probs /= len(idx)
            weights -= p.eta * (probs.T @ xb + 2.0 * p.lam * weights)
            bias -= p.eta * (probs.sum(axis=0) + 2.0 * p.lam * bias)
            steps += 1
    return SoftmaxModel(weights=weights, bias=bias, n_classes=n_classes)


def softmax_predict(model: SoftmaxModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Class probabilities and argmax labels (ties go to the lowest index)."""
    x = np.asarray(x, dtype=float)
    probs = _softmax(x @ model.weights.T + model.bias)
    return probs, probs.argmax(axis=1)


# ---------------------------------------------------------------------------
# k nearest neighbours
# ---------------------------------------------------------------------------


@dataclass
class KnnModel:
    x: np.ndarray
    y: np.ndarray
    k: int
    n_classes: int


def knn_fit(x: np.ndarray, y: np.ndarray, n_classes: int, k: int = 5) -> KnnModel:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if len(x) == 0:
        raise EmptyTrain("no training samples")
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} samples but {len(y)} labels")
    if k < 1:
        raise InvalidConfig(f"k must be >= 1, got {k}")
    return KnnModel(x=x, y=y, k=min(k, len(x)), n_classes=n_classes)


def knn_predict(
    model: KnnModel, queries: np.ndarray, chunk: int = 512
) -> tuple[np.ndarray, np.ndarray]:
    """Majority-vote labels and inverse-distance class scores.

    Queries are processed in chunks to bound memory.  Vote ties resolve to
    the lowest class index; scores sum ``1/(d + 1e-12)`` over the k nearest
    neighbours of each class and are normalized to sum to one.
    """
    q = np.asarray(queries, dtype=float)
    labels = np.empty(len(q), dtype=int)
    scores = np.zeros((len(q), model.n_classes))
    train_sq = (model.x**2).sum(axis=1)
    for lo in range(0, len(q), chunk):
        block = q[lo : lo + chunk]
        d2 = (block**2).sum(axis=1)[:, None] + train_sq[None, :] - 2.0 * block @ model.x.T
        np.maximum(d2, 0.0, out=d2)
        near = np.argpartition(d2, model.k - 1, axis=1)[:, : model.k]
        rows = np.arange(len(block))[:, None]
        neigh_labels = model.y[near]
        neigh_dist = np.sqrt(d2[rows, near])
        for c in range(model.n_classes):
            mask = neigh_labels == c
            scores[lo : lo + len(block), c] = (mask / (neigh_dist + 1e-12)).sum(axis=1)
        votes = np.zeros((len(block), model.n_classes), dtype=int)
        for c in range(model.n_classes):
            votes[:, c] = (neigh_labels == c).sum(axis=1)
        labels[lo : lo + len(block)] = votes.argmax(axis=1)
    totals = scores.sum(axis=1, keepdims=True)
    totals[totals == 0] = 1.0
    scores = scores / totals
    return scores, labels


# ---------------------------------------------------------------------------
# Gaussian naive Bayes
# ---------------------------------------------------------------------------


@dataclass
class GnbModel:
    means: np.ndarray  # (C, D)
    variances: np.ndarray  # (C, D)
    log_priors: np.ndarray  # (C,)
    n_classes: int
    present: np.ndarray  # (C,) bool


def gnb_fit(x: np.ndarray, y: np.ndarray, n_classes: int) -> GnbModel:
    """Diagonal Gaussian naive Bayes with a variance floor of 1e-9."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if len(x) == 0:
        raise EmptyTrain("no training samples")
    d = x.shape[1]
    means = np.zeros((n_classes, d))
    variances = np.ones((n_classes, d))
    log_priors = np.full(n_classes, -np.inf)
    present = np.zeros(n_classes, dtype=bool)
    for c in range(n_classes):
        grp = x[y == c]
        if len(grp) == 0:
            continue
        present[c] = True
        means[c] = grp.mean(axis=0)
        variances[c] = np.maximum(grp.var(axis=0), 1e-9)
        log_priors[c] = math.log(len(grp) / len(x))
    return GnbModel(
        means=means, variances=variances, log_priors=log_priors,
        n_classes=n_classes, present=present,
    )


def gnb_predict(model: GnbModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior probabilities and argmax labels."""
    x = np.asarray(x, dtype=float)
    log_joint = np.full((len(x), model.n_classes), -np.inf)
    for c in range(model.n_classes):
        if not model.present[c]:
            continue
        ll = -0.5 * (
            ((x - model.means[c]) ** 2) / model.variances[c]
            + np.log(2 * np.pi * model.variances[c])
        ).sum(axis=1)
        log_joint[:, c] = model.log_priors[c] + ll
    shifted = log_joint - log_joint.max(axis=1, keepdims=True)
    probs = np.exp(shifted)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs, log_joint.argmax(axis=1)


# ---------------------------------------------------------------------------
# folds and metrics
# ---------------------------------------------------------------------------


def stratified_kfold(
    labels: np.ndarray, n_splits: int = 5, seed: int = 0
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded stratified folds; per-class test counts differ by at most 1.

    Raises
    ------
    ClassTooSmall
        If any class has fewer members than ``n_splits``.
    """
    labels = np.asarray(labels)
    if n_splits < 2:
        raise InvalidConfig(f"n_splits must be >= 2, got {n_splits}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=int)
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        if len(idx) < n_splits:
            raise ClassTooSmall(
                f"class {lab} has {len(idx)} members for {n_splits} folds"
            )
        idx = rng.permutation(idx)
        fold_of[idx] = np.arange(len(idx)) % n_splits
    folds = []
    for f in range(n_splits):
        test = np.flatnonzero(fold_of == f)
        train = np.flatnonzero(fold_of != f)
        folds.append((train, test))
    return folds


def accuracy(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if len(y_true) != len(y_pred):
        raise LengthMismatch("y_true and y_pred differ in length")
    if len(y_true) == 0:
        raise InvalidConfig("no samples to score")
    return float(np.mean(y_true == y_pred))


def per_class_f1(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> np.ndarray:
    """F1 of each class; classes with no support and no predictions score 0."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    f1 = np.zeros(n_classes)
    for c in range(n_classes):
        tp = int(np.sum((y_pred == c) & (y_true == c)))
        fp = int(np.sum((y_pred == c) & (y_true != c)))
        fn = int(np.sum((y_pred != c) & (y_true == c)))
        denom = 2 * tp + fp + fn
        f1[c] = (2 * tp / denom) if denom > 0 else 0.0
    return f1


def macro_f1(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> float:
    """Unweighted mean of per-class F1 over all ``n_classes`` classes."""
    return float(per_class_f1(y_true, y_pred, n_classes).mean())


def _binary_auc(pos_scores: np.ndarray, neg_scores: np.ndarray) -> float:
    """Rank-statistic AUC with mid-ranks for ties."""
    scores = np.concatenate([pos_scores, neg_scores])
    ranks = rankdata(scores)
    n_pos = len(pos_scores)
    n_neg = len(neg_scores)
    r_pos = ranks[:n_pos].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def macro_auc(y_true: np.ndarray, scores: np.ndarray) -> float:
    """Unweighted mean of one-vs-rest AUCs over classes present in y_true.

    Classes with no positives or no negatives are skipped.
    """
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2 or len(scores) != len(y_true):
        raise LengthMismatch("scores must be (n, n_classes) aligned with y_true")
    aucs = []
    for c in range(scores.shape[1]):
        pos = scores[y_true == c, c]
        neg = scores[y_true != c, c]
        if len(pos) == 0 or len(neg) == 0:
            continue
        aucs.append(_binary_auc(pos, neg))
    if not aucs:
        raise DegenerateLabels("no class has both positives and negatives")
    return float(np.mean(aucs))


@dataclass
class FoldResult:
    model: str
    method: str
    fold: int
    acc: float
    f1: float
    auc: float


def evaluate(
    y_true: np.ndarray, y_pred: np.ndarray, scores: np.ndarray, n_classes: int
) -> tuple[float, float, float]:
    """Accuracy, macro-F1 and macro-AUC of one fold."""
    return (
        accuracy(y_true, y_pred),
        macro_f1(y_true, y_pred, n_classes),
        macro_auc(y_true, scores),
    )


def _standardize_feature_cols(
    train: np.ndarray, test: np.ndarray, n_feature_cols: int
) -> tuple[np.ndarray, np.ndarray]:
    """Zero-mean unit-variance scaling of trailing columns, fit on train rows."""
    if n_feature_cols == 0:
        return train, test
    cols = slice(train.shape[-1] - n_feature_cols, train.shape[-1])
    flat = train[..., cols].reshape(-1, n_feature_cols)
    mu = flat.mean(axis=0)
    sd = flat.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    train = train.copy()
    test = test.copy()
    train[..., cols] = (train[..., cols] - mu) / sd
    test[..., cols] = (test[..., cols] - mu) / sd
    return train, test


def run_cv(
    rep: Representation,
    method_name: str,
    n_splits: int = 5,
    seed: int = 0,
    n_classes: int | None = None,
    softmax_params: SoftmaxParams | None = None,
    knn_k: int = 5,
    models: tuple[str, ...] = ("softmax", "knn", "gnb"),
) -> list[FoldResult]:
    """Stratified cross-validation of all models over one representation.

    Feature columns (``rep.n_feature_cols``) are standardized inside each
    fold using training rows only.  Model training seeds derive from the
    root seed plus the fold index, so folds are independent of execution
    order.
    """
    tokens = np.stack([s.matrix for s in rep.samples])  # (n, M, D)
    y = rep.labels()
    if n_classes is None:
        n_classes = int(y.max()) + 1
    folds = stratified_kfold(y, n_splits=n_splits, seed=seed)
    results: list[FoldResult] = []
    for fold_idx, (train_idx, test_idx) in enumerate(folds):
        tr, te = _standardize_feature_cols(
            tokens[train_idx], tokens[test_idx], rep.n_feature_cols
        )
        x_train = tr.mean(axis=1)
        x_test = te.mean(axis=1)
        y_train, y_test = y[train_idx], y[test_idx]
        fold_seed = seed + fold_idx
        for model_name in models:
            if model_name == "softmax":
                model = softmax_train(
                    x_train, y_train, n_classes, softmax_params, seed=fold_seed
                )
                scores, y_pred = softmax_predict(model, x_test)
            elif model_name == "knn":
                knn = knn_fit(x_train, y_train, n_classes, k=knn_k)
                scores, y_pred = knn_predict(knn, x_test)
            elif model_name == "gnb":
                gnb = gnb_fit(x_train, y_train, n_classes)
                scores, y_pred = gnb_predict(gnb, x_test)
            else:
                raise InvalidConfig(f"unknown model {model_name!r}")
            acc, f1, auc = evaluate(y_test, y_pred, scores, n_classes)
            results.append(
                FoldResult(
                    model=model_name, method=method_name, fold=fold_idx,
                    acc=acc, f1=f1, auc=auc,
                )
            )
    return results


# ---------------------------------------------------------------------------
# stability
# ---------------------------------------------------------------------------


def balanced_score(mean: float, cv: float) -> float:
    """Stability-adjusted score ``mean * (1 - cv)``."""
    return mean * (1.0 - cv)


@dataclass
class StabilityReport:
    """Across-model spread of each metric for every method.

    ``cv`` entries are NaN sentinels when the corresponding mean is zero.
    """

    methods: list[str]
    metrics: list[str]
    mean: np.ndarray  # (n_methods, n_metrics)
    std: np.ndarray
    cv: np.ndarray
    balanced: np.ndarray

    def ranking(self) -> list[str]:
        """Methods ordered by mean balanced score (best first)."""
        key = np.nanmean(self.balanced, axis=1)
        order = np.argsort(-key)
        return [self.methods[i] for i in order]

    @classmethod
    def from_scores(
        cls, scores_by_method: dict[str, np.ndarray], metrics: list[str]
    ) -> "StabilityReport":
        """Build from per-method score matrices of shape (n_models, n_metrics).

        The spread is taken across models (population standard deviation).
        """
        methods = list(scores_by_method)
        mean = np.array([scores_by_method[m].mean(axis=0) for m in methods])
        std = np.array([scores_by_method[m].std(axis=0) for m in methods])
        cv = np.where(mean != 0, std / np.where(mean != 0, mean, 1.0), np.nan)
        return cls(
            methods=methods, metrics=list(metrics),
            mean=mean, std=std, cv=cv,
            balanced=mean * (1.0 - cv),
        )

    @classmethod
    def from_mean_cv(
        cls, methods: list[str], metrics: list[str], mean: np.ndarray, cv: np.ndarray
    ) -> "StabilityReport":
        """Build directly from given mean and CV tables."""
        mean = np.asarray(mean, dtype=float)
        cv = np.asarray(cv, dtype=float)
        return cls(
            methods=list(methods), metrics=list(metrics),
            mean=mean, std=cv * mean, cv=cv,
            balanced=mean * (1.0 - cv),
        )


def stability_report(
    fold_results: list[FoldResult], metrics: tuple[str, ...] = ("acc", "f1", "auc")
) -> StabilityReport:
    """Aggregate fold results into the per-method stability table.

    Fold scores are first averaged per (model, method); the report then
    summarises the spread of those model means within each method.
    """
    if not fold_results:
        raise InvalidConfig("no fold results to aggregate")
    methods = sorted({r.method for r in fold_results})
    scores_by_method: dict[str, np.ndarray] = {}
    for method in methods:
        models = sorted({r.model for r in fold_results if r.method == method})
        rows = []
        for model in models:
            sel = [r for r in fold_results if r.method == method and r.model == model]
            rows.append([float(np.mean([getattr(r, m) for r in sel])) for m in metrics])
        scores_by_method[method] = np.array(rows)
    return StabilityReport.from_scores(scores_by_method, list(metrics))
