"""Patch classifiers: self-training SSL plus k-NN and linear-SVM
baselines.

Self-training fits a k-NN on the labeled pool, moves every unlabeled
pixel whose vote confidence clears tau into the pool with its
predicted label, and repeats; remaining pixels get labeled by the
final classifier regardless of confidence. The pool only grows and
seed labels are never overwritten. The base k-NN uses the largest odd
k' <= min(k, pool size), so votes cannot tie even from one seed per
class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .cube_io import LabelMap, UNLABELED
from .errors import ValidationError
from .features import FeatureStack, LabeledSet
from .metrics_stats import confusion


@dataclass(frozen=True)
class SslConfig:
    k: int = 5
    tau: float = 0.9
    max_rounds: int = 10
    batch_cap: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if not (0.0 < self.tau <= 1.0):
            raise ValidationError("tau must lie in (0, 1]")
        if self.max_rounds < 1:
            raise ValidationError("max_rounds must be >= 1")
        if self.batch_cap < 0:
            raise ValidationError("batch_cap must be >= 0 (0 = unlimited)")


@dataclass(frozen=True)
class SvmConfig:
    lam: float = 0.01
    epochs: int = 5

    def __post_init__(self):
        if self.lam <= 0:
            raise ValidationError("lambda must be > 0")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")


def sample_labels(gt: LabelMap, fraction: float, seed: int) -> LabeledSet:
    """Per class, draw ceil(fraction * class size) pixels uniformly
    without replacement; deterministic per seed."""
    if not (0.0 < fraction <= 1.0):
        raise ValidationError("fraction must lie in (0, 1]")
    flat = gt.labels.reshape(-1)
    rng = np.random.default_rng(int(seed) & (2**63 - 1))
    all_idx = []
    all_lab = []
    for cls in (0, 1):
        members = np.flatnonzero(flat == cls)
        if members.size == 0:
            raise ValidationError("class %d absent from the patch" % cls)
        need = int(np.ceil(fraction * members.size))
        picked = rng.choice(members, size=need, replace=False)
        picked.sort()
        all_idx.append(picked)
        all_lab.append(np.full(need, cls, dtype=np.uint8))
    return LabeledSet(np.concatenate(all_idx), np.concatenate(all_lab))


def _feature_matrix(features) -> np.ndarray:
    if isinstance(features, FeatureStack):
        return np.ascontiguousarray(features.matrix())
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr.reshape(-1, arr.shape[2])
    if arr.ndim != 2:
        raise ValidationError("features must be (n, d) or (rows, cols, d)")
    return np.ascontiguousarray(arr)


def knn_predict(train_features, train_labels, query_features, k: int):
    """Euclidean k-NN majority vote.

    Returns (labels, confidences); confidence is the majority fraction
    among the k neighbors. Distance ties break toward the lower
    training index, vote ties toward class 0.
    """
    X = _feature_matrix(train_features)
    y = np.asarray(train_labels, dtype=np.uint8)
    Q = _feature_matrix(query_features)
    if X.shape[0] == 0:
        raise ValidationError("training set is empty")
    if y.shape != (X.shape[0],):
        raise ValidationError("training labels do not match features")
    if X.shape[1] != Q.shape[1]:
        raise ValidationError("train/query dimension mismatch")
    if k < 1 or k > X.shape[0]:
        raise ValidationError(
            "k = %d outside 1..train size %d" % (k, X.shape[0])
        )
    pred = np.empty(Q.shape[0], dtype=np.uint8)
    conf = np.empty(Q.shape[0], dtype=np.float64)
    kernels.knn_scan(X, y, Q, int(k), pred, conf)
    return pred, conf


def _effective_k(k: int, pool_size: int) -> int:
    k_eff = min(k, pool_size)
    if k_eff % 2 == 0:
        k_eff -= 1
    return max(k_eff, 1)


def self_train(features, seedset: LabeledSet, config: SslConfig,
               return_history: bool = False):
    """Self-training over a feature patch; returns a full LabelMap.

    With return_history=True also returns the labeled-pool size after
    each round (starting at the seed count), for auditing growth.
    """
    if isinstance(features, FeatureStack):
        rows, cols = features.rows, features.cols
    else:
        arr = np.asarray(features)
        if arr.ndim != 3:
            raise ValidationError("self_train expects (rows, cols, d) features")
        rows, cols = arr.shape[:2]
    X = _feature_matrix(features)
    npix = X.shape[0]
    if np.any(seedset.indices >= npix):
        raise ValidationError("seed index outside the patch")
    if not seedset.has_both_classes():
        raise ValidationError("seed set must contain both classes")

    labels = np.full(npix, UNLABELED, dtype=np.uint8)
    labels[seedset.indices] = seedset.labels
    pooled = np.zeros(npix, dtype=bool)
    pooled[seedset.indices] = True
    history = [int(pooled.sum())]

    for _ in range(config.max_rounds):
        unl = np.flatnonzero(~pooled)
        if unl.size == 0:
            break
        pool = np.flatnonzero(pooled)
        k_eff = _effective_k(config.k, pool.size)
        pred, conf = knn_predict(X[pool], labels[pool], X[unl], k_eff)
        qualified = conf >= config.tau
        if not np.any(qualified):
            break
        take = np.flatnonzero(qualified)
        if config.batch_cap and take.size > config.batch_cap:
            # highest confidence first, ties toward the lower pixel index
            order = np.lexsort((unl[take], -conf[take]))
            take = take[order[: config.batch_cap]]
        sel = unl[take]
        labels[sel] = pred[take]
        pooled[sel] = True
        history.append(int(pooled.sum()))

    unl = np.flatnonzero(~pooled)
    if unl.size:
        pool = np.flatnonzero(pooled)
        k_eff = _effective_k(config.k, pool.size)
        pred, _ = knn_predict(X[pool], labels[pool], X[unl], k_eff)
        labels[unl] = pred
    out = LabelMap(rows, cols, labels.reshape(rows, cols))
    if return_history:
        return out, history
    return out


def linear_svm_fit(features, labels, lam: float, epochs: int, seed: int):
    """Hinge-loss linear SVM by seeded stochastic subgradient descent
    with step 1/(lam*t) and iterate averaging; returns (w, b)."""
    X = _feature_matrix(features)
    y = np.asarray(labels)
    if y.shape != (X.shape[0],):
        raise ValidationError("labels do not match features")
    if np.unique(y).size < 2:
        raise ValidationError("svm needs both classes present")
    if lam <= 0 or epochs < 1:
        raise ValidationError("lam must be > 0 and epochs >= 1")
    n, d = X.shape
    sign = np.where(y == 1, 1.0, -1.0)
    aug = np.hstack((X, np.ones((n, 1))))
    w = np.zeros(d + 1)
    wsum = np.zeros(d + 1)
    radius = 1.0 / np.sqrt(lam)
    rng = np.random.default_rng(int(seed) & (2**63 - 1))
    picks = rng.integers(0, n, size=epochs * n)
    for t in range(1, epochs * n + 1):
        i = int(picks[t - 1])
        eta = 1.0 / (lam * t)
        margin = sign[i] * float(w @ aug[i])
        w *= 1.0 - eta * lam
        if margin < 1.0:
            w += (eta * sign[i]) * aug[i]
        norm = float(np.linalg.norm(w))
        if norm > radius:
            w *= radius / norm
        wsum += w
    wavg = wsum / (epochs * n)
    return wavg[:d], float(wavg[d])


def linear_svm_predict(features, w, b) -> np.ndarray:
    X = _feature_matrix(features)
    score = X @ np.asarray(w, dtype=np.float64) + b
    return (score > 0).astype(np.uint8)


def _minmax_columns(X: np.ndarray) -> np.ndarray:
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    out = (X - lo) / safe
    return np.where(span > 0, out, 0.0)


def classify_patch(features, gt: LabelMap, method: str, fraction: float,
                   seed: int, ssl: SslConfig | None = None,
                   svm: SvmConfig | None = None):
    """Sample seed labels, train the chosen method, predict the patch.

    Returns (prediction LabelMap, ConfusionCounts). Confusion counts
    cover the labeled ground-truth pixels outside the sampled training
    set; sampling everything (fraction = 1) leaves nothing to evaluate
    and is an error.
    """
    ssl = ssl or SslConfig()
    svm = svm or SvmConfig()
    if method not in ("ssl", "knn", "svm"):
        raise ValidationError("method must be one of ssl, knn, svm")
    if isinstance(features, FeatureStack):
        rows, cols = features.rows, features.cols
    else:
        rows, cols = np.asarray(features).shape[:2]
    if (rows, cols) != (gt.rows, gt.cols):
        raise ValidationError("features and ground truth dims differ")
    seedset = sample_labels(gt, fraction, seed)
    X = _feature_matrix(features)

    if method == "ssl":
        pred_map = self_train(features, seedset, ssl)
    elif method == "knn":
        pred, _ = knn_predict(X[seedset.indices], seedset.labels, X, ssl.k)
        pred_map = LabelMap(rows, cols, pred.reshape(rows, cols))
    else:
        scaled = _minmax_columns(X)
        w, b = linear_svm_fit(scaled[seedset.indices], seedset.labels,
                              svm.lam, svm.epochs, seed)
        pred = linear_svm_predict(scaled, w, b)
        pred_map = LabelMap(rows, cols, pred.reshape(rows, cols))

    mask = (gt.labels.reshape(-1) != UNLABELED)
    mask[seedset.indices] = False
    if not np.any(mask):
        raise ValidationError(
            "no labeled pixels left to evaluate after excluding the "
            "training sample"
        )
    counts = confusion(pred_map, gt, mask.reshape(rows, cols))
    return pred_map, counts
