"""Relevant-information feature extraction, multiscale and multilayer,
with regularized LDA reduction.

Per pixel and window size n, the n*n neighborhood (mirror padded at
the borders) is treated as a sample set X and a representation Y is
found by iterating a safeguarded fixed-point update that minimizes

    J(Y) = -(1-beta) log V(Y) - 2 beta log V(Y;X)

where V is the mean pairwise Gaussian kernel value (information
potential). The center row of the converged Y is the pixel's feature.
Each scale's output is reduced by regularized LDA fit on the labeled
pixels; scales concatenate into a layer output that feeds the next
layer; the final stack prepends the raw input spectra.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .errors import ValidationError
from .features import FeatureStack, LabeledSet, minmax_scale
from .kernels import pri_numpy

DEFAULT_SIGMA2 = 0.3


@dataclass(frozen=True)
class PriConfig:
    beta: float = 2.0
    sigma2: float = DEFAULT_SIGMA2
    max_iter: int = 30
    tol: float = 1e-4

    def __post_init__(self):
        if self.beta < 0:
            raise ValidationError("beta must be >= 0")
        if self.sigma2 <= 0:
            raise ValidationError("sigma2 must be > 0")
        if self.max_iter < 0:
            raise ValidationError("max_iter must be >= 0")
        if self.tol <= 0:
            raise ValidationError("tol must be > 0")


@dataclass(frozen=True)
class MpriConfig:
    scales: tuple = (3, 7, 11)
    layers: int = 3
    betas: tuple = (2.0, 2.0, 3.0)
    pri: PriConfig = field(default_factory=PriConfig)
    rlda_gamma: float = 0.1
    rlda_dims: int = 1
    include_input: bool = True

    def __post_init__(self):
        scales = tuple(int(s) for s in self.scales)
        if not scales:
            raise ValidationError("scales must be nonempty")
        for s in scales:
            if s < 3 or s % 2 == 0:
                raise ValidationError("every scale must be odd and >= 3")
        if self.layers < 1:
            raise ValidationError("layers must be >= 1")
        betas = tuple(float(b) for b in self.betas)
        if len(betas) != self.layers:
            raise ValidationError(
                "betas length %d does not match layers %d"
                % (len(betas), self.layers)
            )
        if self.rlda_gamma < 0:
            raise ValidationError("rlda_gamma must be >= 0")
        if self.rlda_dims < 1:
            raise ValidationError("rlda_dims must be >= 1")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "betas", betas)


# ---------------------------------------------------------------------------
# information-theoretic primitives


def gaussian_kernel(u, sigma2: float) -> float:
    """exp(-||u||^2 / (2 sigma2)) for a single difference vector."""
    if sigma2 <= 0:
        raise ValidationError("sigma2 must be > 0")
    u = np.asarray(u, dtype=np.float64)
    return float(np.exp(-float(u.ravel() @ u.ravel()) / (2.0 * sigma2)))


def _as_samples(A) -> np.ndarray:
    arr = np.asarray(A, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValidationError("sample sets must be nonempty N x d arrays")
    return np.ascontiguousarray(arr)


def information_potential(A, B, sigma2: float) -> float:
    """Mean pairwise Gaussian kernel value between two sample sets."""
    A = _as_samples(A)
    B = _as_samples(B)
    if A.shape[1] != B.shape[1]:
        raise ValidationError(
            "sample dimension mismatch: %d vs %d" % (A.shape[1], B.shape[1])
        )
    if sigma2 <= 0:
        raise ValidationError("sigma2 must be > 0")
    na = np.einsum("ij,ij->i", A, A)
    nb = np.einsum("ij,ij->i", B, B)
    d2 = np.maximum(na[:, None] + nb[None, :] - 2.0 * (A @ B.T), 0.0)
    return float(np.exp(-d2 / (2.0 * sigma2)).mean())


def cs_divergence(Y, X, sigma2: float) -> float:
    """Cauchy-Schwarz divergence between the sample densities of Y and X."""
    vyx = information_potential(Y, X, sigma2)
    vy = information_potential(Y, Y, sigma2)
    vx = information_potential(X, X, sigma2)
    return float(-2.0 * np.log(vyx) + np.log(vy) + np.log(vx))


def pri_objective(Y, X, beta: float, sigma2: float) -> float:
    """J(Y) = -(1-beta) log V(Y) - 2 beta log V(Y;X)."""
    Y = _as_samples(Y)
    X = _as_samples(X)
    if Y.shape != X.shape:
        raise ValidationError("Y and X must have identical shapes")
    vy = information_potential(Y, Y, sigma2)
    vyx = information_potential(Y, X, sigma2)
    return float(-(1.0 - beta) * np.log(vy) - 2.0 * beta * np.log(vyx))


def pri_fixed_point_update(Y, X, beta: float, sigma2: float) -> np.ndarray:
    """One safeguarded fixed-point step; never increases the objective.

    Rows whose denominator p*A_i + q*B_i degenerates (absolute value
    below 1e-12) hold their value; if the candidate as a whole raises
    the objective, the step falls back to damped gradient descent with
    the step size halved until non-increase (at most 20 halvings,
    otherwise Y is returned unchanged).
    """
    Y = _as_samples(Y)
    X = _as_samples(X)
    if Y.shape != X.shape:
        raise ValidationError("Y and X must have identical shapes")
    if sigma2 <= 0:
        raise ValidationError("sigma2 must be > 0")
    Y2, _, _, _ = pri_numpy.safeguarded_step(Y, X, float(beta), float(sigma2))
    return Y2


def pri_patch(patch, config: PriConfig) -> np.ndarray:
    """Iterate the safeguarded update on one N = n*n patch; returns the
    center row floor(n/2)*n + floor(n/2) of the converged Y."""
    arr = _as_samples(patch)
    n = int(round(np.sqrt(arr.shape[0])))
    if n * n != arr.shape[0] or n % 2 == 0:
        raise ValidationError(
            "patch rows must be n^2 for odd n, got %d" % arr.shape[0]
        )
    Y = kernels.pri_iterate(
        arr, float(config.beta), float(config.sigma2), float(config.tol),
        int(config.max_iter),
    )
    center = (n // 2) * n + (n // 2)
    return np.array(Y[center], dtype=np.float64)


def pri_scale(stack, n: int, config: PriConfig) -> FeatureStack:
    """Per-pixel patch iteration over the whole image at window size n.

    The image is mirror padded so every pixel owns a full n*n window;
    output dims equal input dims.
    """
    if isinstance(stack, FeatureStack):
        data = stack.data
    else:
        data = np.asarray(getattr(stack, "data", stack), dtype=np.float64)
    if data.ndim != 3:
        raise ValidationError("pri_scale expects (rows, cols, dim) data")
    rows, cols, dim = data.shape
    if n % 2 == 0 or n < 1:
        raise ValidationError("window size must be odd and positive")
    if n > min(rows, cols):
        raise ValidationError(
            "window %d exceeds image dims %dx%d" % (n, rows, cols)
        )
    h = n // 2
    padded = np.ascontiguousarray(
        np.pad(data, ((h, h), (h, h), (0, 0)), mode="symmetric"),
        dtype=np.float64,
    )
    out = np.empty((rows, cols, dim), dtype=np.float64)
    kernels.pri_scan(
        padded, n, float(config.beta), float(config.sigma2),
        float(config.tol), int(config.max_iter), out,
    )
    return FeatureStack.from_array(out)


# ---------------------------------------------------------------------------
# regularized LDA


def rlda_fit(features, labels, gamma: float, dims: int) -> np.ndarray:
    """Projection onto the top generalized eigenvectors of
    (S_w + gamma I)^{-1} S_b; columns unit-normalized, dims capped at
    the available discriminant directions (classes - 1)."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValidationError("features must be (n, d) matching labels")
    classes = np.unique(y)
    if classes.size < 2:
        raise ValidationError("rlda needs at least two classes")
    for c in classes:
        if int(np.sum(y == c)) < 2:
            raise ValidationError("class %r has fewer than 2 samples" % c)
    if gamma < 0:
        raise ValidationError("gamma must be >= 0")
    if dims < 1:
        raise ValidationError("dims must be >= 1")
    d = X.shape[1]
    mu = X.mean(axis=0)
    Sw = np.zeros((d, d))
    Sb = np.zeros((d, d))
    for c in classes:
        Xc = X[y == c]
        mc = Xc.mean(axis=0)
        centered = Xc - mc
        Sw += centered.T @ centered
        diff = (mc - mu)[:, None]
        Sb += Xc.shape[0] * (diff @ diff.T)
    reg = Sw + gamma * np.eye(d)
    try:
        evals, evecs = scipy.linalg.eigh(Sb, reg)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise ValidationError(
            "within-class scatter is singular; use gamma > 0"
        ) from exc
    if not np.all(np.isfinite(evals)):
        raise ValidationError(
            "within-class scatter is singular; use gamma > 0"
        )
    order = np.argsort(evals)[::-1]
    take = min(dims, classes.size - 1, d)
    P = evecs[:, order[:take]].copy()
    for j in range(P.shape[1]):
        norm = np.linalg.norm(P[:, j])
        if norm <= 0:
            raise ValidationError("degenerate rlda eigenvector")
        P[:, j] /= norm
        # deterministic sign: largest-magnitude component positive
        pivot = int(np.argmax(np.abs(P[:, j])))
        if P[pivot, j] < 0:
            P[:, j] = -P[:, j]
    return P


def rlda_apply(features, projection: np.ndarray) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    return X @ projection


# ---------------------------------------------------------------------------
# the full extractor


def mpri_extract(cube, labeled: LabeledSet, config: MpriConfig) -> FeatureStack:
    """Multiscale multilayer extraction with per-scale rLDA reduction.

    Layer input is min-max scaled per channel before the per-pixel
    iteration (the kernel bandwidth assumes a fixed data scale); each
    scale's reduced output is min-max scaled and the scales concatenate
    into the layer output, which feeds the next layer. The final stack
    is the raw input spectra (when include_input) followed by every
    layer output, so dim = bands + layers * scales * rlda_dims.
    """
    if isinstance(cube, FeatureStack):
        raw = cube.data
    else:
        raw = np.asarray(cube.data, dtype=np.float64)
    rows, cols, bands = raw.shape
    if not labeled.has_both_classes():
        raise ValidationError("labeled set must contain both classes")
    if np.any(labeled.indices >= rows * cols):
        raise ValidationError("labeled index outside the image")
    lab_idx = labeled.indices
    lab_y = labeled.labels

    blocks = []
    if config.include_input:
        blocks.append(raw)
    layer_input = raw
    for layer in range(config.layers):
        pri_cfg = PriConfig(
            beta=config.betas[layer],
            sigma2=config.pri.sigma2,
            max_iter=config.pri.max_iter,
            tol=config.pri.tol,
        )
        scaled = minmax_scale(layer_input)
        reduced_scales = []
        for n in config.scales:
            stack = pri_scale(scaled, n, pri_cfg)
            flat = stack.matrix()
            P = rlda_fit(flat[lab_idx], lab_y, config.rlda_gamma,
                         config.rlda_dims)
            proj = rlda_apply(flat, P).reshape(rows, cols, -1)
            reduced_scales.append(minmax_scale(proj))
        layer_out = np.concatenate(reduced_scales, axis=2)
        blocks.append(layer_out)
        layer_input = layer_out
    return FeatureStack.from_array(np.concatenate(blocks, axis=2))
