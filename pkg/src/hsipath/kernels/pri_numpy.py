"""Pure-NumPy implementation of the relevant-information iteration.

One safeguarded step minimizes
    J(Y) = -(1-beta) log V(Y) - 2 beta log V(Y;X)
where V is the mean pairwise Gaussian kernel value. The fixed-point
candidate comes from zeroing the gradient of J; if any row denominator
degenerates the row holds its value, and if the candidate raises J the
step falls back to a damped gradient descent with step halving, so the
objective never increases. Acceptance is strict: a slack there lets
beta > 1 instances ratchet J upward and orbit a limit cycle.
"""

from __future__ import annotations

import numpy as np

DEN_EPS = 1e-12
MAX_HALVINGS = 20


def kernel_mats(Y: np.ndarray, X: np.ndarray, sigma2: float):
    """Gaussian kernel matrices and potentials for (Y,Y) and (Y,X).

    Returns (Gyy, Gyx, VY, VYX). Squared distances are clamped at zero
    and the Gyy diagonal is exactly one.
    """
    YY = Y @ Y.T
    ny = np.diag(YY).copy()
    nx = np.einsum("ij,ij->i", X, X)
    YX = Y @ X.T
    inv = 1.0 / (2.0 * sigma2)
    d2yy = np.maximum(ny[:, None] + ny[None, :] - 2.0 * YY, 0.0)
    d2yx = np.maximum(ny[:, None] + nx[None, :] - 2.0 * YX, 0.0)
    Gyy = np.exp(-d2yy * inv)
    np.fill_diagonal(Gyy, 1.0)
    Gyx = np.exp(-d2yx * inv)
    n, m = Gyx.shape
    return Gyy, Gyx, float(Gyy.sum()) / (n * n), float(Gyx.sum()) / (n * m)


def objective_value(VY: float, VYX: float, beta: float) -> float:
    return -(1.0 - beta) * np.log(VY) - 2.0 * beta * np.log(VYX)


def safeguarded_step(Y, X, beta, sigma2, mats=None):
    """One monotone step of the fixed-point iteration.

    Returns (Y2, mats2, J2, rel_change) where mats2 are the kernel
    matrices evaluated at Y2 (reusable by the caller for the next
    step) and rel_change is the relative Frobenius update size.
    """
    if mats is None:
        mats = kernel_mats(Y, X, sigma2)
    Gyy, Gyx, VY, VYX = mats
    J = objective_value(VY, VYX, beta)
    p = (1.0 - beta) / VY
    q = beta / VYX
    A = Gyy.sum(axis=1)
    B = Gyx.sum(axis=1)
    den = p * A + q * B
    WY = Gyy @ Y
    WX = Gyx @ X
    good = np.abs(den) >= DEN_EPS
    cand = Y.copy()
    cand[good] = (p * WY[good] + q * WX[good]) / den[good, None]
    mats2 = kernel_mats(cand, X, sigma2)
    J2 = objective_value(mats2[2], mats2[3], beta)
    if not J2 <= J:
        # damped gradient fallback from Y, step halved until non-increase
        N = Y.shape[0]
        scale = 2.0 / (N * N * sigma2)
        grad = scale * (
            p * (A[:, None] * Y - WY) + q * (B[:, None] * Y - WX)
        )
        eta = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            cand = Y - eta * grad
            mats2 = kernel_mats(cand, X, sigma2)
            J2 = objective_value(mats2[2], mats2[3], beta)
            if J2 <= J:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            cand = Y
            mats2 = mats
            J2 = J
    num = float(np.linalg.norm(cand - Y))
    den2 = max(float(np.linalg.norm(Y)), 1e-30)
    return cand, mats2, J2, num / den2


def pri_iterate(patch, beta, sigma2, tol, max_iter):
    """Iterate safeguarded steps from Y = patch; returns the final Y."""
    X = np.ascontiguousarray(patch, dtype=np.float64)
    Y = X.copy()
    if max_iter <= 0:
        return Y
    mats = kernel_mats(Y, X, sigma2)
    for _ in range(max_iter):
        Y2, mats, _, rel = safeguarded_step(Y, X, beta, sigma2, mats)
        stalled = Y2 is Y
        Y = Y2
        if rel < tol or stalled:
            break
    return Y


def pri_scan(padded, n, beta, sigma2, tol, max_iter, out):
    """Per-pixel iteration over mirror-padded data; center rows to out."""
    rows, cols, d = out.shape
    N = n * n
    h = n // 2
    center = h * n + h
    for r in range(rows):
        for c in range(cols):
            patch = padded[r:r + n, c:c + n, :].reshape(N, d)
            Yf = pri_iterate(patch, beta, sigma2, tol, max_iter)
            out[r, c, :] = Yf[center]
    return out
