"""Numba implementation of the relevant-information iteration.

Same math as pri_numpy (see that module for the contract); the
per-pixel scan compiles to machine code and parallelizes over pixels.
Kernel matrices are built through BLAS gram products, the (Y,Y) matrix
exploits symmetry, and an accepted candidate's matrices are reused for
the next step so each iteration costs one matrix build.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

DEN_EPS = 1e-12
MAX_HALVINGS = 20


@njit(cache=True, fastmath=True)
def _transpose(M):
    rows, cols = M.shape
    out = np.empty((cols, rows))
    for i in range(rows):
        for j in range(cols):
            out[j, i] = M[i, j]
    return out


@njit(cache=True, fastmath=True)
def _mats(Y, XT, nx, sigma2):
    """Kernel matrices for (Y,Y) and (Y,X); X enters transposed.

    nx holds the squared row norms of X. Returns (Gyy, Gyx, VY, VYX).
    """
    N = Y.shape[0]
    inv = 1.0 / (2.0 * sigma2)
    YT = _transpose(Y)
    YY = np.dot(Y, YT)
    YX = np.dot(Y, XT)
    Gyy = np.empty((N, N))
    Gyx = np.empty((N, N))
    sy = 0.0
    syx = 0.0
    for i in range(N):
        Gyy[i, i] = 1.0
        for j in range(i + 1, N):
            d2 = YY[i, i] + YY[j, j] - 2.0 * YY[i, j]
            if d2 < 0.0:
                d2 = 0.0
            g = np.exp(-d2 * inv)
            Gyy[i, j] = g
            Gyy[j, i] = g
            sy += 2.0 * g
        for j in range(N):
            d2 = YY[i, i] + nx[j] - 2.0 * YX[i, j]
            if d2 < 0.0:
                d2 = 0.0
            g = np.exp(-d2 * inv)
            Gyx[i, j] = g
            syx += g
    VY = (sy + N) / (N * N)
    VYX = syx / (N * N)
    return Gyy, Gyx, VY, VYX


@njit(cache=True, fastmath=True)
def pri_iterate(patch, beta, sigma2, tol, max_iter):
    """Iterate safeguarded fixed-point steps from Y = patch."""
    N, d = patch.shape
    X = np.ascontiguousarray(patch)
    Y = X.copy()
    if max_iter <= 0:
        return Y
    XT = _transpose(X)
    XX = np.dot(X, XT)
    nx = np.empty(N)
    for j in range(N):
        nx[j] = XX[j, j]

    Gyy, Gyx, VY, VYX = _mats(Y, XT, nx, sigma2)
    J = -(1.0 - beta) * np.log(VY) - 2.0 * beta * np.log(VYX)
    for _ in range(max_iter):
        p = (1.0 - beta) / VY
        q = beta / VYX
        A = np.empty(N)
        B = np.empty(N)
        for i in range(N):
            sa = 0.0
            sb = 0.0
            for j in range(N):
                sa += Gyy[i, j]
                sb += Gyx[i, j]
            A[i] = sa
            B[i] = sb
        WY = np.dot(Gyy, Y)
        WX = np.dot(Gyx, X)
        cand = np.empty((N, d))
        for i in range(N):
            den = p * A[i] + q * B[i]
            if abs(den) < DEN_EPS:
                for b in range(d):
                    cand[i, b] = Y[i, b]
            else:
                for b in range(d):
                    cand[i, b] = (p * WY[i, b] + q * WX[i, b]) / den
        Gyy2, Gyx2, VY2, VYX2 = _mats(cand, XT, nx, sigma2)
        J2 = -(1.0 - beta) * np.log(VY2) - 2.0 * beta * np.log(VYX2)
        if not (J2 <= J):
            # damped gradient fallback with step halving
            scale = 2.0 / (N * N * sigma2)
            grad = np.empty((N, d))
            for i in range(N):
                for b in range(d):
                    grad[i, b] = scale * (
                        p * (A[i] * Y[i, b] - WY[i, b])
                        + q * (B[i] * Y[i, b] - WX[i, b])
                    )
            eta = 1.0
            accepted = False
            for _h in range(MAX_HALVINGS + 1):
                for i in range(N):
                    for b in range(d):
                        cand[i, b] = Y[i, b] - eta * grad[i, b]
                Gyy2, Gyx2, VY2, VYX2 = _mats(cand, XT, nx, sigma2)
                J2 = -(1.0 - beta) * np.log(VY2) - 2.0 * beta * np.log(VYX2)
                if J2 <= J:
                    accepted = True
                    break
                eta *= 0.5
            if not accepted:
                return Y
        num = 0.0
        den2 = 0.0
        for i in range(N):
            for b in range(d):
                diff = cand[i, b] - Y[i, b]
                num += diff * diff
                den2 += Y[i, b] * Y[i, b]
        Y = cand
        Gyy = Gyy2
        Gyx = Gyx2
        VY = VY2
        VYX = VYX2
        J = J2
        if den2 < 1e-60:
            den2 = 1e-60
        if np.sqrt(num) / np.sqrt(den2) < tol:
            break
    return Y


@njit(cache=True, fastmath=True, parallel=True)
def pri_scan(padded, n, beta, sigma2, tol, max_iter, out):
    """Per-pixel iteration over mirror-padded data; center rows to out."""
    rows, cols, d = out.shape
    N = n * n
    h = n // 2
    center = h * n + h
    for pix in prange(rows * cols):
        r = pix // cols
        c = pix % cols
        patch = np.empty((N, d))
        for wr in range(n):
            for wc in range(n):
                for b in range(d):
                    patch[wr * n + wc, b] = padded[r + wr, c + wc, b]
        Yf = pri_iterate(patch, beta, sigma2, tol, max_iter)
        for b in range(d):
            out[r, c, b] = Yf[center, b]
    return out
