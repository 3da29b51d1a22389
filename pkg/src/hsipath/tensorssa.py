"""Trajectory-tensor spectral-spatial extraction.

Each pixel is embedded with its l most similar window neighbors
(Euclidean distance between unit-normalized spectra, self first, ties
to the lower row-major index) into an l x (rows*cols) x bands tensor.
A low-tubal-rank approximation via per-frequency-slice truncated SVD
after an FFT along the band mode denoises the tensor, and reprojection
averages every entry that originated from the same pixel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError
from .features import FeatureStack


@dataclass(frozen=True)
class TssaConfig:
    u: int = 5
    l: int = 60
    rtub: int = 1

    def __post_init__(self):
        if self.u < 1:
            raise ValidationError("u must be >= 1")
        if self.l < 1:
            raise ValidationError("l must be >= 1")
        w = 2 * self.u + 1
        if self.l > (w - 2) * (w - 2):
            raise ValidationError(
                "l = %d exceeds the window bound (2u-1)^2 = %d"
                % (self.l, (w - 2) * (w - 2))
            )
        if self.rtub < 1 or self.rtub > self.l:
            raise ValidationError("rtub must lie in 1..l")


@dataclass(frozen=True)
class TrajectoryTensor:
    l: int
    npix: int
    bands: int
    data: np.ndarray
    index_map: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        idx = np.asarray(self.index_map, dtype=np.int64)
        if data.shape != (self.l, self.npix, self.bands):
            raise ValidationError("trajectory data shape mismatch")
        if idx.shape != (self.l, self.npix):
            raise ValidationError("index map shape mismatch")
        if np.any(idx < 0) or np.any(idx >= self.npix):
            raise ValidationError("index map entries outside the image")
        if not np.array_equal(idx[0], np.arange(self.npix)):
            raise ValidationError("fiber 0 must map every pixel to itself")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "index_map", idx)


def _cube_data(cube) -> np.ndarray:
    data = np.asarray(getattr(cube, "data", cube), dtype=np.float64)
    if data.ndim != 3:
        raise ValidationError("expected (rows, cols, bands) data")
    return data


def _unit_normalize(data: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.einsum("ijk,ijk->ij", data, data))
    safe = np.where(norms > 0, norms, 1.0)
    return np.ascontiguousarray(data / safe[:, :, None])


def _check_bound(u: int, l: int) -> None:
    w = 2 * u + 1
    if l > (w - 2) * (w - 2):
        raise ValidationError(
            "l = %d exceeds the window bound (2u-1)^2 = %d" % (l, (w - 2) ** 2)
        )


def _check_window(rows: int, cols: int, u: int, l: int) -> None:
    _check_bound(u, l)
    corner = min(rows, u + 1) * min(cols, u + 1)
    if l > corner:
        raise ValidationError(
            "l = %d exceeds the %d pixels of a clipped corner window"
            % (l, corner)
        )


def similar_neighbors(cube, pixel: int, u: int, l: int) -> np.ndarray:
    """Indices of the pixel itself plus its l-1 nearest window neighbors.

    Distance is Euclidean between unit-L2-normalized spectra within the
    (2u+1)^2 window clipped at the borders; ties break toward the lower
    row-major index. Zero spectra stay zero vectors under normalization.
    """
    data = _cube_data(cube)
    rows, cols, _ = data.shape
    _check_bound(u, l)
    if pixel < 0 or pixel >= rows * cols:
        raise ValidationError("pixel index outside the image")
    normed = _unit_normalize(data)
    r, c = divmod(pixel, cols)
    r0, r1 = max(0, r - u), min(rows - 1, r + u)
    c0, c1 = max(0, c - u), min(cols - 1, c + u)
    cand = []
    for rr in range(r0, r1 + 1):
        for cc in range(c0, c1 + 1):
            if rr == r and cc == c:
                continue
            diff = normed[rr, cc] - normed[r, c]
            cand.append((float(diff @ diff), rr * cols + cc))
    if l - 1 > len(cand):
        raise ValidationError(
            "l = %d exceeds the %d pixels of the clipped window"
            % (l, len(cand) + 1)
        )
    cand.sort()
    return np.array([pixel] + [idx for _, idx in cand[: l - 1]], dtype=np.int64)


def embed(cube, config: TssaConfig) -> TrajectoryTensor:
    """Build the trajectory tensor; fiber k of pixel p holds the raw
    spectrum of the k-th most similar neighbor of p."""
    data = _cube_data(cube)
    rows, cols, bands = data.shape
    _check_window(rows, cols, config.u, config.l)
    normed = _unit_normalize(data)
    idx = np.empty((rows * cols, config.l), dtype=np.int64)
    kernels.neighbor_scan(normed, int(config.u), int(config.l), idx)
    index_map = np.ascontiguousarray(idx.T)
    flat = data.reshape(rows * cols, bands)
    tensor = flat[index_map]  # (l, npix, bands)
    return TrajectoryTensor(config.l, rows * cols, bands, tensor, index_map)


def tsvd_lowrank(Z: np.ndarray, rtub: int) -> np.ndarray:
    """Best rank-rtub approximation of every frequency slice.

    FFT along the band mode, truncated SVD per slice, inverse FFT.
    Conjugate symmetry is enforced explicitly (slice d-k is the
    conjugate of slice k for real input), so the output is real by
    construction; the residual imaginary part (< 1e-9) is discarded.
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 3:
        raise ValidationError("tsvd expects an order-3 tensor")
    l, m, d = Z.shape
    if rtub < 1 or rtub > min(l, m):
        raise ValidationError(
            "rtub = %d outside 1..min(l, m) = %d" % (rtub, min(l, m))
        )
    Zf = np.fft.fft(Z, axis=2)
    out = np.empty_like(Zf)
    half = d // 2
    for k in range(half + 1):
        slab = Zf[:, :, k]
        U, s, Vh = np.linalg.svd(slab, full_matrices=False)
        low = (U[:, :rtub] * s[:rtub]) @ Vh[:rtub]
        out[:, :, k] = low
        mirror = (d - k) % d
        if mirror != k:
            out[:, :, mirror] = np.conj(low)
    back = np.fft.ifft(out, axis=2)
    return np.ascontiguousarray(back.real)


def reproject(Z_r: np.ndarray, index_map: np.ndarray, rows: int,
              cols: int) -> FeatureStack:
    """Average all tensor entries that originated from the same pixel."""
    Z_r = np.asarray(Z_r, dtype=np.float64)
    idx = np.asarray(index_map, dtype=np.int64)
    if Z_r.ndim != 3 or idx.shape != Z_r.shape[:2]:
        raise ValidationError("tensor and index map shapes are inconsistent")
    l, npix, bands = Z_r.shape
    if npix != rows * cols:
        raise ValidationError("pixel count does not match rows*cols")
    if np.any(idx < 0) or np.any(idx >= npix):
        raise ValidationError("index map entries outside the image")
    flat_idx = idx.reshape(-1)
    contrib = Z_r.reshape(l * npix, bands)
    sums = np.zeros((npix, bands))
    np.add.at(sums, flat_idx, contrib)
    counts = np.bincount(flat_idx, minlength=npix)
    if np.any(counts == 0):
        raise ValidationError("a pixel received no contributions")
    out = sums / counts[:, None]
    return FeatureStack.from_array(out.reshape(rows, cols, bands))


def tensorssa_extract(cube, config: TssaConfig) -> FeatureStack:
    """embed -> tsvd_lowrank -> reproject; output dims equal input dims."""
    data = _cube_data(cube)
    rows, cols, _ = data.shape
    traj = embed(cube, config)
    low = tsvd_lowrank(traj.data, config.rtub)
    return reproject(low, traj.index_map, rows, cols)
