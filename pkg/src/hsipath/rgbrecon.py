"""RGB reconstruction from hyperspectral cubes via CIE XYZ.

Per pixel, the spectrum is integrated against the CIE 1931 2-degree
color matching functions (bundled 1 nm table, nearest-wavelength
lookup), each channel is divided by the response of a flat unit
spectrum on the same wavelength grid (so equal-energy white maps to
(1,1,1)), and XYZ goes to sRGB through a row-normalized D65 matrix,
a hard clip to [0,1], and the standard transfer curve.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .cube_io import HyperCube
from .errors import FormatError, ValidationError

# D65 sRGB matrix; rows are normalized to sum to one at load time so a
# neutral XYZ input stays neutral under the flat-white normalization.
_SRGB_M = np.array(
    [
        [3.2404542, -1.5371385, -0.4985314],
        [-0.9692660, 1.8760108, 0.0415560],
        [0.0556434, -0.2040259, 1.0572252],
    ],
    dtype=np.float64,
)


@dataclass(frozen=True)
class CmfTable:
    """Color matching functions sampled on a strictly 1 nm grid."""

    wavelengths: np.ndarray
    xbar: np.ndarray
    ybar: np.ndarray
    zbar: np.ndarray

    def __post_init__(self):
        wl = np.asarray(self.wavelengths, dtype=np.float64)
        arrs = {}
        for name in ("xbar", "ybar", "zbar"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            if a.shape != wl.shape:
                raise ValidationError("CMF column %s length mismatch" % name)
            if np.any(a < 0) or not np.all(np.isfinite(a)):
                raise ValidationError("CMF weights must be finite and >= 0")
            arrs[name] = a
        if wl.ndim != 1 or wl.size < 2:
            raise ValidationError("CMF table needs at least two rows")
        if not np.allclose(np.diff(wl), 1.0, atol=1e-9):
            raise ValidationError("CMF grid must have 1 nm spacing")
        if float(np.sum(arrs["ybar"])) <= 0:
            raise ValidationError("ybar must integrate to a positive value")
        object.__setattr__(self, "wavelengths", wl)
        for name, a in arrs.items():
            object.__setattr__(self, name, a)

    def lookup(self, wavelengths) -> np.ndarray:
        """Nearest-entry weights for the given wavelengths, shape (n, 3)."""
        lam = np.asarray(wavelengths, dtype=np.float64)
        w0 = self.wavelengths[0]
        w1 = self.wavelengths[-1]
        if np.any(lam < w0 - 0.5) or np.any(lam > w1 + 0.5):
            raise ValidationError(
                "wavelength outside CMF coverage %.1f..%.1f nm" % (w0, w1)
            )
        idx = np.clip(
            np.floor(lam - w0 + 0.5).astype(np.int64), 0, self.wavelengths.size - 1
        )
        return np.stack((self.xbar[idx], self.ybar[idx], self.zbar[idx]), axis=1)


def load_cmf(path=None) -> CmfTable:
    """Load a CMF table; default is the bundled 360..830 nm asset."""
    if path is None:
        text = (
            resources.files("hsipath.data")
            .joinpath("cie1931_2deg.txt")
            .read_text(encoding="ascii")
        )
    else:
        with open(path, "r", encoding="ascii") as fh:
            text = fh.read()
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise FormatError("CMF rows need 4 columns, got %r" % line[:40])
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise FormatError("non-numeric CMF entry in %r" % line[:40]) from exc
    if not rows:
        raise FormatError("empty CMF table")
    arr = np.array(rows, dtype=np.float64)
    try:
        return CmfTable(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])
    except ValidationError as exc:
        raise FormatError(str(exc)) from exc


def hsi_to_xyz(cube: HyperCube, cmf: CmfTable | None = None) -> np.ndarray:
    """Integrate spectra against the CMFs with flat-white normalization.

    Returns a (rows, cols, 3) float64 image. A flat unit spectrum maps
    to exactly (1, 1, 1); the map is linear in the input spectra.
    """
    if cmf is None:
        cmf = load_cmf()
    weights = cmf.lookup(cube.wavelengths)  # (bands, 3)
    white = weights.sum(axis=0)  # response of the flat unit spectrum
    if np.any(white <= 0):
        raise ValidationError(
            "cube wavelength grid gives a zero white response channel"
        )
    xyz = np.tensordot(cube.data.astype(np.float64), weights, axes=([2], [0]))
    return xyz / white[None, None, :]


def srgb_transfer(linear: np.ndarray) -> np.ndarray:
    """Standard sRGB opto-electronic transfer, elementwise on [0,1]."""
    lin = np.asarray(linear, dtype=np.float64)
    low = lin * 12.92
    high = 1.055 * np.power(np.maximum(lin, 1e-300), 1.0 / 2.4) - 0.055
    return np.where(lin <= 0.0031308, low, high)


def xyz_to_srgb(xyz: np.ndarray) -> np.ndarray:
    """Row-normalized D65 matrix, hard clip to [0,1], transfer curve."""
    arr = np.asarray(xyz, dtype=np.float64)
    if arr.shape[-1] != 3:
        raise ValidationError("xyz image must have 3 channels")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("xyz values must be finite")
    m = _SRGB_M / _SRGB_M.sum(axis=1, keepdims=True)
    linear = arr @ m.T
    return srgb_transfer(np.clip(linear, 0.0, 1.0))


def hsi_to_rgb(cube: HyperCube, cmf: CmfTable | None = None) -> np.ndarray:
    """Full reconstruction: spectra -> XYZ -> display-ready sRGB in [0,1]."""
    return xyz_to_srgb(hsi_to_xyz(cube, cmf))
