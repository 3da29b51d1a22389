"""Deterministic synthetic phantoms for desk-scale verification.

A phantom is a smooth random field thresholded into contiguous class
regions, with each pixel given its class-mean spectrum times a uniform
multiplicative gain, plus white Gaussian noise. Identical specs yield
bit-identical output; zero noise and zero jitter reproduce the class
means exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cube_io import HyperCube, LabelMap
from .errors import ValidationError
from . import rgbrecon

# nominal band centers for the 3-band projection, in increasing order
RGB_BAND_NM = (465.0, 549.0, 611.0)


@dataclass(frozen=True)
class PhantomSpec:
    rows: int
    cols: int
    bands: int
    class_count: int = 2
    class_spectra: np.ndarray = None
    region_seed: int = 0
    noise_seed: int = 1
    noise_sigma: float = 0.0
    gain_jitter: float = 0.0
    wavelengths: np.ndarray = field(default=None)

    def __post_init__(self):
        if min(self.rows, self.cols, self.bands) < 1:
            raise ValidationError("phantom dimensions must be positive")
        if self.class_count < 2:
            raise ValidationError("phantom needs at least 2 classes")
        if self.noise_sigma < 0 or self.gain_jitter < 0:
            raise ValidationError("noise_sigma and gain_jitter must be >= 0")
        spectra = self.class_spectra
        if spectra is None:
            spectra = standard_spectra(self.bands, self.class_count)
        spectra = np.asarray(spectra, dtype=np.float64)
        if spectra.shape != (self.class_count, self.bands):
            raise ValidationError(
                "class_spectra shape %s does not match (%d, %d)"
                % (spectra.shape, self.class_count, self.bands)
            )
        if not np.all(np.isfinite(spectra)):
            raise ValidationError("class spectra must be finite")
        if np.any(spectra < 0) or np.any(spectra > 1):
            raise ValidationError("class spectra must lie in [0,1]")
        for a in range(self.class_count):
            for b in range(a + 1, self.class_count):
                if np.max(np.abs(spectra[a] - spectra[b])) <= 0:
                    raise ValidationError(
                        "class spectra %d and %d are identical" % (a, b)
                    )
        wl = self.wavelengths
        if wl is None:
            wl = default_wavelengths(self.bands)
        wl = np.asarray(wl, dtype=np.float64)
        if wl.shape != (self.bands,):
            raise ValidationError("wavelength count does not match bands")
        object.__setattr__(self, "class_spectra", spectra)
        object.__setattr__(self, "wavelengths", wl)


def default_wavelengths(bands: int) -> np.ndarray:
    """Evenly spaced band centers over the 450..800 nm visible range."""
    if bands == 1:
        return np.array([450.0])
    return np.linspace(450.0, 800.0, bands)


def standard_spectra(bands: int, class_count: int = 2) -> np.ndarray:
    """Built-in class mean spectra: a smooth base curve shared by all
    classes plus a per-class oscillatory offset.

    The offsets integrate to roughly zero across the band axis, so the
    classes stay nearly metameric under broad-band (RGB) projection
    while remaining separable on the full spectral grid.
    """
    if bands < 1 or class_count < 2:
        raise ValidationError("standard_spectra needs bands >= 1, classes >= 2")
    t = np.linspace(0.0, 1.0, bands)
    base = 0.55 + 0.15 * np.sin(2.0 * np.pi * t)
    spectra = np.empty((class_count, bands))
    spectra[0] = base
    for c in range(1, class_count):
        delta = 0.04 * np.sin(2.0 * np.pi * (2.0 * c + 4.0) * t + 0.7 * c)
        spectra[c] = base + delta
    return np.clip(spectra, 0.0, 1.0)


def _region_field(rows: int, cols: int, seed: int) -> np.ndarray:
    """Low-frequency random field: a small sum of random sinusoids."""
    rng = np.random.default_rng(seed)
    rr, cc = np.meshgrid(
        np.arange(rows, dtype=np.float64) / max(rows, 1),
        np.arange(cols, dtype=np.float64) / max(cols, 1),
        indexing="ij",
    )
    f = np.zeros((rows, cols))
    for _ in range(4):
        fr = rng.uniform(0.5, 2.5)
        fc = rng.uniform(0.5, 2.5)
        amp = rng.uniform(0.5, 1.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        f += amp * np.sin(2.0 * np.pi * (fr * rr + fc * cc) + phase)
    return f


def make_phantom(spec: PhantomSpec) -> tuple[HyperCube, LabelMap]:
    """Generate a (cube, label map) pair from a phantom spec.

    Class regions come from thresholding the region field at per-class
    quantiles; class indices above 0 collapse to label 1 so the label
    map stays binary. The gain field is drawn before the noise field
    from the noise_seed stream, so the two effects are independently
    reproducible.
    """
    field_vals = _region_field(spec.rows, spec.cols, spec.region_seed)
    qs = np.quantile(field_vals, np.arange(1, spec.class_count) / spec.class_count)
    classes = np.digitize(field_vals, qs).astype(np.int64)

    cube = spec.class_spectra[classes]  # (rows, cols, bands)
    rng = np.random.default_rng(spec.noise_seed)
    if spec.gain_jitter > 0:
        gain = rng.uniform(
            1.0 - spec.gain_jitter, 1.0 + spec.gain_jitter,
            size=(spec.rows, spec.cols),
        )
        cube = cube * gain[:, :, None]
    if spec.noise_sigma > 0:
        cube = cube + rng.normal(
            0.0, spec.noise_sigma, size=(spec.rows, spec.cols, spec.bands)
        )
    # keep values finite even for pathological spec values; no [0,1]
    # re-clip, which would bias the class means
    cube = np.clip(cube, -1e6, 1e6)

    labels = np.where(classes == 0, 0, 1).astype(np.uint8)
    hc = HyperCube(
        spec.rows, spec.cols, spec.bands, spec.wavelengths,
        cube.astype(np.float32),
    )
    return hc, LabelMap(spec.rows, spec.cols, labels)


def make_rgb_projection(cube: HyperCube, cmf=None) -> HyperCube:
    """3-band control arm: the RGB reconstruction repackaged as a cube.

    Band order is blue, green, red so the nominal band centers
    (465, 549, 611 nm) are strictly increasing.
    """
    if cube.bands < 3:
        raise ValidationError("rgb projection needs at least 3 bands")
    rgb = rgbrecon.hsi_to_rgb(cube, cmf)
    data = np.stack((rgb[:, :, 2], rgb[:, :, 1], rgb[:, :, 0]), axis=2)
    return HyperCube(
        cube.rows, cube.cols, 3,
        np.array(RGB_BAND_NM, dtype=np.float64),
        data.astype(np.float32),
    )
