"""Data model and persistence for hyperspectral cubes and label maps.

On-disk cube format (HSCUBE1): a text header line

    HSCUBE1 <rows> <cols> <bands>

followed by one line of space-separated wavelengths in nm, then
rows*cols*bands little-endian 32-bit floats in band-sequential order
(band-major, row-major within each band). Label maps are binary PGM
(P5, maxval 255) with the pixel values 0, 1 and the unlabeled
sentinel 255. Renders are binary PPM (P6, maxval 255).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ValidationError

UNLABELED = 255


@dataclass(frozen=True)
class HyperCube:
    """An r x c x d spectral data cube with a wavelength axis.

    data is float32, shape (rows, cols, bands), finite everywhere;
    wavelengths is float64, strictly increasing, one entry per band.
    """

    rows: int
    cols: int
    bands: int
    wavelengths: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.bands < 1:
            raise ValidationError("cube dimensions must be positive")
        wl = np.asarray(self.wavelengths, dtype=np.float64)
        if wl.shape != (self.bands,):
            raise ValidationError(
                "wavelength count %d does not match bands %d"
                % (wl.size, self.bands)
            )
        if not np.all(np.isfinite(wl)):
            raise ValidationError("wavelengths must be finite")
        if self.bands > 1 and not np.all(np.diff(wl) > 0):
            raise ValidationError("wavelengths must be strictly increasing")
        d = np.asarray(self.data)
        if d.shape != (self.rows, self.cols, self.bands):
            raise ValidationError(
                "data shape %s does not match (%d, %d, %d)"
                % (d.shape, self.rows, self.cols, self.bands)
            )
        if d.dtype != np.float32:
            d = d.astype(np.float32)
        if not np.all(np.isfinite(d)):
            raise ValidationError("cube contains non-finite samples")
        object.__setattr__(self, "wavelengths", wl)
        object.__setattr__(self, "data", d)

    @classmethod
    def from_array(cls, data, wavelengths) -> "HyperCube":
        data = np.asarray(data, dtype=np.float32)
        r, c, b = data.shape
        return cls(r, c, b, np.asarray(wavelengths, dtype=np.float64), data)


@dataclass(frozen=True)
class LabelMap:
    """Per-pixel class labels: 0, 1, or 255 for unlabeled."""

    rows: int
    cols: int
    labels: np.ndarray

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValidationError("label map dimensions must be positive")
        lab = np.asarray(self.labels)
        if lab.shape != (self.rows, self.cols):
            raise ValidationError(
                "label shape %s does not match (%d, %d)"
                % (lab.shape, self.rows, self.cols)
            )
        if lab.dtype != np.uint8:
            if np.any(lab < 0) or np.any(lab > 255):
                raise ValidationError("label values outside byte range")
            lab = lab.astype(np.uint8)
        bad = ~np.isin(lab, (0, 1, UNLABELED))
        if np.any(bad):
            raise ValidationError(
                "label map holds value %d; only 0, 1 and 255 are allowed"
                % int(lab[bad][0])
            )
        object.__setattr__(self, "labels", lab)

    @classmethod
    def from_array(cls, labels) -> "LabelMap":
        labels = np.asarray(labels)
        r, c = labels.shape
        return cls(r, c, labels)


@dataclass(frozen=True)
class PatchGrid:
    """Row-major grid of identically sized, disjoint patches."""

    patch_rows: int
    patch_cols: int
    origins: tuple = field(default_factory=tuple)

    @property
    def count(self) -> int:
        return len(self.origins)

    def bounds(self, index: int):
        """(r0, c0, r1, c1) of the patch, end-exclusive."""
        r0, c0 = self.origins[index]
        return r0, c0, r0 + self.patch_rows, c0 + self.patch_cols


def tile(rows: int, cols: int, patch_rows: int, patch_cols: int) -> PatchGrid:
    """Tile an image into whole patches; remainder rows/cols are dropped.

    Patch count is (rows // patch_rows) * (cols // patch_cols); origins
    are emitted row-major.
    """
    if min(rows, cols, patch_rows, patch_cols) < 1:
        raise ValidationError("tile arguments must be positive")
    if patch_rows > rows or patch_cols > cols:
        raise ValidationError(
            "patch %dx%d larger than image %dx%d"
            % (patch_rows, patch_cols, rows, cols)
        )
    nr = rows // patch_rows
    nc = cols // patch_cols
    origins = tuple(
        (i * patch_rows, j * patch_cols) for i in range(nr) for j in range(nc)
    )
    return PatchGrid(patch_rows, patch_cols, origins)


def band_normalize(cube: HyperCube, reference) -> HyperCube:
    """Divide every pixel spectrum by a per-band positive reference."""
    ref = np.asarray(reference, dtype=np.float64)
    if ref.shape != (cube.bands,):
        raise ValidationError(
            "reference length %d does not match bands %d"
            % (ref.size, cube.bands)
        )
    if not np.all(np.isfinite(ref)) or np.any(ref <= 0):
        raise ValidationError("reference entries must be positive and finite")
    out = cube.data.astype(np.float64) / ref[None, None, :]
    return HyperCube(cube.rows, cube.cols, cube.bands, cube.wavelengths,
                     out.astype(np.float32))


# ---------------------------------------------------------------------------
# cube format


def save_cube(cube: HyperCube, path) -> None:
    header = "HSCUBE1 %d %d %d\n" % (cube.rows, cube.cols, cube.bands)
    wl = " ".join(np.format_float_positional(w, trim="0") for w in cube.wavelengths)
    # band-sequential payload: band-major, then row-major within band
    payload = np.ascontiguousarray(
        np.moveaxis(cube.data, 2, 0), dtype="<f4"
    ).tobytes()
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write((wl + "\n").encode("ascii"))
        fh.write(payload)


def load_cube(path) -> HyperCube:
    with open(path, "rb") as fh:
        header = fh.readline()
        wl_line = fh.readline()
        payload = fh.read()
    parts = header.decode("ascii", errors="replace").split()
    if len(parts) != 4 or parts[0] != "HSCUBE1":
        raise FormatError("not an HSCUBE1 header: %r" % header[:40])
    try:
        rows, cols, bands = (int(p) for p in parts[1:])
    except ValueError as exc:
        raise FormatError("non-integer cube dimensions in header") from exc
    if min(rows, cols, bands) < 1:
        raise FormatError("non-positive cube dimensions in header")
    try:
        wavelengths = np.array(
            [float(tok) for tok in wl_line.decode("ascii").split()],
            dtype=np.float64,
        )
    except (UnicodeDecodeError, ValueError) as exc:
        raise FormatError("malformed wavelength line") from exc
    if wavelengths.size != bands:
        raise FormatError(
            "wavelength count %d does not match bands %d"
            % (wavelengths.size, bands)
        )
    expected = rows * cols * bands * 4
    if len(payload) != expected:
        raise FormatError(
            "payload holds %d bytes, expected %d" % (len(payload), expected)
        )
    flat = np.frombuffer(payload, dtype="<f4")
    data = np.moveaxis(flat.reshape(bands, rows, cols), 0, 2)
    if not np.all(np.isfinite(data)):
        raise FormatError("cube payload contains non-finite samples")
    if bands > 1 and not np.all(np.diff(wavelengths) > 0):
        raise FormatError("wavelengths not strictly increasing")
    try:
        return HyperCube(rows, cols, bands, wavelengths, np.ascontiguousarray(data))
    except ValidationError as exc:
        raise FormatError(str(exc)) from exc


# ---------------------------------------------------------------------------
# PGM label maps / PPM renders


def save_label_map(label_map: LabelMap, path) -> None:
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (label_map.cols, label_map.rows))
        fh.write(label_map.labels.tobytes())


def _read_pnm_header(fh, magic):
    """Parse a PNM header, honoring '#' comments; returns (w, h, maxval)."""
    if fh.read(2) != magic:
        raise FormatError("bad magic, expected %s" % magic.decode())
    fields = []
    while len(fields) < 3:
        tok = b""
        ch = fh.read(1)
        while ch.isspace():
            ch = fh.read(1)
        if ch == b"#":
            fh.readline()
            continue
        while ch and not ch.isspace():
            tok += ch
            ch = fh.read(1)
        if not tok:
            raise FormatError("truncated PNM header")
        if not tok.isdigit():
            raise FormatError("non-numeric PNM header token %r" % tok)
        fields.append(int(tok))
    return fields[0], fields[1], fields[2]


def load_label_map(path) -> LabelMap:
    with open(path, "rb") as fh:
        cols, rows, maxval = _read_pnm_header(fh, b"P5")
        if maxval != 255:
            raise FormatError("label PGM must use maxval 255, got %d" % maxval)
        raw = fh.read(rows * cols)
    if len(raw) != rows * cols:
        raise FormatError(
            "PGM payload holds %d bytes, expected %d" % (len(raw), rows * cols)
        )
    labels = np.frombuffer(raw, dtype=np.uint8).reshape(rows, cols)
    bad = ~np.isin(labels, (0, 1, UNLABELED))
    if np.any(bad):
        raise FormatError(
            "label value %d outside {0, 1, 255}" % int(labels[bad][0])
        )
    return LabelMap(rows, cols, labels.copy())


def save_render(rgb, path) -> None:
    """Write a float [0,1] (rows, cols, 3) image as binary PPM."""
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValidationError("render expects a (rows, cols, 3) image")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("render values must be finite")
    rows, cols = arr.shape[:2]
    bytes_img = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (cols, rows))
        fh.write(bytes_img.tobytes())


def load_render(path) -> np.ndarray:
    """Read a binary PPM back as float [0,1] (rows, cols, 3)."""
    with open(path, "rb") as fh:
        cols, rows, maxval = _read_pnm_header(fh, b"P6")
        if maxval != 255:
            raise FormatError("render PPM must use maxval 255")
        raw = fh.read(rows * cols * 3)
    if len(raw) != rows * cols * 3:
        raise FormatError("PPM payload size mismatch")
    img = np.frombuffer(raw, dtype=np.uint8).reshape(rows, cols, 3)
    return img.astype(np.float64) / 255.0
