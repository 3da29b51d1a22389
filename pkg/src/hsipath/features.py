"""Shared feature-space types used by the extractors and classifiers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cube_io import HyperCube
from .errors import ValidationError


@dataclass(frozen=True)
class FeatureStack:
    """An r x c x q stack of per-pixel feature vectors (float64, finite)."""

    rows: int
    cols: int
    dim: int
    data: np.ndarray

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.dim < 1:
            raise ValidationError("feature stack dimensions must be positive")
        d = np.asarray(self.data, dtype=np.float64)
        if d.shape != (self.rows, self.cols, self.dim):
            raise ValidationError(
                "feature data shape %s does not match (%d, %d, %d)"
                % (d.shape, self.rows, self.cols, self.dim)
            )
        if not np.all(np.isfinite(d)):
            raise ValidationError("feature stack contains non-finite values")
        object.__setattr__(self, "data", d)

    @classmethod
    def from_array(cls, data) -> "FeatureStack":
        data = np.asarray(data, dtype=np.float64)
        r, c, q = data.shape
        return cls(r, c, q, data)

    @classmethod
    def from_cube(cls, cube: HyperCube) -> "FeatureStack":
        return cls.from_array(cube.data.astype(np.float64))

    def matrix(self) -> np.ndarray:
        """Pixel-major (rows*cols, dim) view of the features."""
        return self.data.reshape(self.rows * self.cols, self.dim)

    def to_cube(self) -> HyperCube:
        """Repackage as a cube; feature indices stand in for wavelengths."""
        return HyperCube.from_array(
            self.data.astype(np.float32), np.arange(self.dim, dtype=np.float64)
        )


@dataclass(frozen=True)
class LabeledSet:
    """Flat pixel indices into a patch plus their binary labels."""

    indices: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        lab = np.asarray(self.labels, dtype=np.uint8)
        if idx.ndim != 1 or lab.shape != idx.shape:
            raise ValidationError("indices and labels must be equal-length 1-D")
        if idx.size == 0:
            raise ValidationError("labeled set is empty")
        if np.unique(idx).size != idx.size:
            raise ValidationError("labeled set indices must be unique")
        if np.any(idx < 0):
            raise ValidationError("labeled set indices must be nonnegative")
        if not np.all(np.isin(lab, (0, 1))):
            raise ValidationError("labeled set labels must be 0 or 1")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "labels", lab)

    @property
    def size(self) -> int:
        return int(self.indices.size)

    def has_both_classes(self) -> bool:
        return bool(np.any(self.labels == 0) and np.any(self.labels == 1))


def minmax_scale(data: np.ndarray) -> np.ndarray:
    """Scale each last-axis channel to [0,1]; constant channels map to 0."""
    arr = np.asarray(data, dtype=np.float64)
    lo = arr.min(axis=tuple(range(arr.ndim - 1)), keepdims=True)
    hi = arr.max(axis=tuple(range(arr.ndim - 1)), keepdims=True)
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    out = (arr - lo) / safe
    return np.where(span > 0, out, 0.0)
