"""Pure-NumPy window-limited similar-neighbor search (twin of
neighbors_numba)."""

from __future__ import annotations

import numpy as np


def neighbor_scan(normed, u, l, out):
    rows, cols, d = normed.shape
    keep = l - 1
    for r in range(rows):
        r0 = max(0, r - u)
        r1 = min(rows - 1, r + u)
        for c in range(cols):
            c0 = max(0, c - u)
            c1 = min(cols - 1, c + u)
            win = normed[r0:r1 + 1, c0:c1 + 1, :]
            diff = win - normed[r, c, :][None, None, :]
            d2 = np.einsum("ijk,ijk->ij", diff, diff).ravel()
            rr, cc = np.meshgrid(
                np.arange(r0, r1 + 1), np.arange(c0, c1 + 1), indexing="ij"
            )
            flat = (rr * cols + cc).ravel()
            pix = r * cols + c
            mask = flat != pix
            d2 = d2[mask]
            flat = flat[mask]
            order = np.lexsort((flat, d2))[:keep]
            out[pix, 0] = pix
            out[pix, 1:] = flat[order]
    return out
