"""Numba window-limited similar-neighbor search.

For each pixel, ranks the other pixels of its clipped square window by
squared Euclidean distance between the provided (already normalized)
spectra; ties go to the lower row-major index, which the ascending
window scan plus strict-inequality insertion yields automatically.
Fiber 0 is always the pixel itself. No fastmath: orderings must match
a brute-force oracle exactly.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def neighbor_scan(normed, u, l, out):
    rows, cols, d = normed.shape
    keep = l - 1
    for pix in prange(rows * cols):
        r = pix // cols
        c = pix % cols
        r0 = max(0, r - u)
        r1 = min(rows - 1, r + u)
        c0 = max(0, c - u)
        c1 = min(cols - 1, c + u)
        best_d = np.full(keep, np.inf)
        best_i = np.full(keep, -1, dtype=np.int64)
        for rr in range(r0, r1 + 1):
            for cc in range(c0, c1 + 1):
                if rr == r and cc == c:
                    continue
                d2 = 0.0
                for b in range(d):
                    diff = normed[rr, cc, b] - normed[r, c, b]
                    d2 += diff * diff
                if keep > 0 and d2 < best_d[keep - 1]:
                    pos = keep - 1
                    while pos > 0 and d2 < best_d[pos - 1]:
                        best_d[pos] = best_d[pos - 1]
                        best_i[pos] = best_i[pos - 1]
                        pos -= 1
                    best_d[pos] = d2
                    best_i[pos] = rr * cols + cc
        out[pix, 0] = pix
        for m in range(keep):
            out[pix, m + 1] = best_i[m]
    return out
