"""Numba k-nearest-neighbor scan.

Exact semantics (no fastmath): squared Euclidean distances accumulated
in index order, neighbor ties broken toward the lower training index
(automatic under strict-inequality insertion with an ascending scan),
vote ties toward class 0.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def knn_scan(train, labels, queries, k, pred, conf):
    T, d = train.shape
    Q = queries.shape[0]
    for qi in prange(Q):
        best_d = np.full(k, np.inf)
        best_i = np.full(k, -1, dtype=np.int64)
        for t in range(T):
            d2 = 0.0
            for b in range(d):
                diff = train[t, b] - queries[qi, b]
                d2 += diff * diff
            if d2 < best_d[k - 1]:
                pos = k - 1
                while pos > 0 and d2 < best_d[pos - 1]:
                    best_d[pos] = best_d[pos - 1]
                    best_i[pos] = best_i[pos - 1]
                    pos -= 1
                best_d[pos] = d2
                best_i[pos] = t
        ones = 0
        for m in range(k):
            ones += labels[best_i[m]]
        if 2 * ones > k:
            pred[qi] = 1
        else:
            pred[qi] = 0
        if 2 * ones >= k:
            conf[qi] = ones / k
        else:
            conf[qi] = (k - ones) / k
    return pred, conf
