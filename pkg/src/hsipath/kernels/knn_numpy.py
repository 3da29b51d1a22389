"""Pure-NumPy k-nearest-neighbor scan (twin of knn_numba)."""

from __future__ import annotations

import numpy as np


def knn_scan(train, labels, queries, k, pred, conf):
    T = train.shape[0]
    tidx = np.arange(T)
    lab = labels.astype(np.int64)
    # chunk queries to bound the distance-matrix working set
    chunk = max(1, int(2e6) // max(T, 1))
    for s in range(0, queries.shape[0], chunk):
        q = queries[s:s + chunk]
        d2 = (
            np.einsum("ij,ij->i", q, q)[:, None]
            + np.einsum("ij,ij->i", train, train)[None, :]
            - 2.0 * (q @ train.T)
        )
        for row in range(q.shape[0]):
            order = np.lexsort((tidx, d2[row]))[:k]
            ones = int(lab[order].sum())
            pred[s + row] = 1 if 2 * ones > k else 0
            conf[s + row] = max(ones, k - ones) / k
    return pred, conf
