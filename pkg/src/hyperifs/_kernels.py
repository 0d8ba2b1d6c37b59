"""Compiled inner loops for Hausdorff distances on the 1-D grids."""
import numba
import numpy as np


@numba.njit(cache=True)
def _nearest_steps(row, circular, out):
    n = row.shape[0]
    first = -1
    last = -1
    for i in range(n):
        if row[i]:
            if first < 0:
                first = i
            last = i
    big = 4 * n + 4
    prev = last - n if circular else -big
    for i in range(n):
        if row[i]:
            prev = i
        out[i] = i - prev
    nxt = first + n if circular else big
    for i in range(n - 1, -1, -1):
        if row[i]:
            nxt = i
        d = nxt - i
        if d < out[i]:
            out[i] = d


@numba.njit(cache=True)
def hausdorff_steps(a, b, circular):
    """Row-wise Hausdorff distance, in node steps, between boolean masks."""
    rows, n = a.shape
    res = np.empty(rows, dtype=np.int64)
    da = np.empty(n, dtype=np.int64)
    db = np.empty(n, dtype=np.int64)
    for r in range(rows):
        _nearest_steps(a[r], circular, da)
        _nearest_steps(b[r], circular, db)
        m = 0
        for i in range(n):
            if a[r, i] and db[i] > m:
                m = db[i]
            if b[r, i] and da[i] > m:
                m = da[i]
        res[r] = m
    return res
