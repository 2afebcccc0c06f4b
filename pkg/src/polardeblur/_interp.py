"""Sparse bilinear sampling matrices on pixel-centered grids."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def bilinear_matrix(px, py, n: int, lo: float, h: float) -> sp.csr_matrix:
    """Matrix sampling an ``n x n`` pixel-centered grid at points ``(px, py)``.

    Pixel ``(i, j)`` has center ``(lo + (i + 0.5) h, lo + (j + 0.5) h)`` and
    flat index ``i * n + j``.  Neighbours outside the grid contribute zero.
    """
    px = np.asarray(px, dtype=np.float64).ravel()
    py = np.asarray(py, dtype=np.float64).ravel()
    u = (px - lo) / h - 0.5
    v = (py - lo) / h - 0.5
    i0 = np.floor(u).astype(np.int64)
    j0 = np.floor(v).astype(np.int64)
    a = u - i0
    b = v - j0
    rows, cols, vals = [], [], []
    point = np.arange(px.size)
    for di, wi in ((0, 1.0 - a), (1, a)):
        for dj, wj in ((0, 1.0 - b), (1, b)):
            ii = i0 + di
            jj = j0 + dj
            ok = (ii >= 0) & (ii < n) & (jj >= 0) & (jj < n)
            rows.append(point[ok])
            cols.append(ii[ok] * n + jj[ok])
            vals.append((wi * wj)[ok])
    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(px.size, n * n),
    )
    mat.sum_duplicates()
    return mat


def apply_rows(mat: sp.spmatrix, values: np.ndarray, in_ndim: int, out_shape) -> np.ndarray:
    """Apply ``mat`` to the trailing ``in_ndim`` axes of ``values`` (batched)."""
    values = np.asarray(values, dtype=np.float64)
    lead = values.shape[: values.ndim - in_ndim]
    flat = values.reshape(int(np.prod(lead, dtype=np.int64)), -1)
    out = np.asarray(mat @ flat.T).T
    return out.reshape(*lead, *out_shape)
