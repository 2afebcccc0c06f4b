"""Cartesian <-> polar resampling (the discrete ``P`` and ``C``).

Both maps are sparse bilinear interpolation matrices built once per grid.
``P`` samples the image at ``(r_i cos phi_j, r_i sin phi_j)`` with zeros
outside the pixel lattice; ``C`` interpolates circularly in angle, clamps to
the innermost and outermost rings and is exactly zero outside the unit disc.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from ._interp import apply_rows, bilinear_matrix
from .grid import CartesianImage, GridSpec, PolarImage, pixel_centers, polar_angles, polar_radii

__all__ = ["to_polar", "to_cartesian", "to_polar_array", "to_cartesian_array",
           "polar_matrix", "cartesian_matrix"]


@lru_cache(maxsize=8)
def polar_matrix(M: int, N_phi: int, N_r: int) -> sp.csr_matrix:
    phi = polar_angles(N_phi)[:, None]
    r = polar_radii(N_r)[None, :]
    return bilinear_matrix(r * np.cos(phi), r * np.sin(phi), M, -1.0, 2.0 / M)


@lru_cache(maxsize=8)
def cartesian_matrix(M: int, N_phi: int, N_r: int) -> sp.csr_matrix:
    c = pixel_centers(M)
    X, Y = np.meshgrid(c, c, indexing="ij")
    r = np.hypot(X, Y).ravel()
    v = np.mod(np.arctan2(Y, X).ravel(), 2.0 * np.pi) * N_phi / (2.0 * np.pi)
    j0f = np.floor(v)
    b = v - j0f
    j0 = np.mod(j0f.astype(np.int64), N_phi)
    j1 = np.mod(j0 + 1, N_phi)

    u = np.clip(r * N_r - 0.5, 0.0, N_r - 1.0)
    i0 = np.minimum(np.floor(u).astype(np.int64), N_r - 2)
    a = u - i0
    inside = r < 1.0
    pix = np.arange(M * M)

    rows, cols, vals = [], [], []
    for jj, wj in ((j0, 1.0 - b), (j1, b)):
        for ii, wi in ((i0, 1.0 - a), (i0 + 1, a)):
            rows.append(pix[inside])
            cols.append((jj * N_r + ii)[inside])
            vals.append((wj * wi)[inside])
    mat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(M * M, N_phi * N_r))
    mat.sum_duplicates()
    return mat


def _check(shape, expected, what):
    if tuple(shape) != tuple(expected):
        raise ValueError(f"{what} shape {tuple(shape)} does not match grid {tuple(expected)}")


def to_polar_array(values, spec: GridSpec) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    _check(values.shape[-2:], spec.image_shape, "image")
    return apply_rows(polar_matrix(spec.M, spec.N_phi, spec.N_r), values, 2, spec.polar_shape)


def to_cartesian_array(values, spec: GridSpec) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    _check(values.shape[-2:], spec.polar_shape, "polar image")
    return apply_rows(cartesian_matrix(spec.M, spec.N_phi, spec.N_r), values, 2, spec.image_shape)


def to_polar(x: CartesianImage, spec: GridSpec | None = None) -> PolarImage:
    spec = spec or x.spec
    return PolarImage(to_polar_array(x.values, spec), spec)


def to_cartesian(p: PolarImage, spec: GridSpec | None = None) -> CartesianImage:
    spec = spec or p.spec
    return CartesianImage(to_cartesian_array(p.values, spec), spec)
