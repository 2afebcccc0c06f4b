"""Finite-time filtered backprojection ``V`` for data on the unit circle.

For a pixel ``r`` and detector ``r0`` only the distance ``rho = |r - r0|``
enters the time integral, so the inner integral is evaluated once per
detector on a fine table of distances::

    H_k(rho) = int_0^T Phi_T(rho, t) g_k(t) / sqrt(|rho^2 - t^2|) dt

and then interpolated linearly at each ``(pixel, detector)`` pair.  The
vector field ``F(r) = sum_k dphi nu_k H_k(|r - r0_k|)`` is differentiated by
second-order finite differences; ``f = 2 / pi^2 div F``.

The time integral treats ``g_k`` as the piecewise-linear interpolant of its
samples (held constant on the last step up to ``T``) and integrates the
kernel against it by Gauss-Legendre quadrature; on the side ``t > rho`` the
substitution ``t = rho + s^2`` removes the inverse square-root singularity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import wavesim
from .grid import CartesianImage, GridSpec, Sinogram, detector_angles, pixel_centers, time_samples

__all__ = [
    "phi_T",
    "FbpKernelTable",
    "kernel_table",
    "inverse",
    "inverse_array",
    "left_inverse_residual",
    "disc_mask",
    "relative_error",
]

_GAUSS = np.polynomial.legendre.leggauss(8)
_TABLE_OVERSAMPLE = 8
_CACHE_LIMIT = 2_000_000


def phi_T(r1, r2, T: float = 2.0):
    """Finite-time kernel ``Phi_T(r1, r2)``; both branches, zero on ``r1 == r2``."""
    r1, r2 = np.broadcast_arrays(np.asarray(r1, dtype=np.float64), np.asarray(r2, dtype=np.float64))
    out = np.zeros(r1.shape)
    lo = r1 > r2
    hi = r1 < r2
    a = np.sqrt(T ** 2 - r2[lo] ** 2)
    b = np.sqrt(r1[lo] ** 2 - r2[lo] ** 2)
    out[lo] = 0.5 * np.log((a - b) / (a + b))
    out[hi] = np.arctan(np.sqrt(T ** 2 - r1[hi] ** 2) / np.sqrt(r2[hi] ** 2 - r1[hi] ** 2))
    return out


def _kernel_below(rho, t, T):
    # Phi_T / sqrt(rho^2 - t^2) for t < rho, written as -atanh(B/A)/B (regular at B = 0)
    A = np.sqrt(T ** 2 - t ** 2)
    B = np.sqrt(np.maximum(rho ** 2 - t ** 2, 0.0))
    ratio = np.minimum(B / A, 1.0 - 1e-15)
    safe = np.where(B > 1e-9, B, 1.0)
    return np.where(B > 1e-9, -np.arctanh(ratio) / safe, -1.0 / A)


def _kernel_above_ds(rho, s, T):
    # Phi_T / sqrt(t^2 - rho^2) dt / ds with t = rho + s^2
    t = rho + s * s
    phi = np.arctan2(np.sqrt(np.maximum(T ** 2 - rho ** 2, 0.0)), np.sqrt(np.maximum(t * t - rho * rho, 0.0)))
    return 2.0 * phi / np.sqrt(t + rho)


@dataclass(frozen=True)
class FbpKernelTable:
    """Weights ``W[j, n]`` with ``H(rho_j) = sum_n W[j, n] g(t_n)``."""

    rho: np.ndarray
    weights: np.ndarray

    @property
    def rho0(self) -> float:
        return float(self.rho[0])

    @property
    def drho(self) -> float:
        return float(self.rho[1] - self.rho[0])


def _product_weights(rho, t_nodes, T):
    """Integrate the kernel against piecewise-linear hat functions on ``t_nodes``."""
    x, wq = _GAUSS
    N_t = t_nodes.size
    edges = np.append(t_nodes, T)
    a = edges[:-1][None, :]
    b = edges[1:][None, :]
    rr = rho[:, None]
    W = np.zeros((rho.size, N_t))
    last = np.arange(N_t) == N_t - 1

    def scatter(tq, val, lo, hi):
        # val: integrand * quadrature weight at abscissae tq, shape (..., q)
        width = b - a
        right = np.where(last[None, :, None], 0.0, (tq - a[..., None]) / width[..., None])
        left = 1.0 - right
        left_sum = (val * left).sum(-1)
        right_sum = (val * right).sum(-1)
        W[:, :] += left_sum
        W[:, 1:] += right_sum[:, :-1]

    # t < rho part of each interval
    lo = a
    hi = np.minimum(b, rr)
    ok = hi > lo
    half = np.where(ok, 0.5 * (hi - lo), 0.0)
    mid = 0.5 * (hi + lo)
    tq = mid[..., None] + half[..., None] * x
    val = _kernel_below(rr[..., None], np.minimum(tq, rr[..., None]), T) * half[..., None] * wq
    scatter(tq, np.where(ok[..., None], val, 0.0), lo, hi)

    # t > rho part, in s = sqrt(t - rho)
    s_lo = np.sqrt(np.maximum(a - rr, 0.0))
    s_hi = np.sqrt(np.maximum(b - rr, 0.0))
    ok = s_hi > s_lo
    half = np.where(ok, 0.5 * (s_hi - s_lo), 0.0)
    sq = 0.5 * (s_hi + s_lo)[..., None] + half[..., None] * x
    tq = rr[..., None] + sq * sq
    val = _kernel_above_ds(rr[..., None], sq, T) * half[..., None] * wq
    scatter(tq, np.where(ok[..., None], val, 0.0), None, None)
    return W


def _midpoint_weights(rho, t_nodes, T):
    """Midpoint rule at ``t_{n+1/2}`` with the weight capped half a step from the singularity."""
    N_t = t_nodes.size
    dt = T / N_t
    tm = (np.arange(N_t) + 0.5) * dt
    rr = rho[:, None]
    gap = np.abs(rr - tm)
    t_eval = np.where((tm > rr) & (gap < 0.5 * dt), rr + 0.5 * dt, tm)
    k = np.where(t_eval > rr,
                 phi_T(rr, t_eval, T) / np.sqrt(np.maximum(t_eval ** 2 - rr ** 2, 1e-300)),
                 _kernel_below(rr, t_eval, T))
    k *= dt
    # sample at the midpoint by linear interpolation between neighbouring nodes
    W = np.zeros((rho.size, N_t))
    W += 0.5 * k
    W[:, 1:] += 0.5 * k[:, :-1]
    W[:, -1] += 0.5 * k[:, -1]
    return W


@lru_cache(maxsize=8)
def kernel_table(spec: GridSpec, quadrature: str = "product") -> FbpKernelTable:
    n = _TABLE_OVERSAMPLE * spec.M
    rho_max = spec.T * (1.0 - 1e-4)
    drho = rho_max / n
    rho = (np.arange(n) + 0.5) * drho
    t_nodes = time_samples(spec.N_t, spec.T)
    if quadrature == "product":
        W = _product_weights(rho, t_nodes, spec.T)
    elif quadrature == "midpoint":
        W = _midpoint_weights(rho, t_nodes, spec.T)
    else:
        raise ValueError(f"unknown quadrature {quadrature!r}")
    rho.flags.writeable = False
    W.flags.writeable = False
    return FbpKernelTable(rho, W)


def disc_mask(M: int, radius: float = 1.0) -> np.ndarray:
    c = pixel_centers(M)
    return np.hypot(c[:, None], c[None, :]) < radius


@dataclass
class _Geometry:
    active: np.ndarray   # flat indices of pixels where F is evaluated
    px: np.ndarray
    py: np.ndarray
    cos: np.ndarray
    sin: np.ndarray
    matrices: list | None


def _interp_coords(geo, table, k0, k1):
    rho = np.hypot(geo.px[:, None] - geo.cos[None, k0:k1], geo.py[:, None] - geo.sin[None, k0:k1])
    u = (rho - table.rho0) / table.drho
    u = np.clip(u, 0.0, table.rho.size - 1.0)
    i0 = np.minimum(np.floor(u).astype(np.int64), table.rho.size - 2)
    return i0, u - i0


@lru_cache(maxsize=4)
def _geometry(spec: GridSpec, quadrature: str) -> _Geometry:
    M = spec.M
    c = pixel_centers(M)
    X, Y = np.meshgrid(c, c, indexing="ij")
    keep = np.hypot(X, Y).ravel() < 1.0 + 3.0 * (2.0 / M)
    active = np.flatnonzero(keep)
    phi = detector_angles(spec.N_det)
    geo = _Geometry(active, X.ravel()[active], Y.ravel()[active], np.cos(phi), np.sin(phi), None)
    if active.size * spec.N_det <= _CACHE_LIMIT:
        table = kernel_table(spec, quadrature)
        geo.matrices = [_chunk_matrix(geo, table, 0, spec.N_det)]
    return geo


def _chunk_matrix(geo, table, k0, k1):
    """Sparse map from ``H[:, k0:k1]`` (flattened) to stacked ``(Fx, Fy)``."""
    i0, frac = _interp_coords(geo, table, k0, k1)
    kc = k1 - k0
    P = geo.px.size
    kk = np.arange(kc)[None, :]
    rows = np.broadcast_to(np.arange(P)[:, None], i0.shape)
    cols = []
    vals = []
    rr = []
    for di, wi in ((0, 1.0 - frac), (1, frac)):
        col = (i0 + di) * kc + kk
        for comp, trig in ((0, geo.cos[k0:k1]), (1, geo.sin[k0:k1])):
            rr.append((rows + comp * P).ravel())
            cols.append(col.ravel())
            vals.append((wi * trig[None, :]).ravel())
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rr), np.concatenate(cols))),
                         shape=(2 * P, table.rho.size * kc))


def inverse_array(values, spec: GridSpec, quadrature: str = "product") -> np.ndarray:
    """Batched ``V``: ``(..., N_det, N_t)`` sinograms to ``(..., M, M)`` images."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-2:] != spec.sinogram_shape:
        raise ValueError(f"sinogram shape {values.shape[-2:]} does not match grid {spec.sinogram_shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("sinogram values must be finite")
    lead = values.shape[:-2]
    g = values.reshape(-1, spec.N_det, spec.N_t)
    B = g.shape[0]
    table = kernel_table(spec, quadrature)
    geo = _geometry(spec, quadrature)
    # H[j, k, b]
    H = np.einsum("jn,bkn->jkb", table.weights, g, optimize=True)
    P = geo.active.size
    Fs = np.zeros((2 * P, B))
    if geo.matrices is not None:
        Fs += geo.matrices[0] @ H.reshape(-1, B)
    else:
        step = max(1, int(4_000_000 // max(P * B, 1)))
        kidx = None
        for k0 in range(0, spec.N_det, step):
            k1 = min(spec.N_det, k0 + step)
            i0, frac = _interp_coords(geo, table, k0, k1)
            kidx = np.arange(k0, k1)[None, :]
            vals = H[i0, kidx, :] * (1.0 - frac)[..., None] + H[i0 + 1, kidx, :] * frac[..., None]
            Fs[:P] += np.einsum("pkb,k->pb", vals, geo.cos[k0:k1])
            Fs[P:] += np.einsum("pkb,k->pb", vals, geo.sin[k0:k1])
    Fs *= 2.0 * np.pi / spec.N_det
    M = spec.M
    Fx = np.zeros((B, M * M))
    Fy = np.zeros((B, M * M))
    Fx[:, geo.active] = Fs[:P].T
    Fy[:, geo.active] = Fs[P:].T
    h = 2.0 / M
    div = (np.gradient(Fx.reshape(B, M, M), h, axis=1, edge_order=2)
           + np.gradient(Fy.reshape(B, M, M), h, axis=2, edge_order=2))
    out = (2.0 / np.pi ** 2) * div * disc_mask(M)
    return out.reshape(*lead, M, M)


def inverse(g: Sinogram, spec: GridSpec | None = None, quadrature: str = "product") -> CartesianImage:
    spec = spec or g.spec
    if g.spec != spec:
        raise ValueError("sinogram grid does not match the requested GridSpec")
    return CartesianImage(inverse_array(g.values, spec, quadrature), spec)


def relative_error(a, b, mask=None) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if mask is not None:
        a = a[..., mask]
        b = b[..., mask]
    den = np.linalg.norm(b)
    return 0.0 if den == 0 else float(np.linalg.norm(a - b) / den)


def left_inverse_residual(x: CartesianImage, spec: GridSpec | None = None, radius: float = 0.9,
                          quadrature: str = "product") -> float:
    """``|V U x - x| / |x|`` restricted to the disc of the given radius."""
    spec = spec or x.spec
    if not np.any(x.values):
        return 0.0
    rec = inverse_array(wavesim.forward_array(x.values, spec), spec, quadrature)
    return relative_error(rec, x.values, disc_mask(spec.M, radius))
