"""Ideal forward operator: spectral wave propagation and detector sampling."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import angconv, polar
from ._interp import apply_rows, bilinear_matrix
from .grid import CartesianImage, GridSpec, Sinogram, detector_angles, time_samples

__all__ = [
    "FrequencyGrid",
    "frequency_grid",
    "wave_snapshot",
    "forward",
    "forward_array",
    "forward_blurred",
    "forward_blurred_array",
]

PAD = True


@dataclass(frozen=True)
class FrequencyGrid:
    kappa1: np.ndarray
    kappa2: np.ndarray

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.kappa1, self.kappa2)


@lru_cache(maxsize=16)
def frequency_grid(n: int, h: float) -> FrequencyGrid:
    """Angular FFT frequencies for an ``n x n`` grid of spacing ``h``."""
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    k1.flags.writeable = False
    k2.flags.writeable = False
    return FrequencyGrid(k1, k2)


def _padded(values: np.ndarray, pad: bool) -> tuple[np.ndarray, int]:
    M = values.shape[-1]
    if not pad:
        return values, 0
    off = M // 2
    out = np.zeros(values.shape[:-2] + (2 * M, 2 * M))
    out[..., off:off + M, off:off + M] = values
    return out, off


def _snapshots(values: np.ndarray, times, pad: bool):
    """Yield ``(t, field)`` on the (possibly padded) grid, batched over leading axes."""
    M = values.shape[-1]
    work, _ = _padded(values, pad)
    n = work.shape[-1]
    kmag = frequency_grid(n, 2.0 / M).magnitude
    spectrum = np.fft.fft2(work)
    for t in times:
        yield t, np.fft.ifft2(spectrum * np.cos(t * kmag)).real


def wave_snapshot(x: CartesianImage, t: float, pad: bool = PAD) -> CartesianImage:
    """Pressure ``u(., t)`` for initial pressure ``x`` and zero initial velocity."""
    if t < 0:
        raise ValueError("t must be non-negative")
    M = x.spec.M
    (_, field), = _snapshots(x.values, [t], pad)
    off = M // 2 if pad else 0
    return CartesianImage(field[off:off + M, off:off + M], x.spec)


@lru_cache(maxsize=8)
def _detector_sampler(M: int, N_det: int, pad: bool):
    phi = detector_angles(N_det)
    n = 2 * M if pad else M
    lo = -2.0 if pad else -1.0
    return bilinear_matrix(np.cos(phi), np.sin(phi), n, lo, 2.0 / M)


def forward_array(values, spec: GridSpec, pad: bool = PAD) -> np.ndarray:
    """Batched ``U``: ``(..., M, M)`` images to ``(..., N_det, N_t)`` sinograms."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-2:] != spec.image_shape:
        raise ValueError(f"image shape {values.shape[-2:]} does not match grid {spec.image_shape}")
    sampler = _detector_sampler(spec.M, spec.N_det, pad)
    lead = values.shape[:-2]
    out = np.empty(lead + spec.sinogram_shape)
    for idx, (_, field) in enumerate(_snapshots(values, time_samples(spec.N_t, spec.T), pad)):
        out[..., idx] = apply_rows(sampler, field, 2, (spec.N_det,))
    return out


def forward(x: CartesianImage, spec: GridSpec | None = None, pad: bool = PAD) -> Sinogram:
    spec = spec or x.spec
    if x.spec != spec:
        raise ValueError("image grid does not match the requested GridSpec")
    return Sinogram(forward_array(x.values, spec, pad), spec)


def forward_blurred_array(values, kernel, spec: GridSpec, pad: bool = PAD) -> np.ndarray:
    """Batched ``U C A P``."""
    p = polar.to_polar_array(values, spec)
    p = angconv.angular_convolve_array(p, kernel.weights)
    return forward_array(polar.to_cartesian_array(p, spec), spec, pad)


def forward_blurred(x: CartesianImage, w, spec: GridSpec | None = None, pad: bool = PAD) -> Sinogram:
    """Finite-aperture data ``U C A P x``."""
    spec = spec or x.spec
    if x.spec != spec:
        raise ValueError("image grid does not match the requested GridSpec")
    w.check_grid(spec.N_phi)
    return Sinogram(forward_blurred_array(x.values, w, spec, pad), spec)
