"""Angular blur ``A``: circular convolution along the polar angle axis.

Kernels are centered odd-length weight vectors in units of angular samples.
The named apertures use a 63-tap window; only the taps inside the aperture
are non-zero.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import PolarImage

__all__ = [
    "AngularKernel",
    "KERNEL_TAPS",
    "NAMED_KERNELS",
    "make_kernel",
    "custom_kernel",
    "angular_convolve",
    "angular_convolve_adjoint",
    "angular_convolve_array",
    "angular_convolve_adjoint_array",
    "angular_convolve_fft",
    "save_kernel",
    "load_kernel",
]

KERNEL_TAPS = 63
NAMED_KERNELS = ("Indicator-10", "Indicator-20", "Gaussian-1", "Gaussian-2", "Delta")


@dataclass(frozen=True)
class AngularKernel:
    weights: np.ndarray
    name: str
    N_phi: int
    symmetric: bool = field(default=False, repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).ravel()
        if w.size % 2 == 0:
            raise ValueError(f"kernel length must be odd, got {w.size}")
        if w.size > self.N_phi:
            raise ValueError(f"kernel length {w.size} exceeds N_phi={self.N_phi}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("kernel weights must be finite and non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"kernel weights must sum to one, got {w.sum()!r}")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "symmetric", bool(np.array_equal(w, w[::-1])))

    @property
    def K(self) -> int:
        return self.weights.size

    def check_grid(self, N_phi: int) -> None:
        if N_phi != self.N_phi:
            raise ValueError(f"kernel resolved for N_phi={self.N_phi}, grid has {N_phi}")


def _window(taps: np.ndarray, name: str, N_phi: int) -> AngularKernel:
    """Center ``taps`` in the 63-tap window, truncating centrally if longer."""
    if taps.size > KERNEL_TAPS:
        cut = (taps.size - KERNEL_TAPS) // 2
        taps = taps[cut:cut + KERNEL_TAPS]
    win = np.zeros(KERNEL_TAPS)
    off = (KERNEL_TAPS - taps.size) // 2
    win[off:off + taps.size] = taps
    return AngularKernel(win / win.sum(), name, N_phi)


def make_kernel(name: str, N_phi: int) -> AngularKernel:
    """Build a named aperture kernel resolved against ``N_phi`` angular samples.

    ``Indicator-a`` is a box of half-width ``floor(a N_phi / 720)`` samples for an
    aperture of ``a`` degrees, ``Gaussian-s`` is a sampled Gaussian with standard
    deviation ``s`` samples; both live in a 63-tap window and sum to one.
    ``Delta`` is the identity.
    """
    if name == "Delta":
        return AngularKernel(np.ones(1), "Delta", N_phi)
    match = re.fullmatch(r"(Indicator|Gaussian)-(\d+(?:\.\d+)?)", name)
    if match is None:
        raise ValueError(f"unknown kernel {name!r}; expected one of {NAMED_KERNELS}")
    if N_phi < KERNEL_TAPS:
        raise ValueError(f"named kernels need N_phi >= {KERNEL_TAPS}, got {N_phi}")
    kind, param = match.group(1), float(match.group(2))
    if kind == "Indicator":
        num = param * N_phi
        half = int(num // 720) if param.is_integer() else math.floor(num / 720.0)
        taps = np.ones(2 * half + 1)
    else:
        if param <= 0:
            raise ValueError("Gaussian width must be positive")
        lag = np.arange(KERNEL_TAPS) - KERNEL_TAPS // 2
        taps = np.exp(-0.5 * (lag / param) ** 2)
    return _window(taps, name, N_phi)


def custom_kernel(weights, N_phi: int) -> AngularKernel:
    w = np.asarray(weights, dtype=np.float64)
    return AngularKernel(w / w.sum(), "Custom", N_phi)


def _shifts(weights):
    c = len(weights) // 2
    return [(w, k - c) for k, w in enumerate(weights) if w != 0.0]


def angular_convolve_array(values, weights) -> np.ndarray:
    """``out[j, i] = sum_k w[k] p[(j - k + K // 2) mod N_phi, i]`` on axis -2."""
    values = np.asarray(values, dtype=np.float64)
    terms = _shifts(np.asarray(weights, dtype=np.float64))
    out = terms[0][0] * np.roll(values, terms[0][1], axis=-2)
    for w, s in terms[1:]:
        out += w * np.roll(values, s, axis=-2)
    return out


def angular_convolve_adjoint_array(values, weights) -> np.ndarray:
    """Circular correlation; the exact transpose of :func:`angular_convolve_array`."""
    return angular_convolve_array(values, np.asarray(weights, dtype=np.float64)[::-1])


def angular_convolve_fft(values, weights) -> np.ndarray:
    """Same map as :func:`angular_convolve_array`, computed with the FFT."""
    values = np.asarray(values, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    n = values.shape[-2]
    c = w.size // 2
    full = np.zeros(n)
    full[np.mod(np.arange(w.size) - c, n)] += w
    spec = np.fft.rfft(values, axis=-2) * np.fft.rfft(full)[:, None]
    return np.fft.irfft(spec, n=n, axis=-2)


def angular_convolve(p: PolarImage, w: AngularKernel) -> PolarImage:
    w.check_grid(p.spec.N_phi)
    return PolarImage(angular_convolve_array(p.values, w.weights), p.spec)


def angular_convolve_adjoint(p: PolarImage, w: AngularKernel) -> PolarImage:
    w.check_grid(p.spec.N_phi)
    return PolarImage(angular_convolve_adjoint_array(p.values, w.weights), p.spec)


def save_kernel(path, w: AngularKernel) -> Path:
    path = Path(path)
    lines = [str(w.K)] + [repr(float(v)) for v in w.weights]
    path.write_text("\n".join(lines) + "\n")
    return path


def load_kernel(path, N_phi: int) -> AngularKernel:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    K = int(lines[0])
    weights = np.array([float(v) for v in lines[1:]])
    if weights.size != K:
        raise ValueError(f"kernel file declares {K} taps but holds {weights.size}")
    return custom_kernel(weights, N_phi)
