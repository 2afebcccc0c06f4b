"""Measurement noise and its push-forward into the polar domain.

Every draw comes from a Philox (counter-based) generator keyed by
``(seed, *indices)``, so a draw depends only on its indices and never on the
order in which draws are made.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import fbp, polar
from .grid import GridSpec, PolarImage, Sinogram

__all__ = [
    "NoiseSpec",
    "rng_for",
    "sample_measurement_noise",
    "sample_polar_noise",
    "measurement_noise_array",
    "polar_noise_array",
    "push_forward",
]


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian white noise of level ``alpha`` relative to a sinogram maximum."""

    alpha: float
    seed: int = 0
    sigma: float | None = None

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.sigma is not None and self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    def resolve(self, reference) -> "NoiseSpec":
        """Fix ``sigma = alpha * max|reference|``."""
        peak = float(np.max(np.abs(np.asarray(getattr(reference, "values", reference)))))
        return replace(self, sigma=self.alpha * peak)

    def require_sigma(self) -> float:
        if self.sigma is None:
            raise ValueError("NoiseSpec.sigma is unresolved; call resolve() on a clean sinogram first")
        return self.sigma


def rng_for(seed: int, *indices: int) -> np.random.Generator:
    key = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *[int(i) for i in indices]])
    return np.random.Generator(np.random.Philox(key))


def measurement_noise_array(sigma: float, spec: GridSpec, seed: int, *indices: int, count: int | None = None):
    """White noise of std ``sigma``; ``count`` stacks independent draws ``0..count-1``."""
    if count is None:
        return sigma * rng_for(seed, *indices).standard_normal(spec.sinogram_shape)
    return np.stack([sigma * rng_for(seed, *indices, d).standard_normal(spec.sinogram_shape)
                     for d in range(count)])


def push_forward(xi, spec: GridSpec) -> np.ndarray:
    """``P V xi`` for a (batch of) sinogram noise arrays."""
    return polar.to_polar_array(fbp.inverse_array(xi, spec), spec)


def polar_noise_array(sigma: float, spec: GridSpec, seed: int, *indices: int, count: int | None = None):
    return push_forward(measurement_noise_array(sigma, spec, seed, *indices, count=count), spec)


def sample_measurement_noise(ns: NoiseSpec, spec: GridSpec, *indices: int) -> Sinogram:
    return Sinogram(measurement_noise_array(ns.require_sigma(), spec, ns.seed, *indices), spec)


def sample_polar_noise(ns: NoiseSpec, spec: GridSpec, *indices: int) -> PolarImage:
    """Correlated polar noise ``P V xi`` with ``xi`` white of std ``sigma``."""
    return PolarImage(polar_noise_array(ns.require_sigma(), spec, ns.seed, *indices), spec)
