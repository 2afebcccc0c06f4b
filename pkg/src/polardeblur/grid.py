"""Discretization grids and the array containers shared by all operators.

Conventions
-----------
* ``CartesianImage.values[i, j]`` is the value at ``(x_i, y_j)`` with pixel
  centers ``-1 + (2i + 1) / M``; the first axis is x.
* ``PolarImage.values[j, i]`` is the value at angle ``2 pi j / N_phi`` and
  radius ``(i + 0.5) / N_r``; angle is the slow axis.
* ``Sinogram.values[k, n]`` is the pressure at detector ``(cos phi_k, sin phi_k)``
  and time ``t_n = T n / N_t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "GridSpec",
    "CartesianImage",
    "PolarImage",
    "Sinogram",
    "make_grid",
    "pixel_centers",
    "polar_angles",
    "polar_radii",
    "detector_angles",
    "time_samples",
    "wrap_angle_index",
]


@dataclass(frozen=True)
class GridSpec:
    """Sizes of every grid used by the reconstruction chain."""

    M: int
    N_r: int
    N_phi: int
    N_det: int
    N_t: int
    T: float = 2.0

    def __post_init__(self):
        for name in ("M", "N_r", "N_phi", "N_det", "N_t"):
            if int(getattr(self, name)) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")

    @property
    def polar_shape(self) -> tuple[int, int]:
        return (self.N_phi, self.N_r)

    @property
    def image_shape(self) -> tuple[int, int]:
        return (self.M, self.M)

    @property
    def sinogram_shape(self) -> tuple[int, int]:
        return (self.N_det, self.N_t)

    def header(self) -> str:
        return (f"M={self.M} N_r={self.N_r} N_phi={self.N_phi} "
                f"N_det={self.N_det} N_t={self.N_t} T={self.T!r}")

    @classmethod
    def from_header(cls, text: str) -> "GridSpec":
        fields = dict(tok.split("=", 1) for tok in text.split() if "=" in tok)
        return cls(M=int(fields["M"]), N_r=int(fields["N_r"]),
                   N_phi=int(fields["N_phi"]), N_det=int(fields["N_det"]),
                   N_t=int(fields["N_t"]), T=float(fields.get("T", 2.0)))

    def to_dict(self) -> dict:
        return {"M": self.M, "N_r": self.N_r, "N_phi": self.N_phi,
                "N_det": self.N_det, "N_t": self.N_t, "T": self.T}


def make_grid(M: int, **overrides) -> GridSpec:
    """Full-sampling grid for an ``M x M`` image.

    ``N_r = M / 2``, ``N_phi = N_det = floor(pi M)`` and ``N_t = M``; any field
    can be overridden by keyword.

    >>> make_grid(64)
    GridSpec(M=64, N_r=32, N_phi=201, N_det=201, N_t=64, T=2.0)
    """
    if int(M) != M or M % 2 or M < 16:
        raise ValueError(f"M must be an even integer >= 16, got {M!r}")
    M = int(M)
    n_ang = math.floor(math.pi * M)
    spec = GridSpec(M=M, N_r=M // 2, N_phi=n_ang, N_det=n_ang, N_t=M, T=2.0)
    return replace(spec, **overrides) if overrides else spec


def pixel_centers(M: int) -> np.ndarray:
    return -1.0 + (2.0 * np.arange(M) + 1.0) / M


def polar_angles(N_phi: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(N_phi) / N_phi


def polar_radii(N_r: int) -> np.ndarray:
    return (np.arange(N_r) + 0.5) / N_r


def detector_angles(N_det: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(N_det) / N_det


def time_samples(N_t: int, T: float = 2.0) -> np.ndarray:
    return T * np.arange(N_t) / N_t


def wrap_angle_index(j, N_phi: int):
    return np.mod(j, N_phi)


def _frozen(values, shape, what) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.shape != tuple(shape):
        raise ValueError(f"{what} expects shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} values must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class CartesianImage:
    values: np.ndarray
    spec: GridSpec = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.spec.image_shape, "CartesianImage"))
        if self.spec.M % 2 or self.spec.M < 16:
            raise ValueError("CartesianImage needs an even M >= 16")

    role = "cartesian"


@dataclass(frozen=True)
class PolarImage:
    values: np.ndarray
    spec: GridSpec = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.spec.polar_shape, "PolarImage"))
        if self.spec.N_phi < 8 or self.spec.N_r < 4:
            raise ValueError("PolarImage needs N_phi >= 8 and N_r >= 4")

    role = "polar"

    def column(self, j: int) -> np.ndarray:
        """Angular row ``j``; the index wraps modulo ``N_phi``."""
        return self.values[wrap_angle_index(j, self.spec.N_phi)]


@dataclass(frozen=True)
class Sinogram:
    values: np.ndarray
    spec: GridSpec = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.spec.sinogram_shape, "Sinogram"))

    role = "sinogram"
