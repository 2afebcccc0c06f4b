"""Self-supervised angular deblurring for 2D photoacoustic tomography.

The reconstruction chain is

    sinogram --V--> image --P--> polar --B--> polar --C--> image

where ``V`` is a finite-time filtered backprojection, ``P``/``C`` switch between
Cartesian and polar grids and ``B`` is a network trained with the
Noisier2Inverse loss and stopped by an earth mover's distance rule.
"""

from .grid import CartesianImage, GridSpec, PolarImage, Sinogram, make_grid
from .angconv import AngularKernel, angular_convolve, angular_convolve_adjoint, make_kernel
from .wavesim import forward, forward_blurred, wave_snapshot
from .fbp import inverse, left_inverse_residual
from .polar import to_cartesian, to_polar

__all__ = [
    "AngularKernel",
    "CartesianImage",
    "GridSpec",
    "PolarImage",
    "Sinogram",
    "angular_convolve",
    "angular_convolve_adjoint",
    "forward",
    "forward_blurred",
    "inverse",
    "left_inverse_residual",
    "make_grid",
    "make_kernel",
    "to_cartesian",
    "to_polar",
    "wave_snapshot",
]

__version__ = "0.1.0"
