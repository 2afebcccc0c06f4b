"""
Simulating data and inverting it
================================

A circular array of detectors on the unit circle records the pressure wave
started by an initial image.  This script simulates that sinogram for a
vessel phantom and inverts it with the finite-time backprojection.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from polardeblur import CartesianImage, forward, inverse, make_grid
from polardeblur.fbp import disc_mask, relative_error
from polardeblur.pipeline import synth_vessel_phantom

# a 64 x 64 grid: 201 detectors, 64 time samples on [0, 2]
spec = make_grid(64)
print(spec)

x = CartesianImage(synth_vessel_phantom(seed=3, M=64), spec)

# the sinogram has one row per detector and one column per time sample
g = forward(x)
print("sinogram", g.values.shape)

# invert. The inverse needs no time reversal, just one pass over the data
rec = inverse(g)
mask = disc_mask(64, 0.9)
print("relative error inside r < 0.9: %.3f" % relative_error(rec.values, x.values, mask))

fig, ax = plt.subplots(1, 3, figsize=(10, 3.4))
ax[0].imshow(x.values.T, origin="lower", cmap="gray")
ax[0].set_title("phantom")
ax[1].imshow(g.values, aspect="auto", cmap="gray")
ax[1].set_title("sinogram (detector x time)")
ax[2].imshow(rec.values.T, origin="lower", cmap="gray")
ax[2].set_title("backprojection")
for a in ax:
    a.set_xticks([]); a.set_yticks([])
fig.tight_layout()
fig.savefig("01_forward_and_inverse.png")
