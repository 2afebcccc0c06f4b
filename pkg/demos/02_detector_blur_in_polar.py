"""
Detector blur is an angular convolution
=======================================

A detector of finite angular extent averages the pressure over an arc.  After
backprojection and a change to polar coordinates that averaging turns into a
circular convolution along the angle axis, so deblurring becomes a 1D
deconvolution per radius.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from polardeblur import CartesianImage, make_grid, make_kernel
from polardeblur import fbp, polar, wavesim
from polardeblur.angconv import angular_convolve_array
from polardeblur.pipeline import synth_vessel_phantom

spec = make_grid(128)
w = make_kernel("Indicator-20", spec.N_phi)   # 20 degree aperture
print(w.name, "nonzero taps:", np.count_nonzero(w.weights))

x = synth_vessel_phantom(seed=1, M=128)

# data blurred by the detectors, then the usual inverse and a polar resampling
g = wavesim.forward_blurred(CartesianImage(x, spec), w)
y_polar = polar.to_polar_array(fbp.inverse_array(g.values, spec), spec)

# the same thing predicted by blurring the polar phantom directly
predicted = angular_convolve_array(polar.to_polar_array(x, spec), w.weights)
print("mismatch: %.3f" % fbp.relative_error(y_polar, predicted))

fig, ax = plt.subplots(1, 3, figsize=(10, 3.4), sharey=True)
for a, img, title in zip(ax, (polar.to_polar_array(x, spec), predicted, y_polar),
                         ("P x", "A P x", "P V (blurred data)")):
    a.imshow(img, aspect="auto", cmap="gray")
    a.set_title(title)
    a.set_xlabel("radius index")
ax[0].set_ylabel("angle index")
fig.tight_layout()
fig.savefig("02_detector_blur_in_polar.png")
