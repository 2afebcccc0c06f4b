"""
Self-supervised deblurring with EMD early stopping
==================================================

Train the polar U-Net on noisy blurred data only.  Extra noise with the same
statistics is added to the inputs, the network output is blurred again and
compared to the noisy data minus that extra noise.  Training stops when the
residuals look most like noise, measured by the earth mover's distance.

Takes about three minutes on one CPU core.
"""

import matplotlib
matplotlib.use("Agg")
import numpy as np
import torch

from polardeblur.cli import plot_trace
from polardeblur.pipeline import ExperimentConfig, build_dataset, evaluate, run_training

torch.set_num_threads(1)

cfg = ExperimentConfig(M=64, kernel="Indicator-20", alpha=0.05, iters=2000, seed=0)
records = build_dataset(cfg)

log = lambda k, e, v, t: print("iter %5d  EMD %.4f  test PSNR %.2f dB" % (k, e, t))
ckpt, trace = run_training(cfg, records, progress=log)

report = evaluate(ckpt, records, cfg)
print("stopped at iteration", ckpt.step)
print("network %.2f dB, blurred observation %.2f dB" % (report.mean, report.baseline_mean))

# EMD should fall while PSNR rises
plot_trace(trace, "03_trace.png")
ckpt.save("03_checkpoint")
