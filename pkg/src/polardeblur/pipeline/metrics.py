"""PSNR against the sharp oracle ``V U x``."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PSNR_CAP = 99.0


def psnr(reconstruction, oracle, peak: float | None = None) -> float:
    """``10 log10(peak^2 / MSE)`` with ``peak = max(oracle)``; exact matches give 99 dB."""
    rec = np.asarray(reconstruction, dtype=np.float64)
    ref = np.asarray(oracle, dtype=np.float64)
    mse = float(np.mean((rec - ref) ** 2))
    peak = float(ref.max()) if peak is None else float(peak)
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * np.log10(peak ** 2 / mse))


@dataclass
class MetricsReport:
    ids: list = field(default_factory=list)
    psnr: list = field(default_factory=list)
    baseline: list = field(default_factory=list)
    method: str = "nn2i"

    @property
    def mean(self) -> float:
        return float(np.mean(self.psnr))

    @property
    def std(self) -> float:
        return float(np.std(self.psnr))

    @property
    def baseline_mean(self) -> float:
        return float(np.mean(self.baseline))

    @property
    def gain(self) -> float:
        return self.mean - self.baseline_mean

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["id", "psnr", "baseline_psnr"])
            for i, p, b in zip(self.ids, self.psnr, self.baseline):
                out.writerow([i, repr(float(p)), repr(float(b))])
            out.writerow(["mean", repr(self.mean), repr(self.baseline_mean)])
            out.writerow(["std", repr(self.std), repr(float(np.std(self.baseline)))])
        return path

    def to_bytes(self) -> bytes:
        rows = [f"{i},{float(p)!r},{float(b)!r}" for i, p, b in zip(self.ids, self.psnr, self.baseline)]
        return ("\n".join(rows) + "\n").encode()


TABLE_KERNELS = ("Indicator-10", "Indicator-20", "Gaussian-1", "Gaussian-2")
TABLE_ALPHAS = (0.02, 0.05, 0.10)


def write_table(path, results: dict) -> Path:
    """Table-style CSV: one row per method, one column per (kernel, alpha).

    ``results`` maps ``(method, kernel, alpha)`` to a PSNR in dB; missing cells
    stay empty.
    """
    path = Path(path)
    methods = sorted({k[0] for k in results}, key=lambda m: ("DIP", "SSLTV", "Ours").index(m)
                     if m in ("DIP", "SSLTV", "Ours") else 9)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["method"] + [f"{k}/{a:.2f}" for k in TABLE_KERNELS for a in TABLE_ALPHAS])
        for m in methods:
            row = [m]
            for k in TABLE_KERNELS:
                for a in TABLE_ALPHAS:
                    val = results.get((m, k, a))
                    row.append("" if val is None else f"{val:.2f}")
            out.writerow(row)
    return path
