"""Earth mover's distance between predicted residuals and noise draws.

With ``N`` samples on each side and uniform weights ``1/N`` the transport
polytope's vertices are scaled permutation matrices, so the optimal plan is
found by a linear assignment on the ``N x N`` Euclidean cost matrix.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import angconv

__all__ = [
    "TransportPlan",
    "EmdTrace",
    "StoppingMonitor",
    "StopDecision",
    "linear_assignment",
    "emd",
    "residuals",
    "stopping_monitor",
]


def linear_assignment(cost) -> np.ndarray:
    """Minimum-cost perfect matching; returns ``col[row]``.

    Shortest augmenting paths with row/column potentials (Hungarian method),
    ``O(N^3)``.
    """
    C = np.asarray(cost, dtype=np.float64)
    n = C.shape[0]
    if C.shape != (n, n):
        raise ValueError("cost matrix must be square")
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, dtype=np.int64)   # match[col] = row, 1-based, 0 = free
    way = np.zeros(n + 1, dtype=np.int64)
    for row in range(1, n + 1):
        match[0] = row
        col0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[col0] = True
            r0 = match[col0]
            free = ~used[1:]
            cur = C[r0 - 1] - u[r0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = col0
            cand = np.where(free, minv[1:], np.inf)
            col1 = int(np.argmin(cand)) + 1
            delta = cand[col1 - 1]
            u[match[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            col0 = col1
            if match[col0] == 0:
                break
        while col0:
            col1 = way[col0]
            match[col0] = match[col1]
            col0 = col1
    out = np.empty(n, dtype=np.int64)
    out[match[1:] - 1] = np.arange(n)
    return out


@dataclass(frozen=True)
class TransportPlan:
    flow: np.ndarray
    cost: float

    @property
    def permutation(self) -> np.ndarray:
        return np.argmax(self.flow, axis=1)


def _as_matrix(samples) -> np.ndarray:
    arr = np.asarray([np.ravel(s) for s in samples], dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("need a non-empty list of equally sized vectors")
    return arr


def pairwise_distances(a, b) -> np.ndarray:
    A = _as_matrix(a)
    B = _as_matrix(b)
    diff = A[:, None, :] - B[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def emd(samples_a, samples_b) -> tuple[float, TransportPlan]:
    """1-Wasserstein distance between two uniform empirical measures of equal size."""
    A = _as_matrix(samples_a)
    B = _as_matrix(samples_b)
    if A.shape[0] != B.shape[0]:
        raise ValueError(f"sample counts differ: {A.shape[0]} vs {B.shape[0]}")
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"vector dimensions differ: {A.shape[1]} vs {B.shape[1]}")
    n = A.shape[0]
    D = pairwise_distances(A, B)
    col = linear_assignment(D)
    flow = np.zeros((n, n))
    flow[np.arange(n), col] = 1.0 / n
    # exactly rounded, so the value does not depend on sample order (emd(a, b) == emd(b, a))
    cost = math.fsum(D[np.arange(n), col]) / n
    return cost, TransportPlan(flow, cost)


def residuals(net, y_polar, kernel) -> list[np.ndarray]:
    """Predicted noise ``y - A B(y)`` per validation sample, flattened.

    ``net`` is either a :class:`~polardeblur.nn.PolarUNet` or any callable
    mapping a ``(n, N_phi, N_r)`` array to an array of the same shape.
    """
    y = np.asarray(y_polar, dtype=np.float64)
    if y.ndim == 2:
        y = y[None]
    if hasattr(net, "parameters"):
        from .nn import net_apply
        out = net_apply(net, y)
    else:
        out = np.asarray(net(y), dtype=np.float64)
    if out.shape != y.shape:
        raise ValueError(f"deconvolver returned shape {out.shape}, expected {y.shape}")
    res = y - angconv.angular_convolve_array(out, getattr(kernel, "weights", kernel))
    return [r.ravel() for r in res]


@dataclass
class EmdTrace:
    """EMD per check with the mean test PSNR (and validation PSNR) alongside."""

    iterations: list = field(default_factory=list)
    emd: list = field(default_factory=list)
    psnr: list = field(default_factory=list)
    val_psnr: list = field(default_factory=list)

    def append(self, k: int, emd_k: float, psnr_k: float | None = None,
               val_psnr_k: float | None = None) -> None:
        if self.iterations and k <= self.iterations[-1]:
            raise ValueError("trace iterations must be strictly increasing")
        self.iterations.append(int(k))
        self.emd.append(float(emd_k))
        self.psnr.append(None if psnr_k is None else float(psnr_k))
        self.val_psnr.append(None if val_psnr_k is None else float(val_psnr_k))

    def __len__(self):
        return len(self.iterations)

    def to_csv(self, path) -> Path:
        path = Path(path)
        fmt = lambda v: "" if v is None else repr(v)
        with path.open("w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["iteration", "emd", "psnr", "val_psnr"])
            for row in zip(self.iterations, self.emd, self.psnr, self.val_psnr):
                out.writerow([row[0]] + [fmt(v) for v in row[1:]])
        return path

    @classmethod
    def from_csv(cls, path) -> "EmdTrace":
        trace = cls()
        opt = lambda v: float(v) if v not in (None, "") else None
        with Path(path).open() as fh:
            for row in csv.DictReader(fh):
                trace.append(int(row["iteration"]), float(row["emd"]), opt(row.get("psnr")),
                             opt(row.get("val_psnr")))
        return trace


@dataclass(frozen=True)
class StopDecision:
    stop: bool
    best_iteration: int
    best_index: int


class StoppingMonitor:
    """Running argmin of EMD with a patience counter.

    Ties never refresh the minimum, so the earliest minimizer wins.
    """

    def __init__(self, patience: int):
        if patience < 1:
            raise ValueError("patience must be >= 1")
        self.patience = patience
        self.best = np.inf
        self.best_iteration = None
        self.best_index = None
        self.stale = 0
        self.count = 0

    def update(self, k: int, value: float) -> StopDecision:
        if value < self.best:
            self.best = value
            self.best_iteration = k
            self.best_index = self.count
            self.stale = 0
        else:
            self.stale += 1
        self.count += 1
        return StopDecision(self.stale >= self.patience, self.best_iteration, self.best_index)


def stopping_monitor(trace: EmdTrace, check_every: int, patience: int) -> StopDecision:
    """Replay ``trace`` (entries at multiples of ``check_every``) through the rule."""
    if check_every < 1:
        raise ValueError("check_every must be >= 1")
    if len(trace) == 0:
        raise ValueError("empty trace")
    mon = StoppingMonitor(patience)
    decision = None
    for k, e in zip(trace.iterations, trace.emd):
        if k % check_every:
            continue
        decision = mon.update(k, e)
        if decision.stop:
            break
    if decision is None:
        raise ValueError("no trace entry falls on the check cadence")
    return StopDecision(decision.stop, decision.best_iteration,
                        trace.iterations.index(decision.best_iteration))
