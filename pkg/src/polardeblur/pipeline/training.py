"""Training loop with EMD early stopping, reconstruction and evaluation."""

from __future__ import annotations

import logging
from dataclasses import replace

import numpy as np
import torch

from .. import fbp, polar
from ..angconv import angular_convolve_array, make_kernel
from ..grid import CartesianImage, Sinogram
from ..nn import loss_dip, loss_nn2i, loss_ssltv, loss_supervised
from ..nn.adam import AdamState, adam_step
from ..nn.network import PolarUNet, net_apply
from ..noise import measurement_noise_array, push_forward, rng_for
from ..otstop import EmdTrace, StoppingMonitor, emd, residuals
from .checkpoint import Checkpoint, optimizer_snapshot
from .config import (STREAM_BATCH, STREAM_DIP_Z, STREAM_EMD_XI, STREAM_ETA, STREAM_INIT,
                     ExperimentConfig)
from .dataset import DatasetRecord, build_dataset, split
from .metrics import MetricsReport, psnr

log = logging.getLogger(__name__)
_DTYPES = {"float32": torch.float32, "float64": torch.float64}


def _eta_sigma(cfg, rec: DatasetRecord) -> float:
    if cfg.eta_sigma == "clean":
        return rec.sigma
    return cfg.alpha * float(np.abs(rec.noisy).max())


def noise_bank(cfg, records, stream: int, draws: int) -> np.ndarray:
    """``P V eta`` for every record and draw index, shape ``(n, draws, N_phi, N_r)``."""
    spec = cfg.grid
    xi = np.stack([measurement_noise_array(_eta_sigma(cfg, r), spec, cfg.seed, stream, r.id, count=draws)
                   for r in records])
    return push_forward(xi, spec)


def dip_input(cfg, record_id: int) -> np.ndarray:
    spec = cfg.grid
    return rng_for(cfg.seed, STREAM_DIP_Z, record_id).random(spec.polar_shape)


def _deconvolve(ckpt_or_net, y_polar, cfg=None, record_id=None):
    """Polar step of the chain: ``B(y_P)``, or ``B(z_P)`` for a DIP checkpoint."""
    if callable(ckpt_or_net) and not isinstance(ckpt_or_net, (torch.nn.Module, Checkpoint)):
        return np.asarray(ckpt_or_net(np.asarray(y_polar)), dtype=np.float64)
    if isinstance(ckpt_or_net, Checkpoint):
        net = ckpt_or_net.build_net()
        if ckpt_or_net.loss == "dip":
            z = np.asarray(ckpt_or_net.extra["dip_z"])
            return net_apply(net, z)
        return net_apply(net, y_polar)
    return net_apply(ckpt_or_net, y_polar)


def reconstruct(ckpt, y: Sinogram, cfg: ExperimentConfig | None = None) -> CartesianImage:
    """``C B(P V y)``: backproject, go polar, deconvolve, go back."""
    spec = y.spec
    if cfg is not None and cfg.grid != spec:
        raise ValueError("sinogram grid does not match the experiment grid")
    y_img = fbp.inverse_array(y.values, spec)
    y_polar = polar.to_polar_array(y_img, spec)
    x_polar = _deconvolve(ckpt, y_polar)
    return CartesianImage(polar.to_cartesian_array(x_polar, spec), spec)


def _psnrs(net, records, spec):
    if not records:
        return []
    out = net_apply(net, np.stack([r.y_polar for r in records]))
    rec = polar.to_cartesian_array(out, spec)
    return [psnr(rec[i], r.oracle) for i, r in enumerate(records)]


class _Trainer:
    def __init__(self, cfg: ExperimentConfig, records):
        self.cfg = cfg
        self.spec = cfg.grid
        self.kernel = make_kernel(cfg.kernel, self.spec.N_phi)
        self.dtype = _DTYPES[cfg.dtype]
        self.train = split(records, "train")
        self.val = split(records, "val")
        self.test = split(records, "test")
        self.net = PolarUNet(cfg.net).to(self.dtype)
        self.net.reset_parameters(int(rng_for(cfg.seed, STREAM_INIT).integers(2 ** 62)))
        self.params = list(self.net.parameters())
        self.opt = AdamState(lr=cfg.lr).init(self.params)
        self.t = lambda a: torch.as_tensor(np.asarray(a), dtype=self.dtype)

        if cfg.loss == "dip":
            self.dip_rec = self.test[cfg.dip_record]
            self.z = dip_input(cfg, self.dip_rec.id)
            self.dip_y = self.t(self.dip_rec.y_polar)
            self.zt = self.t(self.z)
            eval_recs = [self.dip_rec]
        else:
            self.y_train = self.t(np.stack([r.y_polar for r in self.train]))
            self.x_train = self.t(np.stack([r.x_polar for r in self.train]))
            eval_recs = self.val
        if cfg.loss == "nn2i":
            self.bank = None
            if cfg.eta_draws > 0:
                self.bank = self.t(noise_bank(cfg, self.train, STREAM_ETA, cfg.eta_draws))
        # reference noise for the EMD rule
        self.xi_ref = noise_bank(cfg, eval_recs, STREAM_EMD_XI, 1)[:, 0]
        self.eval_recs = eval_recs

    def batch(self, k):
        cfg = self.cfg
        rng = rng_for(cfg.seed, STREAM_BATCH, k)
        n = len(self.train)
        idx = np.sort(rng.choice(n, size=min(cfg.batch, n), replace=False))
        if cfg.loss != "nn2i":
            return idx, None
        if self.bank is not None:
            draw = rng.integers(cfg.eta_draws, size=idx.size)
            return idx, self.bank[idx, draw]
        xi = np.stack([measurement_noise_array(_eta_sigma(cfg, self.train[i]), self.spec, cfg.seed,
                                               STREAM_ETA, self.train[i].id, k) for i in idx])
        return idx, self.t(push_forward(xi, self.spec))

    def loss(self, k):
        cfg = self.cfg
        if cfg.loss == "dip":
            return loss_dip(self.net, self.zt, self.dip_y, self.kernel)
        idx, eta = self.batch(k)
        y = self.y_train[idx]
        if cfg.loss == "nn2i":
            return loss_nn2i(self.net, y, eta, self.kernel)
        if cfg.loss == "supervised":
            return loss_supervised(self.net, y, self.x_train[idx])
        return loss_ssltv(self.net, y, self.kernel, cfg.lam)

    def check(self):
        """``(EMD, eval-split PSNR, test PSNR)`` at the current weights."""
        if self.cfg.loss == "dip":
            out = net_apply(self.net, self.z)
            res = [(self.dip_rec.y_polar - angular_convolve_array(out, self.kernel.weights)).ravel()]
            val_psnr = psnr(polar.to_cartesian_array(out, self.spec), self.dip_rec.oracle)
            return emd(list(self.xi_ref), res)[0], val_psnr, val_psnr
        res = residuals(self.net, np.stack([r.y_polar for r in self.val]), self.kernel)
        e = emd(list(self.xi_ref.reshape(len(self.val), -1)), res)[0]
        return e, float(np.mean(_psnrs(self.net, self.val, self.spec))), \
            float(np.mean(_psnrs(self.net, self.test, self.spec)))

    def snapshot(self, k, trace, extra=None):
        ex = {"selected_iteration": k, "seed": self.cfg.seed, "kernel": self.cfg.kernel}
        if self.cfg.loss == "dip":
            ex["dip_z"] = self.z.tolist()
            ex["dip_record"] = self.dip_rec.id
        ex.update(extra or {})
        return Checkpoint.from_net(self.net, step=k, loss=self.cfg.loss, lam=self.cfg.lam,
                                   dtype=self.cfg.dtype, optimizer=optimizer_snapshot(self.opt),
                                   trace=trace, extra=ex)


def run_training(cfg: ExperimentConfig, records=None, progress=None):
    """Minimize the configured loss with Adam and select an iterate by the stop rule.

    Returns ``(checkpoint, trace)``; the trace holds validation EMD and mean
    test PSNR at every check.  ``stop='emd'`` keeps the EMD minimizer and halts
    after ``patience`` checks without a new minimum, ``'psnr-oracle'`` keeps
    the best PSNR on the validation split (the fitted image for DIP) and
    ``'fixed'`` keeps the last iterate.
    """
    records = build_dataset(cfg) if records is None else records
    tr = _Trainer(cfg, records)
    trace = EmdTrace()
    monitor = StoppingMonitor(cfg.patience)
    best = None
    stop_reason = "iterations"
    for k in range(cfg.iters + 1):
        if k % cfg.check_every == 0 or k == cfg.iters:
            e, val_psnr, test_psnr = tr.check()
            trace.append(k, e, test_psnr, val_psnr)
            score = {"emd": e, "psnr-oracle": -val_psnr, "fixed": -k}[cfg.stop]
            decision = monitor.update(k, score)
            if decision.best_iteration == k:
                best = tr.snapshot(k, trace)
            if progress is not None:
                progress(k, e, val_psnr, test_psnr)
            if decision.stop and cfg.stop != "fixed":
                stop_reason = "patience"
                break
        if k == cfg.iters:
            break
        loss = tr.loss(k)
        if not torch.isfinite(loss):
            log.warning("non-finite loss at iteration %d; keeping iteration %s", k, best.step)
            stop_reason = f"diverged at {k}"
            break
        grads = torch.autograd.grad(loss, tr.params)
        try:
            adam_step(tr.opt, tr.params, grads)
        except FloatingPointError as exc:
            log.warning("%s; keeping iteration %s", exc, best.step)
            stop_reason = f"diverged at {k}"
            break
    best.trace = trace
    best.extra["stop_reason"] = stop_reason
    best.extra["last_iteration"] = trace.iterations[-1]
    return best, trace


def evaluate(ckpt, records, cfg: ExperimentConfig) -> MetricsReport:
    """PSNR of ``C B(y_P)`` and of the observation ``V y`` against ``V U x``.

    For DIP every test image gets its own fitted network (``ckpt`` is ignored).
    """
    test = split(records, "test")
    spec = cfg.grid
    report = MetricsReport(method=cfg.loss)
    if cfg.loss == "dip":
        outs = []
        for j in range(len(test)):
            fitted, _ = run_training(replace(cfg, dip_record=j), records)
            outs.append(_deconvolve(fitted, None))
        out = np.stack(outs)
    else:
        out = _deconvolve(ckpt, np.stack([r.y_polar for r in test]))
    rec = polar.to_cartesian_array(out, spec)
    for i, r in enumerate(test):
        report.ids.append(r.id)
        report.psnr.append(psnr(rec[i], r.oracle))
        report.baseline.append(psnr(r.observation, r.oracle))
    return report
