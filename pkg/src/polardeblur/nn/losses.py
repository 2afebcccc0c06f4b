"""Training losses for the polar deconvolver.

All losses take batched tensors shaped ``(B, N_phi, N_r)`` and return a scalar
tensor; they average the squared norm over the batch (sum over pixels).
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .blur import angular_blur

LOSS_KINDS = ("nn2i", "supervised", "ssltv", "dip")


@dataclass(frozen=True)
class LossKind:
    name: str
    lam: float = 0.0

    def __post_init__(self):
        if self.name not in LOSS_KINDS:
            raise ValueError(f"unknown loss {self.name!r}; expected one of {LOSS_KINDS}")
        if self.name == "ssltv" and self.lam < 0:
            raise ValueError("TV weight must be non-negative")


def _apply(net, x):
    return net(x.unsqueeze(1)).squeeze(1)


def _sqnorm(r):
    return r.pow(2).flatten(1).sum(1).mean()


def loss_nn2i(net, y, eta, kernel):
    """``mean_n |A B(y + eta) - (y - eta)|^2``."""
    return _sqnorm(angular_blur(_apply(net, y + eta), kernel) - (y - eta))


def loss_supervised(net, y, x):
    return _sqnorm(_apply(net, y) - x)


def total_variation(u):
    """Anisotropic TV per sample: circular along angle, one-sided along radius."""
    d_phi = u - torch.roll(u, -1, dims=-2)
    d_r = u[..., :, 1:] - u[..., :, :-1]
    return d_phi.abs().flatten(1).sum(1) + d_r.abs().flatten(1).sum(1)


def loss_ssltv(net, y, kernel, lam):
    out = _apply(net, y)
    data = angular_blur(out, kernel) - y
    return (data.pow(2).flatten(1).sum(1) + lam * total_variation(out)).mean()


def loss_dip(net, z, y, kernel):
    """``|A B(z) - y|^2`` for a fixed input ``z``; ``z`` and ``y`` may be single images."""
    if z.dim() == 2:
        z, y = z[None], y[None]
    return _sqnorm(angular_blur(_apply(net, z), kernel) - y)


def value_and_grad(loss_fn, net, *args):
    """Loss value and gradients (ordered like ``net.parameters()``)."""
    params = [p for p in net.parameters()]
    loss = loss_fn(net, *args)
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    grads = [torch.zeros_like(p) if g is None else g for p, g in zip(params, grads)]
    return float(loss.detach()), grads
