"""Torch version of the angular blur whose backward pass is the exact adjoint."""

from __future__ import annotations

import torch


def _taps(weights):
    c = len(weights) // 2
    return [(float(w), k - c) for k, w in enumerate(weights) if w != 0.0]


def _conv(x, taps):
    out = taps[0][0] * torch.roll(x, taps[0][1], dims=-2)
    for w, s in taps[1:]:
        out = out + w * torch.roll(x, s, dims=-2)
    return out


class _AngularBlur(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x, weights):
        ctx.weights = weights
        return _conv(x, _taps(weights))

    @staticmethod
    def backward(ctx, grad):
        return _conv(grad, _taps(ctx.weights[::-1])), None


def angular_blur(x: torch.Tensor, weights) -> torch.Tensor:
    """Circular convolution along axis -2 (the angle axis of ``(..., N_phi, N_r)``)."""
    w = tuple(float(v) for v in getattr(weights, "weights", weights))
    return _AngularBlur.apply(x, w)
