"""U-Net style encoder-decoder on polar grids.

Every 3x3 convolution pads circularly along the angle axis and by reflection
along the radius axis.  Inputs whose sizes are not multiples of
``2 ** (levels - 1)`` are padded the same way before the first layer and
cropped after the last one.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn as tnn
import torch.nn.functional as F

__all__ = ["NetConfig", "PolarUNet", "net_apply", "pad_amounts"]


@dataclass(frozen=True)
class NetConfig:
    levels: int = 4
    base_width: int = 8
    convs_per_level: int = 2
    residual: bool = False

    @property
    def widths(self) -> list[int]:
        return [self.base_width * 2 ** level for level in range(self.levels)]

    def to_dict(self) -> dict:
        return asdict(self)


def _pad_polar(x, amount=1):
    x = F.pad(x, (amount, amount, 0, 0), mode="reflect") if x.shape[-1] > amount else \
        F.pad(x, (amount, amount, 0, 0), mode="replicate")
    return F.pad(x, (0, 0, amount, amount), mode="circular")


class PolarConv(tnn.Conv2d):
    def __init__(self, cin, cout):
        super().__init__(cin, cout, kernel_size=3, padding=0)

    def forward(self, x):
        return super().forward(_pad_polar(x))


class _Block(tnn.Sequential):
    def __init__(self, cin, cout, depth):
        layers = []
        for i in range(depth):
            layers += [PolarConv(cin if i == 0 else cout, cout), tnn.ReLU()]
        super().__init__(*layers)


def pad_amounts(size: int, multiple: int) -> tuple[int, int]:
    extra = (-size) % multiple
    return extra // 2, extra - extra // 2


class PolarUNet(tnn.Module):
    """Deconvolver ``B(.; theta)`` mapping ``(B, 1, N_phi, N_r)`` to the same shape."""

    def __init__(self, config: NetConfig = NetConfig()):
        super().__init__()
        self.config = config
        widths = config.widths
        self.down = tnn.ModuleList()
        cin = 1
        for w in widths:
            self.down.append(_Block(cin, w, config.convs_per_level))
            cin = w
        self.up = tnn.ModuleList()
        self.merge = tnn.ModuleList()
        for w in reversed(widths[:-1]):
            self.up.append(PolarConv(cin, w))
            self.merge.append(_Block(2 * w, w, config.convs_per_level))
            cin = w
        self.head = tnn.Conv2d(cin, 1, kernel_size=1)

    @property
    def multiple(self) -> int:
        return 2 ** (self.config.levels - 1)

    def reset_parameters(self, seed: int) -> "PolarUNet":
        """Uniform He fan-in initialization, zero biases, reproducible from ``seed``."""
        gen = torch.Generator().manual_seed(int(seed))
        with torch.no_grad():
            for _, mod in sorted(self.named_modules(), key=lambda kv: kv[0]):
                if isinstance(mod, tnn.Conv2d):
                    fan_in = mod.in_channels * mod.kernel_size[0] * mod.kernel_size[1]
                    bound = math.sqrt(6.0 / fan_in)
                    w = torch.rand(mod.weight.shape, generator=gen, dtype=torch.float64)
                    mod.weight.copy_((2.0 * w - 1.0) * bound)
                    mod.bias.zero_()
        return self

    def forward(self, x):
        n_phi, n_r = x.shape[-2:]
        ap = pad_amounts(n_phi, self.multiple)
        rp = pad_amounts(n_r, self.multiple)
        h = x
        if any(rp):
            h = F.pad(h, (rp[0], rp[1], 0, 0), mode="reflect")
        if any(ap):
            h = F.pad(h, (0, 0, ap[0], ap[1]), mode="circular")
        skips = []
        for i, block in enumerate(self.down):
            h = block(h)
            if i < len(self.down) - 1:
                skips.append(h)
                h = F.max_pool2d(h, 2)
        for up, merge in zip(self.up, self.merge):
            h = F.relu(up(F.interpolate(h, scale_factor=2, mode="nearest")))
            h = merge(torch.cat([skips.pop(), h], dim=1))
        h = self.head(h)
        h = h[..., ap[0]:ap[0] + n_phi, rp[0]:rp[0] + n_r]
        return x + h if self.config.residual else h

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def net_apply(net: PolarUNet, p) -> np.ndarray:
    """Evaluate ``B`` on a polar image or a ``(..., N_phi, N_r)`` array."""
    values = np.asarray(getattr(p, "values", p), dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("network input contains non-finite values")
    if not all(bool(torch.all(torch.isfinite(q))) for q in net.parameters()):
        raise FloatingPointError("network weights contain non-finite values")
    dtype = next(net.parameters()).dtype
    lead = values.shape[:-2]
    x = torch.as_tensor(values.reshape(-1, 1, *values.shape[-2:]), dtype=dtype)
    with torch.no_grad():
        out = net(x).to(torch.float64).numpy()
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("network produced non-finite output")
    return out.reshape(*lead, *values.shape[-2:])
