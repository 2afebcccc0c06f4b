"""Network checkpoints: one PATD file per tensor plus a JSON manifest."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..arrayio import load_array, save_array
from ..nn.adam import AdamState
from ..nn.network import NetConfig, PolarUNet
from ..otstop import EmdTrace

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


@dataclass
class Checkpoint:
    net_config: NetConfig
    state: dict
    step: int = 0
    loss: str = "nn2i"
    lam: float = 0.0
    dtype: str = "float32"
    optimizer: dict | None = None
    trace: EmdTrace = field(default_factory=EmdTrace)
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_net(cls, net: PolarUNet, **kw) -> "Checkpoint":
        state = {k: v.detach().to(torch.float64).numpy().copy() for k, v in net.state_dict().items()}
        return cls(net.config, state, **kw)

    def build_net(self, dtype: str | None = None) -> PolarUNet:
        net = PolarUNet(self.net_config).to(_DTYPES[dtype or self.dtype])
        ref = net.state_dict()
        net.load_state_dict({k: torch.as_tensor(self.state[k], dtype=ref[k].dtype) for k in ref})
        net.eval()
        return net

    def save(self, path) -> Path:
        root = Path(path)
        (root / "tensors").mkdir(parents=True, exist_ok=True)
        names = sorted(self.state)
        for i, name in enumerate(names):
            save_array(root / "tensors" / f"{i:03d}.patd", self.state[name])
        opt = None
        if self.optimizer is not None:
            opt = {k: v for k, v in self.optimizer.items() if k not in ("m", "v")}
            for key in ("m", "v"):
                for i, arr in enumerate(self.optimizer.get(key, [])):
                    save_array(root / "tensors" / f"adam_{key}_{i:03d}.patd", arr)
            opt["n_moments"] = len(self.optimizer.get("m", []))
        manifest = {
            "architecture": self.net_config.to_dict(),
            "tensors": names,
            "step": self.step,
            "loss": self.loss,
            "lam": self.lam,
            "dtype": self.dtype,
            "optimizer": opt,
            "extra": self.extra,
        }
        (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        self.trace.to_csv(root / "trace.csv")
        return root

    @classmethod
    def load(cls, path) -> "Checkpoint":
        root = Path(path)
        try:
            manifest = json.loads((root / "manifest.json").read_text())
            state = {name: load_array(root / "tensors" / f"{i:03d}.patd")
                     for i, name in enumerate(manifest["tensors"])}
        except (OSError, KeyError, ValueError) as exc:
            raise ValueError(f"corrupt checkpoint at {root}: {exc}") from exc
        opt = manifest.get("optimizer")
        if opt is not None:
            n = opt.pop("n_moments", 0)
            for key in ("m", "v"):
                opt[key] = [load_array(root / "tensors" / f"adam_{key}_{i:03d}.patd") for i in range(n)]
        trace = EmdTrace.from_csv(root / "trace.csv") if (root / "trace.csv").exists() else EmdTrace()
        return cls(NetConfig(**manifest["architecture"]), state, manifest["step"], manifest["loss"],
                   manifest["lam"], manifest["dtype"], opt, trace, manifest.get("extra", {}))


def optimizer_snapshot(state: AdamState) -> dict:
    return {"lr": state.lr, "beta1": state.beta1, "beta2": state.beta2, "eps": state.eps,
            "step": state.step,
            "m": [m.detach().to(torch.float64).numpy().copy() for m in state.m],
            "v": [v.detach().to(torch.float64).numpy().copy() for v in state.v]}
