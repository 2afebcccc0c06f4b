"""Experiment configuration (JSON or ``key=value`` text)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from ..grid import GridSpec, make_grid
from ..nn.losses import LOSS_KINDS
from ..nn.network import NetConfig

STOP_RULES = ("emd", "psnr-oracle", "fixed")

# named seed streams
STREAM_PHANTOM = 1
STREAM_NOISE = 2
STREAM_ETA = 3
STREAM_INIT = 4
STREAM_BATCH = 5
STREAM_DIP_Z = 6
STREAM_EMD_XI = 7


@dataclass(frozen=True)
class ExperimentConfig:
    M: int = 64
    kernel: str = "Indicator-20"
    alpha: float = 0.05
    loss: str = "nn2i"
    lam: float = 1e-2
    lr: float = 1e-3
    batch: int = 5
    iters: int = 2000
    seed: int = 0
    stop: str = "emd"
    check_every: int = 200
    patience: int = 5
    source: str = "synthetic"
    image_folder: str | None = None
    n_train: int = 20
    n_val: int = 5
    n_test: int = 5
    eta_draws: int = 16
    eta_sigma: str = "noisy"
    levels: int = 4
    base_width: int = 8
    convs_per_level: int = 2
    residual: bool = True
    dtype: str = "float32"
    pad: bool = True
    dip_record: int = 0

    def __post_init__(self):
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"loss must be one of {LOSS_KINDS}")
        if self.stop not in STOP_RULES:
            raise ValueError(f"stop must be one of {STOP_RULES}")
        if self.source not in ("synthetic", "image-folder"):
            raise ValueError("source must be 'synthetic' or 'image-folder'")
        if self.source == "image-folder" and not self.image_folder:
            raise ValueError("image-folder source needs image_folder")
        if min(self.n_train, self.n_val, self.n_test) < 1:
            raise ValueError("split sizes must be positive")
        if self.batch < 1 or self.iters < 0 or self.check_every < 1 or self.patience < 1:
            raise ValueError("batch, check_every and patience must be >= 1 and iters >= 0")
        if self.eta_sigma not in ("noisy", "clean"):
            raise ValueError("eta_sigma must be 'noisy' or 'clean'")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")

    @property
    def grid(self) -> GridSpec:
        return make_grid(self.M)

    @property
    def net(self) -> NetConfig:
        return NetConfig(self.levels, self.base_width, self.convs_per_level, self.residual)

    @property
    def n_records(self) -> int:
        return self.n_train + self.n_val + self.n_test

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: _coerce(known[k], v) for k, v in data.items()})

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        text = Path(path).read_text()
        if text.lstrip().startswith("{"):
            return cls.from_dict(json.loads(text))
        data = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                key, _, val = line.partition("=")
                data[key.strip()] = val.strip()
        return cls.from_dict(data)


def _coerce(f, value):
    if not isinstance(value, str):
        return value
    typ = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    if value.lower() in ("none", "null") and "None" in typ:
        return None
    if typ.startswith("bool"):
        return value.lower() in ("1", "true", "yes", "on")
    if typ.startswith("int"):
        return int(value)
    if typ.startswith("float"):
        return float(value)
    return value


def paper_preset(**overrides) -> ExperimentConfig:
    """Full-scale settings: M=256, 600/100/100 split, batch 15, 1e5 iterations, lr 1e-4."""
    base = ExperimentConfig(M=256, n_train=600, n_val=100, n_test=100, batch=15, iters=100_000,
                            lr=1e-4, base_width=16, residual=False, eta_draws=0)
    return replace(base, **overrides)
