"""Training/validation/test records for the polar deconvolution problem."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import fbp, polar, wavesim
from ..angconv import make_kernel
from ..arrayio import load_grid_array, save_grid_array
from ..grid import CartesianImage, PolarImage, Sinogram
from ..noise import measurement_noise_array
from .config import STREAM_NOISE, STREAM_PHANTOM, ExperimentConfig
from .phantoms import load_image_folder, synth_vessel_phantom

_FIELDS = {
    "x": CartesianImage,
    "x_polar": PolarImage,
    "clean": Sinogram,
    "noisy": Sinogram,
    "observation": CartesianImage,
    "y_polar": PolarImage,
    "oracle": CartesianImage,
}


@dataclass
class DatasetRecord:
    id: int
    split: str
    x: np.ndarray             # ground truth image
    x_polar: np.ndarray       # P x
    clean: np.ndarray         # U C A P x
    noisy: np.ndarray         # y = clean + xi
    observation: np.ndarray   # V y
    y_polar: np.ndarray       # P V y
    oracle: np.ndarray        # V U x
    sigma: float
    noise_seed: tuple
    source: str = ""


def _split_names(cfg):
    return ["train"] * cfg.n_train + ["val"] * cfg.n_val + ["test"] * cfg.n_test


def phantom_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, STREAM_PHANTOM, index]).generate_state(1)[0])


def source_images(cfg: ExperimentConfig):
    """Ground-truth images and their names; ingestion errors are returned, not raised."""
    if cfg.source == "synthetic":
        imgs = [synth_vessel_phantom(phantom_seed(cfg.seed, i), cfg.M) for i in range(cfg.n_records)]
        return imgs, [f"vessel-{cfg.seed}-{i}" for i in range(cfg.n_records)], []
    imgs, names, errors = load_image_folder(cfg.image_folder, cfg.M)
    if len(imgs) < cfg.n_records:
        raise ValueError(f"{cfg.image_folder}: need {cfg.n_records} readable images, found {len(imgs)}"
                         + "".join(f"\n  {n}: {e}" for n, e in errors))
    return imgs[: cfg.n_records], names[: cfg.n_records], errors


def build_dataset(cfg: ExperimentConfig, out_dir=None) -> list[DatasetRecord]:
    """Simulate blurred noisy data for every record and optionally persist it."""
    spec = cfg.grid
    kernel = make_kernel(cfg.kernel, spec.N_phi)
    imgs, names, _ = source_images(cfg)
    x = np.stack(imgs)
    x_polar = polar.to_polar_array(x, spec)
    clean = wavesim.forward_blurred_array(x, kernel, spec, pad=cfg.pad)
    sharp = wavesim.forward_array(x, spec, pad=cfg.pad)
    sigmas = cfg.alpha * np.abs(clean).reshape(len(imgs), -1).max(axis=1)
    noise = np.stack([measurement_noise_array(s, spec, cfg.seed, STREAM_NOISE, i)
                      for i, s in enumerate(sigmas)])
    noisy = clean + noise
    observation = fbp.inverse_array(noisy, spec)
    y_polar = polar.to_polar_array(observation, spec)
    oracle = fbp.inverse_array(sharp, spec)
    records = [
        DatasetRecord(i, s, x[i], x_polar[i], clean[i], noisy[i], observation[i], y_polar[i],
                      oracle[i], float(sigmas[i]), (cfg.seed, STREAM_NOISE, i), names[i])
        for i, s in enumerate(_split_names(cfg))
    ]
    if out_dir is not None:
        save_dataset(out_dir, records, cfg)
    return records


def split(records, name: str) -> list[DatasetRecord]:
    return [r for r in records if r.split == name]


def save_dataset(out_dir, records, cfg: ExperimentConfig) -> Path:
    root = Path(out_dir)
    spec = cfg.grid
    meta = {"config": cfg.to_dict(), "grid": spec.to_dict(), "records": []}
    for r in records:
        rdir = root / "records" / f"{r.id:05d}"
        rdir.mkdir(parents=True, exist_ok=True)
        for name, kind in _FIELDS.items():
            save_grid_array(rdir / f"{name}.patd", kind(getattr(r, name), spec))
        meta["records"].append({"id": r.id, "split": r.split, "sigma": r.sigma,
                                "noise_seed": list(r.noise_seed), "source": r.source})
    (root / "dataset.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return root


def load_dataset(path) -> tuple[list[DatasetRecord], ExperimentConfig]:
    root = Path(path)
    meta = json.loads((root / "dataset.json").read_text())
    cfg = ExperimentConfig.from_dict(meta["config"])
    records = []
    for m in meta["records"]:
        rdir = root / "records" / f"{m['id']:05d}"
        arrays = {name: load_grid_array(rdir / f"{name}.patd").values for name in _FIELDS}
        records.append(DatasetRecord(m["id"], m["split"], sigma=m["sigma"],
                                     noise_seed=tuple(m["noise_seed"]), source=m.get("source", ""),
                                     **arrays))
    return records, cfg
