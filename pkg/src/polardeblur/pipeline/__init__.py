"""Dataset synthesis, training with early stopping, reconstruction and metrics."""

from .checkpoint import Checkpoint
from .config import ExperimentConfig, paper_preset
from .dataset import DatasetRecord, build_dataset, load_dataset, split
from .metrics import MetricsReport, psnr
from .phantoms import load_image_folder, synth_vessel_phantom
from .training import evaluate, reconstruct, run_training

__all__ = [
    "Checkpoint",
    "DatasetRecord",
    "ExperimentConfig",
    "MetricsReport",
    "build_dataset",
    "evaluate",
    "load_dataset",
    "load_image_folder",
    "paper_preset",
    "psnr",
    "reconstruct",
    "run_training",
    "split",
    "synth_vessel_phantom",
]
