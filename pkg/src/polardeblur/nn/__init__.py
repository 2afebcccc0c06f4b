"""Trainable polar deconvolver, its losses and optimizer."""

from .adam import AdamState, adam_step
from .blur import angular_blur
from .losses import (LOSS_KINDS, LossKind, loss_dip, loss_nn2i, loss_ssltv, loss_supervised,
                     total_variation, value_and_grad)
from .network import NetConfig, PolarUNet, net_apply

__all__ = [
    "AdamState",
    "LOSS_KINDS",
    "LossKind",
    "NetConfig",
    "PolarUNet",
    "adam_step",
    "angular_blur",
    "loss_dip",
    "loss_nn2i",
    "loss_ssltv",
    "loss_supervised",
    "net_apply",
    "total_variation",
    "value_and_grad",
]
