"""Small from-scratch neural network toolkit (numpy forward/backward)."""

from .layers import (
    BatchNorm2d,
    Conv2d,
    ConvTranspose2d,
    Dense,
    LeakyReLU,
    Param,
    Sequential,
    Sigmoid,
)
from .loss import bce_grad, bce_loss
from .optim import AdamW, step_lr

__all__ = [
    "AdamW",
    "BatchNorm2d",
    "Conv2d",
    "ConvTranspose2d",
    "Dense",
    "LeakyReLU",
    "Param",
    "Sequential",
    "Sigmoid",
    "bce_grad",
    "bce_loss",
    "step_lr",
]
