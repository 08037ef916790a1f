"""Raindrop detector: a small segmentation CNN trained on synthetic drops.

Architecture (channels for the default build):

* head: two 3x3 stride-2 conv blocks (3 -> 32 -> 64), each with batch
  norm and LeakyReLU, then a bare 1x1 stride-2 conv expanding to 256.
* body: six residual blocks. Each block squeezes 256 -> 64 with a 1x1
  conv, applies a 3x3 conv at 64, and restores 64 -> 256 with a 1x1
  conv; all three convs carry batch norm + LeakyReLU, and the block
  output is added to its input (y = block(x) + x).
* tail: a 3x3 conv block 256 -> 64, three 4x4 stride-2 transposed-conv
  blocks that undo the three stride-2 reductions (64 -> 32 -> 32 -> 32),
  and a final 3x3 conv to 1 channel followed by a sigmoid.

Input height and width must be divisible by 8. The output is a per-pixel
raindrop probability map at input resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .image import check_rgb
from .nn import (
    AdamW,
    BatchNorm2d,
    Conv2d,
    ConvTranspose2d,
    LeakyReLU,
    Sequential,
    Sigmoid,
    bce_grad,
    bce_loss,
    step_lr,
)
from .rng import split_rng

LEAKY_SLOPE = 0.01


@dataclass(frozen=True)
class DetectorArch:
    stem: tuple[int, int] = (32, 64)
    trunk: int = 256
    bottleneck: int = 64
    blocks: int = 6
    tail: int = 64
    up: tuple[int, int, int] = (32, 32, 32)


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    lr_step_size: int = 5
    lr_gamma: float = 0.5
    seed: int = 0


class ResidualBlock:
    def __init__(self, channels: int, bottleneck: int, rng):
        self.body = Sequential(
            [
                Conv2d(channels, bottleneck, 1, 1, 0, rng=rng),
                BatchNorm2d(bottleneck),
                LeakyReLU(LEAKY_SLOPE),
                Conv2d(bottleneck, bottleneck, 3, 1, 1, rng=rng),
                BatchNorm2d(bottleneck),
                LeakyReLU(LEAKY_SLOPE),
                Conv2d(bottleneck, channels, 1, 1, 0, rng=rng),
                BatchNorm2d(channels),
                LeakyReLU(LEAKY_SLOPE),
            ]
        )

    def forward(self, x, train):
        return self.body.forward(x, train) + x

    def backward(self, dy):
        return self.body.backward(dy) + dy

    def params(self):
        return self.body.params()

    def arrays(self):
        return self.body.arrays()


class DetectorNet:
    def __init__(self, seed: int, arch: DetectorArch):
        self.seed = int(seed)
        self.arch = arch
        rng = split_rng(seed, 0)
        c1, c2 = arch.stem
        self.head = Sequential(
            [
                Conv2d(3, c1, 3, 2, 1, rng=rng),
                BatchNorm2d(c1),
                LeakyReLU(LEAKY_SLOPE),
                Conv2d(c1, c2, 3, 2, 1, rng=rng),
                BatchNorm2d(c2),
                LeakyReLU(LEAKY_SLOPE),
                Conv2d(c2, arch.trunk, 1, 2, 0, rng=rng),
            ]
        )
        self.blocks = [ResidualBlock(arch.trunk, arch.bottleneck, rng) for _ in range(arch.blocks)]
        u1, u2, u3 = arch.up
        self.tail = Sequential(
            [
                Conv2d(arch.trunk, arch.tail, 3, 1, 1, rng=rng),
                BatchNorm2d(arch.tail),
                LeakyReLU(LEAKY_SLOPE),
                ConvTranspose2d(arch.tail, u1, 4, 2, 1, rng=rng),
                BatchNorm2d(u1),
                LeakyReLU(LEAKY_SLOPE),
                ConvTranspose2d(u1, u2, 4, 2, 1, rng=rng),
                BatchNorm2d(u2),
                LeakyReLU(LEAKY_SLOPE),
                ConvTranspose2d(u2, u3, 4, 2, 1, rng=rng),
                BatchNorm2d(u3),
                LeakyReLU(LEAKY_SLOPE),
                Conv2d(u3, 1, 3, 1, 1, rng=rng),
                Sigmoid(),
            ]
        )

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        """Map an NCHW batch to per-pixel probabilities (N, 1, H, W)."""
        n, c, h, w = x.shape
        if c != 3:
            raise ValueError(f"expected 3 input channels, got {c}")
        if h % 8 or w % 8:
            raise ValueError(f"input height/width must be divisible by 8, got {h}x{w}")
        x = self.head.forward(x, train)
        for block in self.blocks:
            x = block.forward(x, train)
        return self.tail.forward(x, train)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        dy = self.tail.backward(dy)
        for block in reversed(self.blocks):
            dy = block.backward(dy)
        return self.head.backward(dy)

    def params(self):
        out = self.head.params()
        for block in self.blocks:
            out.extend(block.params())
        out.extend(self.tail.params())
        return out

    def arrays(self):
        out = [(f"head.{n}", a) for n, a in self.head.arrays()]
        for i, block in enumerate(self.blocks):
            out.extend((f"block{i}.{n}", a) for n, a in block.arrays())
        out.extend((f"tail.{n}", a) for n, a in self.tail.arrays())
        return out

    @property
    def num_params(self) -> int:
        return sum(p.value.size for p in self.params())

    def arch_dict(self) -> dict:
        return {
            "kind": "detector",
            "stem": list(self.arch.stem),
            "trunk": self.arch.trunk,
            "bottleneck": self.arch.bottleneck,
            "blocks": self.arch.blocks,
            "tail": self.arch.tail,
            "up": list(self.arch.up),
        }


def build_detector(seed: int = 0, arch: DetectorArch | None = None) -> DetectorNet:
    """Construct the detector with seeded weight init (same seed, same weights)."""
    return DetectorNet(seed, arch or DetectorArch())


def detector_forward(net: DetectorNet, img: np.ndarray) -> np.ndarray:
    """Run eval-mode inference on one RGB image; returns an (H, W) probability map."""
    img = check_rgb(img)
    x = img.transpose(2, 0, 1)[None]
    return net.forward(x, train=False)[0, 0]


def binarize(probmap: np.ndarray, thresh: float = 0.5) -> np.ndarray:
    """Probability map to mask: strictly above the threshold counts as raindrop."""
    probmap = np.asarray(probmap, dtype=np.float64)
    return (probmap > thresh).astype(np.uint8)


def detector_backward(net: DetectorNet, x: np.ndarray, target: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Forward + backward for one NCHW batch against an {0,1} target.

    Returns the BCE loss and per-parameter gradients aligned with
    ``net.params()``. Gradients are exact derivatives of the loss, which
    is what the finite-difference checks in the test suite verify.
    """
    for p in net.params():
        p.grad[...] = 0.0
    pred = net.forward(x, train=True)
    loss = bce_loss(pred, target)
    net.backward(bce_grad(pred, target))
    return loss, [p.grad.copy() for p in net.params()]


def _epoch_loss(net: DetectorNet, data_x: np.ndarray, data_y: np.ndarray, batch_size: int) -> float:
    total = 0.0
    for start in range(0, data_x.shape[0], batch_size):
        xb = data_x[start : start + batch_size]
        yb = data_y[start : start + batch_size]
        total += bce_loss(net.forward(xb, train=False), yb) * xb.shape[0]
    return total / data_x.shape[0]


def train_detector(
    dataset,
    cfg: TrainConfig | None = None,
    val_dataset=None,
    arch: DetectorArch | None = None,
) -> tuple[DetectorNet, list[dict]]:
    """Train on (rainy image, mask) pairs; returns the net and a per-epoch loss log.

    Images are (H, W, 3) float arrays, masks (H, W) {0,1}. Batches follow
    a seeded shuffle each epoch and the learning rate decays by lr_gamma
    every lr_step_size epochs, so the run is reproducible from cfg.seed.
    """
    cfg = cfg or TrainConfig()
    if not dataset:
        raise ValueError("dataset is empty")
    data_x = np.stack([np.asarray(img, dtype=np.float64).transpose(2, 0, 1) for img, _ in dataset])
    data_y = np.stack([np.asarray(m, dtype=np.float64)[None] for _, m in dataset])
    val_x = val_y = None
    if val_dataset:
        val_x = np.stack([np.asarray(img, dtype=np.float64).transpose(2, 0, 1) for img, _ in val_dataset])
        val_y = np.stack([np.asarray(m, dtype=np.float64)[None] for _, m in val_dataset])
    net = build_detector(cfg.seed, arch)
    opt = AdamW(net.params(), lr=cfg.learning_rate, weight_decay=cfg.weight_decay)
    shuffle_rng = split_rng(cfg.seed, 1)
    history: list[dict] = []
    for epoch in range(cfg.epochs):
        opt.lr = step_lr(cfg.learning_rate, epoch, cfg.lr_step_size, cfg.lr_gamma)
        order = shuffle_rng.permutation(data_x.shape[0])
        epoch_loss = 0.0
        for start in range(0, order.size, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            opt.zero_grad()
            pred = net.forward(data_x[idx], train=True)
            loss = bce_loss(pred, data_y[idx])
            if not np.isfinite(loss):
                raise FloatingPointError(f"detector training diverged at epoch {epoch}: loss={loss}")
            net.backward(bce_grad(pred, data_y[idx]))
            opt.step()
            epoch_loss += loss * idx.size
        row = {"epoch": epoch, "train_loss": epoch_loss / order.size, "val_loss": None}
        if val_x is not None:
            row["val_loss"] = _epoch_loss(net, val_x, val_y, cfg.batch_size)
        history.append(row)
    return net, history
