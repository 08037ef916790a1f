"""Pipeline configuration with JSON file loading and CLI overrides.

Full-scale defaults: 1000 diffusion steps, 128x128 center crops, and
detector training at 100 epochs / batch 32 / lr 1e-3 / weight decay 1e-4
with the learning rate stepped every 5 epochs. The toy profile shrinks
the run so it finishes in minutes: 200 diffusion steps with a steeper
variance ramp (so the terminal step is near-pure noise), 32x32 grayscale
patches, and the analytic denoiser unless a checkpoint is given.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .detector import TrainConfig
from .synthesis import DropFieldConfig

DEFAULT_SEED = 1234

TOY_T = 200
TOY_BETA_END = 0.05
TOY_PATCH = 32


@dataclass
class MaskMethod:
    method: str = "residual"  # "residual" or "detector"
    option: str = "abs-gray"
    tau: int = 80
    equalize: bool = False
    checkpoint: str | None = None
    binarize_threshold: float = 0.5

    def validate(self):
        if self.method not in ("residual", "detector"):
            raise ValueError(f"mask method must be residual or detector, got {self.method!r}")
        if self.method == "detector" and not self.checkpoint:
            raise ValueError("detector mask method requires a checkpoint path")


@dataclass
class DiffusionSettings:
    T: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    patch: int = 128
    grayscale: bool = False
    checkpoint: str | None = None
    analytic_mu0: float = 0.5
    analytic_sigma0: float = 0.25


@dataclass
class PipelineConfig:
    raindrop_root: str | None = None
    cityscapes_root: str | None = None
    split: str = "test"
    seed: int = DEFAULT_SEED
    out_dir: str = "out"
    mask: MaskMethod = field(default_factory=MaskMethod)
    diffusion: DiffusionSettings = field(default_factory=DiffusionSettings)
    synthesis: DropFieldConfig = field(default_factory=DropFieldConfig)
    detector_train: TrainConfig = field(default_factory=TrainConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def apply_toy_profile(cfg: PipelineConfig) -> PipelineConfig:
    cfg.diffusion.T = TOY_T
    cfg.diffusion.beta_end = TOY_BETA_END
    cfg.diffusion.patch = TOY_PATCH
    cfg.diffusion.grayscale = True
    return cfg


def _build(cls, data: dict, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown config keys in {where}: {sorted(unknown)}")
    return cls(**data)


def config_from_dict(data: dict) -> PipelineConfig:
    data = dict(data)
    mask = _build(MaskMethod, data.pop("mask", {}), "mask")
    diffusion = _build(DiffusionSettings, data.pop("diffusion", {}), "diffusion")
    synth = data.pop("synthesis", {})
    for key in ("count_range", "radius_range_px", "height_ratio_range"):
        if key in synth:
            synth[key] = tuple(synth[key])
    synthesis = _build(DropFieldConfig, synth, "synthesis")
    detector_train = _build(TrainConfig, data.pop("detector_train", {}), "detector_train")
    cfg = _build(PipelineConfig, data, "pipeline")
    cfg.mask = mask
    cfg.diffusion = diffusion
    cfg.synthesis = synthesis
    cfg.detector_train = detector_train
    return cfg


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file {path} does not exist")
    return config_from_dict(json.loads(path.read_text()))
