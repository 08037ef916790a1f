"""dewdrop: raindrop synthesis, mask generation, and diffusion-based removal."""

from .diffusion import (
    NoiseSchedule,
    analytic_gaussian_denoiser,
    forward_sample,
    forward_step,
    inpaint_sample,
    make_schedule,
    reverse_step,
    sample_chain,
    train_denoiser,
)
from .detector import binarize, build_detector, detector_forward, train_detector
from .image import center_crop, histogram_equalize, photometric_distort, threshold, to_grayscale
from .codec import load_image, load_mask, save_image, save_mask
from .metrics import MaskScore, mask_score, psnr, ssim
from .residual import ResidualOption, residual, residual_mask
from .synthesis import (
    CameraParams,
    DropFieldConfig,
    DropGeometry,
    RaindropField,
    refract_ray,
    render_drops,
    sample_drop_field,
)

__version__ = "0.1.0"

__all__ = [
    "CameraParams",
    "DropFieldConfig",
    "DropGeometry",
    "MaskScore",
    "NoiseSchedule",
    "RaindropField",
    "ResidualOption",
    "analytic_gaussian_denoiser",
    "binarize",
    "build_detector",
    "center_crop",
    "detector_forward",
    "forward_sample",
    "forward_step",
    "histogram_equalize",
    "inpaint_sample",
    "load_image",
    "load_mask",
    "make_schedule",
    "mask_score",
    "photometric_distort",
    "psnr",
    "refract_ray",
    "render_drops",
    "residual",
    "residual_mask",
    "reverse_step",
    "sample_chain",
    "sample_drop_field",
    "save_image",
    "save_mask",
    "ssim",
    "threshold",
    "to_grayscale",
    "train_denoiser",
    "train_detector",
]
