"""Core image containers and pixel operations.

Pixel data is held in plain numpy arrays with three conventions used
throughout the package:

* RGB image: float64 array of shape (H, W, 3), intensities in [0, 1].
* Gray image: float64 array of shape (H, W), intensities in [0, 1].
* Mask: uint8 array of shape (H, W) with values in {0, 1}, where 1 marks
  a raindrop / missing pixel and 0 marks background. On disk masks are
  stored as 8-bit images with 255 for raindrop and 0 for background.

All arithmetic keeps intensities inside [0, 1]; operations clamp their
results before returning. Quantization to 8 bits happens only at file
I/O and in :func:`threshold`, using round-half-to-even via ``np.rint``.
"""

from __future__ import annotations

import numpy as np

# Rec.601 luma weights.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def as_float_image(arr) -> np.ndarray:
    """Coerce array-like pixel data to a float64 array without copying when possible."""
    return np.asarray(arr, dtype=np.float64)


def clamp01(arr: np.ndarray) -> np.ndarray:
    return np.clip(arr, 0.0, 1.0)


def quantize8(arr: np.ndarray) -> np.ndarray:
    """Map [0,1] intensities to uint8 levels 0..255 (round half to even)."""
    return np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)


def check_rgb(img: np.ndarray, name: str = "image") -> np.ndarray:
    img = as_float_image(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {img.shape}")
    return img


def check_gray(img: np.ndarray, name: str = "image") -> np.ndarray:
    img = as_float_image(img)
    if img.ndim != 2:
        raise ValueError(f"{name} must have shape (H, W), got {img.shape}")
    return img


def check_mask(mask: np.ndarray, name: str = "mask") -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"{name} must have shape (H, W), got {mask.shape}")
    vals = np.unique(mask)
    if not np.all(np.isin(vals, (0, 1))):
        raise ValueError(f"{name} must be binary with values in {{0, 1}}")
    return mask.astype(np.uint8)


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Convert an RGB image to gray using Rec.601 luma (0.299R + 0.587G + 0.114B).

    Single-channel input is returned unchanged.
    """
    img = as_float_image(img)
    if img.ndim == 2:
        return img
    img = check_rgb(img)
    return clamp01(img @ LUMA_WEIGHTS)


def histogram_equalize(img: np.ndarray) -> np.ndarray:
    """Equalize a gray image over 256 quantized levels.

    Standard CDF remapping: out(v) = rint(255 * (cdf(v) - cdf_min) / (N - cdf_min)),
    scaled back to [0, 1]. A constant image (single occupied level) is
    returned unchanged since the normalizer degenerates to 0/0.
    """
    img = check_gray(img)
    if img.size == 0:
        raise ValueError("cannot equalize an empty image")
    levels = quantize8(img)
    hist = np.bincount(levels.ravel(), minlength=256)
    cdf = np.cumsum(hist)
    occupied = np.nonzero(hist)[0]
    if occupied.size <= 1:
        return img.copy()
    cdf_min = cdf[occupied[0]]
    n = img.size
    lut = np.rint(255.0 * (cdf - cdf_min) / (n - cdf_min))
    return np.clip(lut[levels], 0, 255) / 255.0


def equalize_image(img: np.ndarray) -> np.ndarray:
    """Histogram-equalize gray input directly, RGB input channel by channel."""
    img = as_float_image(img)
    if img.ndim == 2:
        return histogram_equalize(img)
    img = check_rgb(img)
    return np.stack([histogram_equalize(img[..., c]) for c in range(3)], axis=-1)


def photometric_distort(
    img: np.ndarray,
    brightness_delta: float | None = None,
    contrast_factor: float | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Apply an affine brightness/contrast distortion.

    out = clamp(contrast_factor * (in - 0.5) + 0.5 + brightness_delta).
    Parameters left as None are sampled uniformly from their valid ranges
    (brightness in [-0.5, 0.5], contrast in [0.5, 1.5]) using ``rng``, so
    the result is deterministic for a fixed generator state.
    """
    img = as_float_image(img)
    if brightness_delta is None or contrast_factor is None:
        if rng is None:
            raise ValueError("rng is required when sampling distortion parameters")
        if brightness_delta is None:
            brightness_delta = rng.uniform(-0.5, 0.5)
        if contrast_factor is None:
            contrast_factor = rng.uniform(0.5, 1.5)
    if not -0.5 <= brightness_delta <= 0.5:
        raise ValueError(f"brightness_delta must be in [-0.5, 0.5], got {brightness_delta}")
    if not 0.5 <= contrast_factor <= 1.5:
        raise ValueError(f"contrast_factor must be in [0.5, 1.5], got {contrast_factor}")
    return clamp01(contrast_factor * (img - 0.5) + 0.5 + brightness_delta)


def center_crop(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Crop the centered out_h x out_w window; top-left at (floor((H-h)/2), floor((W-w)/2))."""
    img = np.asarray(img)
    h, w = img.shape[:2]
    if out_h > h or out_w > w:
        raise ValueError(f"crop {out_h}x{out_w} exceeds image {h}x{w}")
    if out_h <= 0 or out_w <= 0:
        raise ValueError("crop size must be positive")
    top = (h - out_h) // 2
    left = (w - out_w) // 2
    return img[top : top + out_h, left : left + out_w].copy()


def threshold(img: np.ndarray, tau: int) -> np.ndarray:
    """Binarize a gray image at an 8-bit level: pixel -> 1 iff rint(255*v) > tau.

    The comparison is strict, so a pixel exactly at the threshold is background.
    """
    img = check_gray(img)
    if not 0 <= tau <= 255:
        raise ValueError(f"tau must be in [0, 255], got {tau}")
    return (quantize8(img).astype(np.int32) > tau).astype(np.uint8)


def bilinear_sample(img: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Sample image values at fractional (row, col) positions.

    Positions must lie within [0, H-1] x [0, W-1]. Works for gray (H, W)
    and RGB (H, W, 3) input; the sampled axis is appended per channel.
    """
    img = as_float_image(img)
    rows = np.asarray(rows, dtype=np.float64)
    cols = np.asarray(cols, dtype=np.float64)
    h, w = img.shape[:2]
    r0 = np.clip(np.floor(rows).astype(np.int64), 0, h - 1)
    c0 = np.clip(np.floor(cols).astype(np.int64), 0, w - 1)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = rows - r0
    fc = cols - c0
    if img.ndim == 3:
        fr = fr[..., None]
        fc = fc[..., None]
    top = img[r0, c0] * (1 - fc) + img[r0, c1] * fc
    bot = img[r1, c0] * (1 - fc) + img[r1, c1] * fc
    return top * (1 - fr) + bot * fr
