"""Pseudo raindrop masks from rainy/clean image pairs.

Given a rainy image and its clean counterpart, the difference between
the two is dominated by the drop regions; thresholding that residual
yields a binary pseudo-mask. Four residual variants are supported,
differing in whether the difference is signed or absolute and whether
it is taken in RGB or after grayscale conversion.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .image import (
    as_float_image,
    clamp01,
    equalize_image,
    photometric_distort,
    threshold,
    to_grayscale,
)


class ResidualOption(str, Enum):
    """How the rainy-minus-clean residual is computed.

    SIGNED_RGB: per-channel difference clamped at 0, then to gray.
    ABS_RGB: per-channel absolute difference, then to gray.
    SIGNED_GRAY: difference of grayscale conversions, clamped at 0.
    ABS_GRAY: absolute difference of grayscale conversions.
    """

    SIGNED_RGB = "signed-rgb"
    ABS_RGB = "abs-rgb"
    SIGNED_GRAY = "signed-gray"
    ABS_GRAY = "abs-gray"


def residual(a: np.ndarray, b: np.ndarray, option: ResidualOption) -> np.ndarray:
    """Compute the gray residual of rainy image ``a`` against clean image ``b``.

    Negative differences in the signed variants clamp to zero.
    """
    a = as_float_image(a)
    b = as_float_image(b)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    option = ResidualOption(option)
    if option is ResidualOption.SIGNED_RGB:
        return to_grayscale(clamp01(a - b))
    if option is ResidualOption.ABS_RGB:
        return to_grayscale(clamp01(np.abs(a - b)))
    ga, gb = to_grayscale(a), to_grayscale(b)
    if option is ResidualOption.SIGNED_GRAY:
        return clamp01(ga - gb)
    return clamp01(np.abs(ga - gb))


def residual_mask(
    a: np.ndarray,
    b: np.ndarray,
    option: ResidualOption,
    tau: int,
    equalize: bool = False,
    brightness_delta: float = 0.0,
    contrast_factor: float = 1.0,
) -> np.ndarray:
    """Threshold the residual of a rainy/clean pair into a binary mask.

    Optional preprocessing (histogram equalization and/or an affine
    photometric distortion) is applied to both inputs symmetrically, so
    identical inputs always yield an all-black mask.
    """
    if equalize:
        a = equalize_image(a)
        b = equalize_image(b)
    if brightness_delta != 0.0 or contrast_factor != 1.0:
        a = photometric_distort(a, brightness_delta, contrast_factor)
        b = photometric_distort(b, brightness_delta, contrast_factor)
    return threshold(residual(a, b, option), tau)
