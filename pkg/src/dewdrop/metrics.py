"""Fidelity and mask-quality metrics.

PSNR and SSIM score reconstructions against clean ground truth on [0, 1]
data; IoU, precision, and recall score predicted masks against ground
truth masks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .image import as_float_image, check_mask

PSNR_CAP_DB = 100.0

SSIM_WINDOW = 8
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


@dataclass(frozen=True)
class MaskScore:
    iou: float
    precision: float
    recall: float
    true_positives: int
    false_positives: int
    false_negatives: int


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB on [0, 1] data, capped at 100 dB."""
    a = as_float_image(a)
    b = as_float_image(b)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB)


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local SSIM over uniform 8x8 sliding windows (stride 1).

    Uses biased (divide-by-n) second moments and the standard constants
    C1 = 0.01^2, C2 = 0.03^2 for [0, 1] intensities.
    """
    a = as_float_image(a)
    b = as_float_image(b)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    if a.ndim != 2:
        raise ValueError("ssim expects gray images")
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    wa = sliding_window_view(a, (SSIM_WINDOW, SSIM_WINDOW))
    wb = sliding_window_view(b, (SSIM_WINDOW, SSIM_WINDOW))
    mu_a = wa.mean(axis=(-2, -1))
    mu_b = wb.mean(axis=(-2, -1))
    var_a = (wa**2).mean(axis=(-2, -1)) - mu_a**2
    var_b = (wb**2).mean(axis=(-2, -1)) - mu_b**2
    cov = (wa * wb).mean(axis=(-2, -1)) - mu_a * mu_b
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a**2 + mu_b**2 + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


def mask_score(pred: np.ndarray, truth: np.ndarray) -> MaskScore:
    """IoU / precision / recall of a predicted mask against ground truth.

    Degenerate denominators resolve to 1.0: two empty masks have IoU 1,
    an empty prediction has precision 1, an empty truth has recall 1.
    """
    pred = check_mask(pred, "pred")
    truth = check_mask(truth, "truth")
    if pred.shape != truth.shape:
        raise ValueError(f"mask shapes differ: {pred.shape} vs {truth.shape}")
    p = pred.astype(bool)
    t = truth.astype(bool)
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    union = tp + fp + fn
    return MaskScore(
        iou=tp / union if union else 1.0,
        precision=tp / (tp + fp) if tp + fp else 1.0,
        recall=tp / (tp + fn) if tp + fn else 1.0,
        true_positives=tp,
        false_positives=fp,
        false_negatives=fn,
    )
