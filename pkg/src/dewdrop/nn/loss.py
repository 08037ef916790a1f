"""Binary cross entropy on per-pixel probabilities."""

from __future__ import annotations

import numpy as np

BCE_EPS = 1e-7


def bce_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean of -[y ln p + (1-y) ln(1-p)] with p clamped to [1e-7, 1 - 1e-7]."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    p = np.clip(pred, BCE_EPS, 1.0 - BCE_EPS)
    return float(np.mean(-(target * np.log(p) + (1.0 - target) * np.log1p(-p))))


def bce_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Gradient of bce_loss with respect to pred (zero where the clamp is active)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    p = np.clip(pred, BCE_EPS, 1.0 - BCE_EPS)
    grad = (-target / p + (1.0 - target) / (1.0 - p)) / pred.size
    inside = (pred > BCE_EPS) & (pred < 1.0 - BCE_EPS)
    return np.where(inside, grad, 0.0)
