"""Denoising diffusion: noise schedule, forward/reverse processes, inpainting.

Conventions
-----------
A schedule covers steps t = 1..T; step 0 is the identity (clean data).
The forward process perturbs x_{t-1} into x_t with per-step variance
beta_t; alpha_t = 1 - beta_t and alpha_bar_t is the running product of
alphas, so x_t can also be sampled directly from x_0:

    x_t = sqrt(alpha_bar_t) * x_0 + sqrt(1 - alpha_bar_t) * z,  z ~ N(0, I).

The reverse process is parameterized by a noise predictor: a callable
``den(x_t, t) -> eps_hat`` shaped like ``x_t``. Each reverse step computes

    mu = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_t)

and samples x_{t-1} = mu + sigma_t * z with sigma_t^2 = beta_t, except
sigma_1 = 0 so the final step is deterministic.

Masked inpainting runs the reverse chain for the missing pixels while
resetting the known pixels at every step to a forward-diffused copy of
the observed image, which pins the known region to the input exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import AdamW, Dense, LeakyReLU, Sequential
from .rng import split_rng


@dataclass(frozen=True)
class NoiseSchedule:
    """Arrays indexed by step t in 0..T; entry 0 holds the identity convention
    (beta=0, alpha=1, alpha_bar=1)."""

    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray


def make_schedule(T: int, beta_start: float = 1e-4, beta_end: float = 0.02) -> NoiseSchedule:
    """Linear variance schedule from beta_start to beta_end inclusive."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ValueError(f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})")
    beta = np.concatenate([[0.0], np.linspace(beta_start, beta_end, T)])
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    return NoiseSchedule(T=T, beta=beta, alpha=alpha, alpha_bar=alpha_bar)


def _check_step(t: int, lo: int, hi: int) -> int:
    t = int(t)
    if not lo <= t <= hi:
        raise ValueError(f"step t={t} outside [{lo}, {hi}]")
    return t


def forward_step(x_prev: np.ndarray, t: int, sched: NoiseSchedule, rng: np.random.Generator) -> np.ndarray:
    """One forward noising step: x_t given x_{t-1}."""
    t = _check_step(t, 1, sched.T)
    x_prev = np.asarray(x_prev, dtype=np.float64)
    z = rng.standard_normal(x_prev.shape)
    return np.sqrt(1.0 - sched.beta[t]) * x_prev + np.sqrt(sched.beta[t]) * z


def forward_sample(x0: np.ndarray, t: int, sched: NoiseSchedule, rng: np.random.Generator) -> np.ndarray:
    """Sample x_t directly from x_0; t = 0 returns x_0 itself."""
    t = _check_step(t, 0, sched.T)
    x0 = np.asarray(x0, dtype=np.float64)
    if t == 0:
        return x0.copy()
    ab = sched.alpha_bar[t]
    z = rng.standard_normal(x0.shape)
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * z


def reverse_step(x_t: np.ndarray, t: int, den, sched: NoiseSchedule, rng: np.random.Generator) -> np.ndarray:
    """One reverse denoising step: sample x_{t-1} given x_t."""
    t = _check_step(t, 1, sched.T)
    x_t = np.asarray(x_t, dtype=np.float64)
    eps_hat = np.asarray(den(x_t, t), dtype=np.float64)
    if eps_hat.shape != x_t.shape:
        raise ValueError(f"denoiser output shape {eps_hat.shape} != input shape {x_t.shape}")
    if not np.all(np.isfinite(eps_hat)):
        raise FloatingPointError(f"denoiser produced non-finite values at t={t}")
    beta_t = sched.beta[t]
    mu = (x_t - beta_t / np.sqrt(1.0 - sched.alpha_bar[t]) * eps_hat) / np.sqrt(sched.alpha[t])
    if t == 1:
        return mu
    return mu + np.sqrt(beta_t) * rng.standard_normal(x_t.shape)


def sample_chain(shape, den, sched: NoiseSchedule, rng: np.random.Generator) -> np.ndarray:
    """Run the full reverse chain from pure noise down to a data sample."""
    x = rng.standard_normal(shape)
    for t in range(sched.T, 0, -1):
        x = reverse_step(x, t, den, sched, rng)
    return x


class AnalyticGaussianDenoiser:
    """Exact noise predictor for Gaussian data x_0 ~ N(mu0, sigma0^2 I).

    The posterior mean of x_0 given x_t is closed-form for Gaussian data,
    which makes this an oracle denoiser: the reverse chain built on it
    must reproduce the data distribution without any training.
    """

    def __init__(self, mu0, sigma0: float, sched: NoiseSchedule):
        if sigma0 <= 0:
            raise ValueError(f"sigma0 must be positive, got {sigma0}")
        self.mu0 = np.asarray(mu0, dtype=np.float64)
        self.sigma0 = float(sigma0)
        self.sched = sched

    def __call__(self, x_t: np.ndarray, t: int) -> np.ndarray:
        t = _check_step(t, 1, self.sched.T)
        ab = self.sched.alpha_bar[t]
        var0 = self.sigma0**2
        x0_hat = (var0 * np.sqrt(ab) * x_t + (1.0 - ab) * self.mu0) / (ab * var0 + 1.0 - ab)
        return (x_t - np.sqrt(ab) * x0_hat) / np.sqrt(1.0 - ab)


def analytic_gaussian_denoiser(mu0, sigma0: float, sched: NoiseSchedule) -> AnalyticGaussianDenoiser:
    return AnalyticGaussianDenoiser(mu0, sigma0, sched)


def inpaint_sample(
    x0: np.ndarray,
    mask: np.ndarray,
    den,
    sched: NoiseSchedule,
    rng: np.random.Generator,
    mask_marks_missing: bool = True,
) -> np.ndarray:
    """Reconstruct the masked region of x0 with the reverse chain.

    By default mask value 1 marks a missing pixel to be generated and 0 a
    known pixel to keep; pass mask_marks_missing=False to flip the roles.
    Known pixels of the output equal x0 bit-exactly.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    mask = np.asarray(mask)
    if mask.shape != x0.shape:
        raise ValueError(f"mask shape {mask.shape} != image shape {x0.shape}")
    if not np.all(np.isin(np.unique(mask), (0, 1))):
        raise ValueError("mask must be binary with values in {0, 1}")
    missing = mask.astype(bool)
    if not mask_marks_missing:
        missing = ~missing
    x = rng.standard_normal(x0.shape)
    for t in range(sched.T, 0, -1):
        x_unknown = reverse_step(x, t, den, sched, rng)
        x_known = forward_sample(x0, t - 1, sched, rng)
        x = np.where(missing, x_unknown, x_known)
    return x


# ---------------------------------------------------------------------------
# Trainable toy denoiser
# ---------------------------------------------------------------------------

@dataclass
class DenoiserArch:
    hidden: tuple[int, ...] = (128, 128)


@dataclass
class DenoiserTrainConfig:
    steps: int = 2000
    lr: float = 1e-3
    batch: int = 32
    seed: int = 0


class MLPDenoiser:
    """Fully connected noise predictor over flattened tensors.

    The network input is the flattened sample with t / T appended as a
    scalar time feature. ``data_shape`` records the tensor layout so the
    callable can accept and return unflattened arrays.
    """

    def __init__(self, data_shape: tuple[int, ...], hidden: tuple[int, ...], t_scale: int, seed: int = 0):
        self.data_shape = tuple(int(s) for s in data_shape)
        self.hidden = tuple(int(h) for h in hidden)
        self.t_scale = int(t_scale)
        dim = int(np.prod(self.data_shape))
        rng = split_rng(seed, 0)
        layers = []
        widths = [dim + 1, *self.hidden]
        for a, b in zip(widths[:-1], widths[1:]):
            layers.append(Dense(a, b, rng=rng))
            layers.append(LeakyReLU())
        layers.append(Dense(widths[-1], dim, rng=rng))
        self.net = Sequential(layers)

    def forward_batch(self, xb: np.ndarray, tb: np.ndarray, train: bool) -> np.ndarray:
        feats = np.concatenate([xb, tb[:, None] / self.t_scale], axis=1)
        return self.net.forward(feats, train)

    def backward_batch(self, dpred: np.ndarray) -> None:
        self.net.backward(dpred)

    def __call__(self, x_t: np.ndarray, t: int) -> np.ndarray:
        x_t = np.asarray(x_t, dtype=np.float64)
        if x_t.shape != self.data_shape:
            raise ValueError(f"expected input shape {self.data_shape}, got {x_t.shape}")
        xb = x_t.reshape(1, -1)
        out = self.forward_batch(xb, np.array([float(t)]), train=False)
        return out.reshape(self.data_shape)

    def parameters(self):
        return self.net.params()

    def arrays(self):
        return self.net.arrays()

    def arch_dict(self) -> dict:
        return {
            "kind": "mlp_denoiser",
            "data_shape": list(self.data_shape),
            "hidden": list(self.hidden),
            "t_scale": self.t_scale,
        }


def train_denoiser(
    dataset,
    sched: NoiseSchedule,
    arch: DenoiserArch | None = None,
    cfg: DenoiserTrainConfig | None = None,
) -> tuple[MLPDenoiser, list[float]]:
    """Fit the noise-prediction objective E||eps - eps_hat(x_t, t)||^2 by AdamW.

    Each step draws a batch of (x0, t, eps) triples, forms x_t from the
    closed-form forward marginal, and regresses the injected noise.
    Returns the trained denoiser and the per-step loss curve.
    """
    arch = arch or DenoiserArch()
    cfg = cfg or DenoiserTrainConfig()
    data = np.stack([np.asarray(x, dtype=np.float64) for x in dataset])
    if data.shape[0] == 0:
        raise ValueError("dataset is empty")
    data_shape = data.shape[1:]
    flat = data.reshape(data.shape[0], -1)
    den = MLPDenoiser(data_shape, arch.hidden, sched.T, seed=cfg.seed)
    opt = AdamW(den.parameters(), lr=cfg.lr)
    rng = split_rng(cfg.seed, 1)
    losses: list[float] = []
    for step in range(cfg.steps):
        idx = rng.integers(0, flat.shape[0], size=cfg.batch)
        tb = rng.integers(1, sched.T + 1, size=cfg.batch)
        eps = rng.standard_normal((cfg.batch, flat.shape[1]))
        ab = sched.alpha_bar[tb][:, None]
        x_t = np.sqrt(ab) * flat[idx] + np.sqrt(1.0 - ab) * eps
        pred = den.forward_batch(x_t, tb.astype(np.float64), train=True)
        diff = pred - eps
        loss = float(np.mean(diff**2))
        if not np.isfinite(loss):
            raise FloatingPointError(f"denoiser training diverged at step {step}: loss={loss}")
        losses.append(loss)
        opt.zero_grad()
        den.backward_batch(2.0 * diff / diff.size)
        opt.step()
    return den, losses
