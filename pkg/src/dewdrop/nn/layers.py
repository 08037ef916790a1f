"""Layers with explicit forward/backward passes.

Feature maps are NCHW float64 arrays. Convolutions are evaluated as
im2col + matmul so the heavy lifting lands in BLAS; transposed
convolution reuses the same three primitives since it is the adjoint of
convolution. Every layer caches what its backward pass needs during
forward, so the call order is forward -> backward within a step.

Weight init is uniform in +/- 1/sqrt(fan_in) with fan_in taken over all
non-leading weight axes, and zero biases.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Param:
    """A learnable array plus its gradient accumulator."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)


def _init_weight(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    fan_in = int(np.prod(shape[1:]))
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


# ---------------------------------------------------------------------------
# Convolution primitives
# ---------------------------------------------------------------------------

def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int):
    """Flatten sliding windows into rows: (N*Ho*Wo, C*kh*kw)."""
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = sliding_window_view(x, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    n, c, ho, wo = win.shape[:4]
    cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(n * ho * wo, c * kh * kw)
    return cols, ho, wo


def _col2im(dcols: np.ndarray, x_shape, kh: int, kw: int, stride: int, pad: int, ho: int, wo: int):
    """Adjoint of _im2col: scatter-add window rows back onto the input grid."""
    n, c, h, w = x_shape
    hp, wp = h + 2 * pad, w + 2 * pad
    dwin = dcols.reshape(n, ho, wo, c, kh, kw).transpose(0, 3, 1, 2, 4, 5)
    out = np.zeros((n, c, hp, wp))
    for i in range(kh):
        for j in range(kw):
            out[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += dwin[:, :, :, :, i, j]
    if pad:
        out = out[:, :, pad : pad + h, pad : pad + w]
    return out


def conv2d_forward(x, weight, bias, stride, pad):
    """Cross-correlation with weight (O, C, kh, kw); returns (y, cols, ho, wo)."""
    o, _, kh, kw = weight.shape
    n = x.shape[0]
    cols, ho, wo = _im2col(x, kh, kw, stride, pad)
    y = cols @ weight.reshape(o, -1).T
    if bias is not None:
        y += bias
    return y.reshape(n, ho, wo, o).transpose(0, 3, 1, 2), cols, ho, wo


def conv2d_weight_grad(cols, dy, weight_shape):
    o = weight_shape[0]
    dyr = np.ascontiguousarray(dy.transpose(0, 2, 3, 1)).reshape(-1, o)
    return (dyr.T @ cols).reshape(weight_shape)


def conv2d_input_grad(dy, weight, x_shape, stride, pad):
    o, _, kh, kw = weight.shape
    n, ho, wo = dy.shape[0], dy.shape[2], dy.shape[3]
    dyr = np.ascontiguousarray(dy.transpose(0, 2, 3, 1)).reshape(-1, o)
    dcols = dyr @ weight.reshape(o, -1)
    return _col2im(dcols, x_shape, kh, kw, stride, pad, ho, wo)


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------

class Layer:
    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> list[Param]:
        return []

    def arrays(self) -> list[tuple[str, np.ndarray]]:
        """Persistent state in declaration order (parameters, then buffers)."""
        return [(p.name, p.value) for p in self.params()]


class Conv2d(Layer):
    def __init__(self, in_channels, out_channels, kernel, stride=1, pad=0, *, rng):
        self.stride = stride
        self.pad = pad
        self.weight = Param("weight", _init_weight(rng, (out_channels, in_channels, kernel, kernel)))
        self.bias = Param("bias", np.zeros(out_channels))
        self._cache = None

    def forward(self, x, train):
        y, cols, ho, wo = conv2d_forward(x, self.weight.value, self.bias.value, self.stride, self.pad)
        self._cache = (x.shape, cols)
        return y

    def backward(self, dy):
        x_shape, cols = self._cache
        self.weight.grad += conv2d_weight_grad(cols, dy, self.weight.value.shape)
        self.bias.grad += dy.sum(axis=(0, 2, 3))
        return conv2d_input_grad(dy, self.weight.value, x_shape, self.stride, self.pad)

    def params(self):
        return [self.weight, self.bias]


class ConvTranspose2d(Layer):
    """Transposed convolution, the adjoint of Conv2d with the same geometry.

    Weight layout is (in_channels, out_channels, k, k); output size is
    (H - 1) * stride - 2 * pad + k per spatial axis.
    """

    def __init__(self, in_channels, out_channels, kernel, stride=2, pad=1, *, rng):
        self.stride = stride
        self.pad = pad
        self.kernel = kernel
        self.out_channels = out_channels
        self.weight = Param("weight", _init_weight(rng, (in_channels, out_channels, kernel, kernel)))
        self.bias = Param("bias", np.zeros(out_channels))
        self._cache = None

    def forward(self, x, train):
        n, _, h, w = x.shape
        ho = (h - 1) * self.stride - 2 * self.pad + self.kernel
        wo = (w - 1) * self.stride - 2 * self.pad + self.kernel
        y_shape = (n, self.out_channels, ho, wo)
        y = conv2d_input_grad(x, self.weight.value, y_shape, self.stride, self.pad)
        y += self.bias.value[None, :, None, None]
        self._cache = x
        return y

    def backward(self, dy):
        x = self._cache
        # dx is a plain convolution of dy with the stored weight.
        dx, cols, _, _ = conv2d_forward(dy, self.weight.value, None, self.stride, self.pad)
        self.weight.grad += conv2d_weight_grad(cols, x, self.weight.value.shape)
        self.bias.grad += dy.sum(axis=(0, 2, 3))
        return dx

    def params(self):
        return [self.weight, self.bias]


class BatchNorm2d(Layer):
    """Per-channel batch normalization with affine parameters.

    Training mode normalizes with batch statistics over (N, H, W) and
    updates running averages with momentum 0.1; eval mode normalizes
    with the running averages, so inference is deterministic.
    """

    def __init__(self, channels, momentum=0.1, eps=1e-5):
        self.momentum = momentum
        self.eps = eps
        self.gamma = Param("gamma", np.ones(channels))
        self.beta = Param("beta", np.zeros(channels))
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self._cache = None

    def forward(self, x, train):
        if train:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            self.running_mean = (1 - self.momentum) * self.running_mean + self.momentum * mean
            self.running_var = (1 - self.momentum) * self.running_var + self.momentum * var
        else:
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
        self._cache = (xhat, inv_std, train, x.shape)
        return self.gamma.value[None, :, None, None] * xhat + self.beta.value[None, :, None, None]

    def backward(self, dy):
        xhat, inv_std, train, x_shape = self._cache
        self.gamma.grad += (dy * xhat).sum(axis=(0, 2, 3))
        self.beta.grad += dy.sum(axis=(0, 2, 3))
        g = self.gamma.value[None, :, None, None] * inv_std[None, :, None, None]
        if not train:
            return dy * g
        n, _, h, w = x_shape
        m = n * h * w
        dxhat = dy * self.gamma.value[None, :, None, None]
        sum_dxhat = dxhat.sum(axis=(0, 2, 3), keepdims=True)
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
        return (inv_std[None, :, None, None] / m) * (m * dxhat - sum_dxhat - xhat * sum_dxhat_xhat)

    def params(self):
        return [self.gamma, self.beta]

    def arrays(self):
        return [
            ("gamma", self.gamma.value),
            ("beta", self.beta.value),
            ("running_mean", self.running_mean),
            ("running_var", self.running_var),
        ]


class LeakyReLU(Layer):
    def __init__(self, slope=0.01):
        self.slope = slope
        self._mask = None

    def forward(self, x, train):
        self._mask = x > 0
        return np.where(self._mask, x, self.slope * x)

    def backward(self, dy):
        return np.where(self._mask, dy, self.slope * dy)


class Sigmoid(Layer):
    def forward(self, x, train):
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        self._out = out
        return out

    def backward(self, dy):
        return dy * self._out * (1.0 - self._out)


class Dense(Layer):
    def __init__(self, in_features, out_features, *, rng):
        self.weight = Param("weight", _init_weight(rng, (out_features, in_features)))
        self.bias = Param("bias", np.zeros(out_features))
        self._x = None

    def forward(self, x, train):
        self._x = x
        return x @ self.weight.value.T + self.bias.value

    def backward(self, dy):
        self.weight.grad += dy.T @ self._x
        self.bias.grad += dy.sum(axis=0)
        return dy @ self.weight.value

    def params(self):
        return [self.weight, self.bias]


class Sequential(Layer):
    def __init__(self, layers: list[Layer]):
        self.layers = list(layers)

    def forward(self, x, train):
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, dy):
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def params(self):
        return [p for layer in self.layers for p in layer.params()]

    def arrays(self):
        out = []
        for i, layer in enumerate(self.layers):
            out.extend((f"{i}.{name}", arr) for name, arr in layer.arrays())
        return out
