"""Fixed layer set with explicit forward/backward passes.

Every layer computes float64 and returns (output, cache) from forward;
backward takes (d_output, cache), accumulates parameter gradients in
place, and returns d_input. Caches are plain tuples so that several
forward passes can be in flight before their backward passes run.
"""

import numpy as np


class Param:
    """A learnable array paired with a same-shaped gradient slot."""

    __slots__ = ("value", "grad")

    def __init__(self, value):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    def zero_grad(self):
        self.grad[...] = 0.0


class Layer:
    def params(self):
        return []

    def forward(self, x):
        raise NotImplementedError

    def backward(self, d_out, cache):
        raise NotImplementedError


class Conv2d(Layer):
    """3x3 convolution, stride 1, zero padding 1 (shape preserving)."""

    def __init__(self, in_channels, out_channels, rng):
        self.in_channels = in_channels
        self.out_channels = out_channels
        fan_in = in_channels * 9
        lim = np.sqrt(6.0 / fan_in)
        self.weight = Param(rng.uniform(-lim, lim, size=(out_channels, in_channels, 3, 3)))
        self.bias = Param(np.zeros(out_channels))

    def params(self):
        return [self.weight, self.bias]

    def forward(self, x):
        n, c, h, w = x.shape
        if c != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {c}")
        xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
        out = np.broadcast_to(self.bias.value[None, :, None, None], (n, self.out_channels, h, w)).copy()
        for ki in range(3):
            for kj in range(3):
                out += np.einsum(
                    "nchw,oc->nohw", xp[:, :, ki : ki + h, kj : kj + w], self.weight.value[:, :, ki, kj]
                )
        return out, xp

    def backward(self, d_out, cache):
        xp = cache
        h, w = d_out.shape[2], d_out.shape[3]
        self.bias.grad += d_out.sum(axis=(0, 2, 3))
        d_xp = np.zeros_like(xp)
        for ki in range(3):
            for kj in range(3):
                x_slice = xp[:, :, ki : ki + h, kj : kj + w]
                self.weight.grad[:, :, ki, kj] += np.einsum("nohw,nchw->oc", d_out, x_slice)
                d_xp[:, :, ki : ki + h, kj : kj + w] += np.einsum(
                    "nohw,oc->nchw", d_out, self.weight.value[:, :, ki, kj]
                )
        return d_xp[:, :, 1 : h + 1, 1 : w + 1]


class ReLU(Layer):
    def forward(self, x):
        mask = x > 0
        return x * mask, mask

    def backward(self, d_out, cache):
        return d_out * cache


class MaxPool2(Layer):
    """2x2 max pooling with stride 2; odd trailing rows/columns are dropped."""

    def forward(self, x):
        n, c, h, w = x.shape
        ho, wo = h // 2, w // 2
        xc = x[:, :, : ho * 2, : wo * 2]
        windows = xc.reshape(n, c, ho, 2, wo, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho, wo, 4)
        idx = windows.argmax(axis=-1)
        out = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]
        return out, (x.shape, idx)

    def backward(self, d_out, cache):
        (n, c, h, w), idx = cache
        ho, wo = h // 2, w // 2
        d_windows = np.zeros((n, c, ho, wo, 4))
        np.put_along_axis(d_windows, idx[..., None], d_out[..., None], axis=-1)
        d_x = np.zeros((n, c, h, w))
        d_x[:, :, : ho * 2, : wo * 2] = (
            d_windows.reshape(n, c, ho, wo, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho * 2, wo * 2)
        )
        return d_x


class Flatten(Layer):
    def forward(self, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, d_out, cache):
        return d_out.reshape(cache)


class Linear(Layer):
    def __init__(self, in_features, out_features, rng):
        self.in_features = in_features
        self.out_features = out_features
        lim = np.sqrt(6.0 / in_features)
        self.weight = Param(rng.uniform(-lim, lim, size=(out_features, in_features)))
        self.bias = Param(np.zeros(out_features))

    def params(self):
        return [self.weight, self.bias]

    def forward(self, x):
        if x.shape[1] != self.in_features:
            raise ValueError(f"expected {self.in_features} input features, got {x.shape[1]}")
        return x @ self.weight.value.T + self.bias.value, x

    def backward(self, d_out, cache):
        x = cache
        self.weight.grad += d_out.T @ x
        self.bias.grad += d_out.sum(axis=0)
        return d_out @ self.weight.value
