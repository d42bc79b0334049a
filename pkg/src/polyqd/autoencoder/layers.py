"""Layers with hand-written backward passes (NHWC layout).

Every layer exposes ``forward(x)``, ``backward(grad_out) -> grad_in``, a
``params`` dict and a matching ``grads`` dict filled by ``backward``.
Convolutions gather the nine strided kernel-offset slices into columns
(im2col) so each pass is a single matrix product.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit


class Layer:
    params: dict
    grads: dict

    def __init__(self):
        self.params = {}
        self.grads = {}

    def forward(self, x):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError


def _uniform_fan_in(rng, shape, fan_in, dtype):
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Conv2D(Layer):
    """Square-kernel convolution with symmetric zero padding."""

    def __init__(self, in_channels, out_channels, rng, kernel=3, stride=2, padding=1,
                 dtype=np.float32, input_grad=True):
        super().__init__()
        self.kernel, self.stride, self.padding = kernel, stride, padding
        # the network's first layer has no use for a gradient w.r.t. the image
        self.input_grad = input_grad
        fan_in = in_channels * kernel * kernel
        self.params["W"] = _uniform_fan_in(
            rng, (kernel, kernel, in_channels, out_channels), fan_in, dtype)
        self.params["b"] = np.zeros(out_channels, dtype=dtype)

    def output_size(self, n):
        return (n + 2 * self.padding - self.kernel) // self.stride + 1

    def forward(self, x):
        p, s, k = self.padding, self.stride, self.kernel
        W = self.params["W"]
        xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
        ho, wo = self.output_size(x.shape[1]), self.output_size(x.shape[2])
        # im2col: (B, ho, wo, k*k, C_in), one matmul against (k*k*C_in, C_out)
        cols = np.stack([xp[:, di:di + s * ho:s, dj:dj + s * wo:s, :]
                         for di in range(k) for dj in range(k)], axis=3)
        cols = cols.reshape(-1, k * k * x.shape[3])
        out = cols @ W.reshape(-1, W.shape[3]) + self.params["b"]
        self._cache = (x.shape, xp.shape, cols, ho, wo)
        return out.reshape(x.shape[0], ho, wo, W.shape[3])

    def backward(self, grad):
        p, s, k = self.padding, self.stride, self.kernel
        W = self.params["W"]
        shape, xp_shape, cols, ho, wo = self._cache
        g2 = grad.reshape(-1, grad.shape[-1])
        self.grads["W"] = (cols.T @ g2).reshape(W.shape)
        self.grads["b"] = g2.sum(axis=0)
        if not self.input_grad:
            return None
        dcols = (g2 @ W.reshape(-1, W.shape[3]).T).reshape(shape[0], ho, wo, k * k, shape[3])
        dxp = np.zeros(xp_shape, dtype=grad.dtype)
        for n, (di, dj) in enumerate((di, dj) for di in range(k) for dj in range(k)):
            dxp[:, di:di + s * ho:s, dj:dj + s * wo:s, :] += dcols[:, :, :, n]
        return dxp[:, p:p + shape[1], p:p + shape[2], :]


class ConvTranspose2D(Layer):
    """Transposed convolution; output size ``(n - 1) * stride - 2 * padding +
    kernel + output_padding`` (``2 n`` with the defaults)."""

    def __init__(self, in_channels, out_channels, rng, kernel=3, stride=2, padding=1,
                 output_padding=1, dtype=np.float32):
        super().__init__()
        self.kernel, self.stride = kernel, stride
        self.padding, self.output_padding = padding, output_padding
        fan_in = in_channels * kernel * kernel
        self.params["W"] = _uniform_fan_in(
            rng, (kernel, kernel, in_channels, out_channels), fan_in, dtype)
        self.params["b"] = np.zeros(out_channels, dtype=dtype)

    def output_size(self, n):
        return (n - 1) * self.stride - 2 * self.padding + self.kernel + self.output_padding

    def _flat_weights(self):
        # (k, k, C_in, C_out) -> (C_in, k*k*C_out)
        W = self.params["W"]
        return W.transpose(2, 0, 1, 3).reshape(W.shape[2], -1)

    def forward(self, x):
        p, s, k = self.padding, self.stride, self.kernel
        cout = self.params["W"].shape[3]
        b, h, w, cin = x.shape
        full_h = (h - 1) * s + k + self.output_padding
        full_w = (w - 1) * s + k + self.output_padding
        # every input pixel emits a k x k patch, scattered at stride s
        patches = (x.reshape(-1, cin) @ self._flat_weights()).reshape(b, h, w, k * k, cout)
        full = np.zeros((b, full_h, full_w, cout), dtype=x.dtype)
        for n, (di, dj) in enumerate((di, dj) for di in range(k) for dj in range(k)):
            full[:, di:di + s * h:s, dj:dj + s * w:s, :] += patches[:, :, :, n]
        ho, wo = self.output_size(h), self.output_size(w)
        self._cache = (x, full.shape, ho, wo)
        return full[:, p:p + ho, p:p + wo, :] + self.params["b"]

    def backward(self, grad):
        p, s, k = self.padding, self.stride, self.kernel
        W = self.params["W"]
        x, full_shape, ho, wo = self._cache
        b, h, w, cin = x.shape
        gfull = np.zeros(full_shape, dtype=grad.dtype)
        gfull[:, p:p + ho, p:p + wo, :] = grad
        gcols = np.stack([gfull[:, di:di + s * h:s, dj:dj + s * w:s, :]
                          for di in range(k) for dj in range(k)], axis=3)
        gcols = gcols.reshape(b * h * w, -1)
        x2 = x.reshape(-1, cin)
        self.grads["W"] = (x2.T @ gcols).reshape(cin, k, k, W.shape[3]).transpose(1, 2, 0, 3)
        self.grads["b"] = grad.reshape(-1, grad.shape[-1]).sum(axis=0)
        return (gcols @ self._flat_weights().T).reshape(x.shape)


class Dense(Layer):
    def __init__(self, in_features, out_features, rng, dtype=np.float32):
        super().__init__()
        self.params["W"] = _uniform_fan_in(rng, (in_features, out_features), in_features, dtype)
        self.params["b"] = np.zeros(out_features, dtype=dtype)

    def forward(self, x):
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, grad):
        self.grads["W"] = self._x.T @ grad
        self.grads["b"] = grad.sum(axis=0)
        return grad @ self.params["W"].T


class ReLU(Layer):
    def forward(self, x):
        self._mask = x > 0
        return np.maximum(x, 0)

    def backward(self, grad):
        return grad * self._mask


class Sigmoid(Layer):
    def forward(self, x):
        self._out = expit(x)
        return self._out

    def backward(self, grad):
        return grad * self._out * (1.0 - self._out)


class Reshape(Layer):
    def __init__(self, shape):
        super().__init__()
        self.shape = tuple(shape)

    def forward(self, x):
        self._in_shape = x.shape
        return x.reshape((x.shape[0],) + self.shape)

    def backward(self, grad):
        return grad.reshape(self._in_shape)


class Sequential(Layer):
    def __init__(self, layers):
        super().__init__()
        self.layers = list(layers)

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def parameters(self):
        """(layer, name) pairs in layer order."""
        return [(layer, name) for layer in self.layers for name in layer.params]


class Adam:
    def __init__(self, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self._m = {}
        self._v = {}

    def step(self, slots):
        """Update every ``(layer, name)`` in ``slots`` from ``layer.grads[name]``."""
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for key, (layer, name) in enumerate(slots):
            g = layer.grads[name]
            m = self._m.get(key)
            if m is None:
                m = self._m[key] = np.zeros_like(g)
                self._v[key] = np.zeros_like(g)
            v = self._v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = self.learning_rate * (m / c1) / (np.sqrt(v / c2) + self.eps)
            layer.params[name] -= update.astype(layer.params[name].dtype, copy=False)
