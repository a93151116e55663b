"""Layer kinds with explicit forward and backward passes.

``forward`` returns ``(output, cache)``; ``backward`` consumes that cache and
returns ``(grad_input, grad_params)``.  Convolutions use valid padding.
``mode`` is ``train``, ``eval`` or ``check``; ``check`` uses batch statistics
without touching running stats and leaves dropout off, which makes the pass a
deterministic function for finite-difference checks.
Transposed convolutions produce ``(L - 1) * stride + k`` and then crop from
the top-left corner to ``crop`` when one is given.
"""
from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch, StaleCache
from .conv import conv_backward_input, conv_backward_weight, conv_forward, out_size

KINDS = (
    "Conv1D",
    "Conv2D",
    "TransposedConv2D",
    "TransposedConv1D",
    "Dense",
    "BatchNorm",
    "LeakyReLU",
    "Sigmoid",
    "Dropout",
    "Reshape",
    "Flatten",
)


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    name: str
    in_channels: int = 0
    out_channels: int = 0
    kernel: int = 0
    stride: int = 1
    crop: tuple | None = None
    p: float = 0.2
    alpha: float = 0.01
    momentum: float = 0.1
    eps: float = 1e-5
    shape: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind in ("Conv1D", "Conv2D", "TransposedConv1D", "TransposedConv2D"):
            if self.kernel < 1 or self.stride < 1:
                raise ValueError(f"{self.name}: kernel and stride must be positive")
        if self.kind == "Dropout" and not 0.0 <= self.p < 1.0:
            raise ValueError(f"{self.name}: dropout p must lie in [0, 1)")
        if self.kind == "LeakyReLU" and self.alpha <= 0:
            raise ValueError(f"{self.name}: leaky slope must be positive")

    @property
    def spatial_dims(self):
        return 1 if self.kind.endswith("1D") else 2

    def param_shapes(self):
        k, c_in, c_out = self.kernel, self.in_channels, self.out_channels
        if self.kind == "Conv1D":
            return {"weight": (c_out, c_in, k), "bias": (c_out,)}
        if self.kind == "Conv2D":
            return {"weight": (c_out, c_in, k, k), "bias": (c_out,)}
        if self.kind == "TransposedConv1D":
            return {"weight": (c_in, c_out, k), "bias": (c_out,)}
        if self.kind == "TransposedConv2D":
            return {"weight": (c_in, c_out, k, k), "bias": (c_out,)}
        if self.kind == "Dense":
            return {"weight": (c_in, c_out), "bias": (c_out,)}
        if self.kind == "BatchNorm":
            return {"gamma": (c_in,), "beta": (c_in,)}
        return {}

    def buffer_shapes(self):
        if self.kind == "BatchNorm":
            return {"running_mean": (self.in_channels,), "running_var": (self.in_channels,)}
        return {}

    def output_shape(self, in_shape):
        """Per-sample output shape for a per-sample input shape."""
        k, s = self.kernel, self.stride
        if self.kind in ("Conv1D", "TransposedConv1D", "Conv2D", "TransposedConv2D"):
            if in_shape[0] != self.in_channels or len(in_shape) != 1 + self.spatial_dims:
                raise ShapeMismatch(f"{self.name}: input {in_shape} vs {self.in_channels} channels")
            if self.kind.startswith("Conv"):
                sizes = tuple(out_size(n, k, s) for n in in_shape[1:])
                if min(sizes) < 1:
                    raise ShapeMismatch(f"{self.name}: kernel {k} exceeds input {in_shape[1:]}")
            else:
                sizes = tuple((n - 1) * s + k for n in in_shape[1:])
                if self.crop is not None:
                    sizes = tuple(self.crop)
            return (self.out_channels,) + sizes
        if self.kind == "Dense":
            if in_shape != (self.in_channels,):
                raise ShapeMismatch(f"{self.name}: input {in_shape} vs ({self.in_channels},)")
            return (self.out_channels,)
        if self.kind == "Reshape":
            if int(np.prod(in_shape)) != int(np.prod(self.shape)):
                raise ShapeMismatch(f"{self.name}: cannot reshape {in_shape} to {self.shape}")
            return tuple(self.shape)
        if self.kind == "Flatten":
            return (int(np.prod(in_shape)),)
        return tuple(in_shape)


def init_params(layer, rng, dtype=np.float64):
    """Uniform +-sqrt(6 / fan_in) weights, zero biases, unit batch-norm scale."""
    out = {}
    for pname, shape in layer.param_shapes().items():
        if pname == "weight":
            if layer.kind == "Dense":
                fan_in = shape[0]
            else:
                fan_in = layer.in_channels * layer.kernel**layer.spatial_dims
            bound = np.sqrt(6.0 / fan_in)
            out[pname] = rng.uniform(-bound, bound, size=shape).astype(dtype)
        elif pname == "gamma":
            out[pname] = np.ones(shape, dtype=dtype)
        else:
            out[pname] = np.zeros(shape, dtype=dtype)
    buffers = {}
    for bname, shape in layer.buffer_shapes().items():
        buffers[bname] = (np.zeros if bname == "running_mean" else np.ones)(shape, dtype=dtype)
    return out, buffers


def _as4d(x, dims):
    return x[:, :, None, :] if dims == 1 else x


def _w4d(w, dims):
    return w[:, :, None, :] if dims == 1 else w


def _stride(layer):
    return (1, layer.stride) if layer.spatial_dims == 1 else (layer.stride, layer.stride)


def forward(layer, store, x, mode="train", rng=None, update_stats=True):
    kind = layer.kind
    P = lambda n: store.params[f"{layer.name}.{n}"]  # noqa: E731
    cache = {"version": store.version, "in_shape": x.shape}

    if kind in ("Conv1D", "Conv2D"):
        dims = layer.spatial_dims
        if x.ndim != 2 + dims or x.shape[1] != layer.in_channels:
            raise ShapeMismatch(f"{layer.name}: got input {x.shape}")
        if min(x.shape[2:]) < layer.kernel:
            raise ShapeMismatch(f"{layer.name}: kernel {layer.kernel} exceeds input {x.shape[2:]}")
        x4 = _as4d(x, dims)
        y = conv_forward(x4, _w4d(P("weight"), dims), _stride(layer))
        y += P("bias")[None, :, None, None]
        cache["x4"] = x4
        return (y[:, :, 0, :] if dims == 1 else y), cache

    if kind in ("TransposedConv1D", "TransposedConv2D"):
        dims = layer.spatial_dims
        if x.ndim != 2 + dims or x.shape[1] != layer.in_channels:
            raise ShapeMismatch(f"{layer.name}: got input {x.shape}")
        x4 = _as4d(x, dims)
        stride = _stride(layer)
        kh = 1 if dims == 1 else layer.kernel
        full = ((x4.shape[2] - 1) * stride[0] + kh, (x4.shape[3] - 1) * stride[1] + layer.kernel)
        y = conv_backward_input(x4, _w4d(P("weight"), dims), full, stride)
        if layer.crop is not None:
            th, tw = (1, layer.crop[0]) if dims == 1 else tuple(layer.crop)
            if th > full[0] or tw > full[1]:
                raise ShapeMismatch(f"{layer.name}: crop {layer.crop} larger than output {full}")
            y = y[:, :, :th, :tw]
        y = y + P("bias")[None, :, None, None]
        cache["x4"] = x4
        cache["full"] = full
        return (y[:, :, 0, :] if dims == 1 else y), cache

    if kind == "Dense":
        if x.ndim != 2 or x.shape[1] != layer.in_channels:
            raise ShapeMismatch(f"{layer.name}: got input {x.shape}")
        cache["x"] = x
        return x @ P("weight") + P("bias"), cache

    if kind == "BatchNorm":
        if x.ndim < 2 or x.shape[1] != layer.in_channels:
            raise ShapeMismatch(f"{layer.name}: got input {x.shape}")
        axes = (0,) + tuple(range(2, x.ndim))
        bshape = (1, -1) + (1,) * (x.ndim - 2)
        gamma = P("gamma").reshape(bshape)
        beta = P("beta").reshape(bshape)
        rm = store.buffers[f"{layer.name}.running_mean"]
        rv = store.buffers[f"{layer.name}.running_var"]
        if mode in ("train", "check"):
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            invstd = 1.0 / np.sqrt(var + layer.eps)
            xhat = (x - mean.reshape(bshape)) * invstd.reshape(bshape)
            if mode == "train" and update_stats:
                m = x.size // x.shape[1]
                unbiased = var * m / max(m - 1, 1)
                rm *= 1 - layer.momentum
                rm += layer.momentum * mean
                rv *= 1 - layer.momentum
                rv += layer.momentum * unbiased
        else:
            invstd = 1.0 / np.sqrt(rv + layer.eps)
            xhat = (x - rm.reshape(bshape)) * invstd.reshape(bshape)
        cache.update(xhat=xhat, invstd=invstd, mode=mode, axes=axes, bshape=bshape)
        return gamma * xhat + beta, cache

    if kind == "LeakyReLU":
        mask = x >= 0
        cache["mask"] = mask
        return np.where(mask, x, layer.alpha * x), cache

    if kind == "Sigmoid":
        y = 0.5 * (1.0 + np.tanh(0.5 * x))  # overflow-free logistic
        cache["y"] = y
        return y, cache

    if kind == "Dropout":
        if mode != "train" or layer.p == 0.0:
            cache["mask"] = None
            return x, cache
        if rng is None:
            raise ValueError(f"{layer.name}: train-mode dropout needs an rng")
        keep = (rng.random(x.shape) >= layer.p).astype(x.dtype) / (1.0 - layer.p)
        cache["mask"] = keep
        return x * keep, cache

    if kind == "Reshape":
        if int(np.prod(x.shape[1:])) != int(np.prod(layer.shape)):
            raise ShapeMismatch(f"{layer.name}: cannot reshape {x.shape[1:]} to {layer.shape}")
        return x.reshape((x.shape[0],) + tuple(layer.shape)), cache

    if kind == "Flatten":
        return x.reshape(x.shape[0], -1), cache

    raise ValueError(kind)


def backward(layer, store, cache, g):
    if cache.get("version") != store.version:
        raise StaleCache(f"{layer.name}: cache predates the latest parameter update")
    kind = layer.kind
    P = lambda n: store.params[f"{layer.name}.{n}"]  # noqa: E731
    grads = {}

    if kind in ("Conv1D", "Conv2D"):
        dims = layer.spatial_dims
        g4 = _as4d(g, dims)
        x4 = cache["x4"]
        w4 = _w4d(P("weight"), dims)
        kh = 1 if dims == 1 else layer.kernel
        gw = conv_backward_weight(x4, g4, (kh, layer.kernel), _stride(layer))
        grads["weight"] = gw[:, :, 0, :] if dims == 1 else gw
        grads["bias"] = g4.sum(axis=(0, 2, 3))
        gx = conv_backward_input(g4, w4, x4.shape[2:], _stride(layer))
        return (gx[:, :, 0, :] if dims == 1 else gx), grads

    if kind in ("TransposedConv1D", "TransposedConv2D"):
        dims = layer.spatial_dims
        g4 = _as4d(g, dims)
        x4 = cache["x4"]
        full = cache["full"]
        if g4.shape[2:] != full:
            padded = np.zeros(g4.shape[:2] + full, dtype=g4.dtype)
            padded[:, :, : g4.shape[2], : g4.shape[3]] = g4
        else:
            padded = g4
        w4 = _w4d(P("weight"), dims)
        kh = 1 if dims == 1 else layer.kernel
        gw = conv_backward_weight(padded, x4, (kh, layer.kernel), _stride(layer))
        grads["weight"] = gw[:, :, 0, :] if dims == 1 else gw
        grads["bias"] = g4.sum(axis=(0, 2, 3))
        gx = conv_forward(padded, w4, _stride(layer))
        return (gx[:, :, 0, :] if dims == 1 else gx), grads

    if kind == "Dense":
        x = cache["x"]
        grads["weight"] = x.T @ g
        grads["bias"] = g.sum(axis=0)
        return g @ P("weight").T, grads

    if kind == "BatchNorm":
        xhat, invstd, axes, bshape = cache["xhat"], cache["invstd"], cache["axes"], cache["bshape"]
        grads["gamma"] = np.sum(g * xhat, axis=axes)
        grads["beta"] = g.sum(axis=axes)
        gxhat = g * P("gamma").reshape(bshape)
        if cache["mode"] != "eval":
            m = g.size // g.shape[1]
            s1 = gxhat.sum(axis=axes).reshape(bshape)
            s2 = np.sum(gxhat * xhat, axis=axes).reshape(bshape)
            gx = (invstd.reshape(bshape) / m) * (m * gxhat - s1 - xhat * s2)
        else:
            gx = gxhat * invstd.reshape(bshape)
        return gx, grads

    if kind == "LeakyReLU":
        return np.where(cache["mask"], g, layer.alpha * g), grads

    if kind == "Sigmoid":
        y = cache["y"]
        return g * y * (1.0 - y), grads

    if kind == "Dropout":
        mask = cache["mask"]
        return (g if mask is None else g * mask), grads

    if kind in ("Reshape", "Flatten"):
        return g.reshape(cache["in_shape"]), grads

    raise ValueError(kind)
