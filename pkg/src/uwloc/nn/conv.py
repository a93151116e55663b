"""Valid-padding strided 2-D correlation and its two adjoints.

Tensors are ``(batch, channels, height, width)``; 1-D layers pass ``height=1``.
Every call does one im2col (or col2im) pass plus a single GEMM.  The
scatter order in col2im is fixed, so results are bitwise reproducible for a
given BLAS thread count.
"""
import numpy as np


def out_size(n, k, s):
    return (n - k) // s + 1


def _window(x, i, j, ho, wo, sh, sw):
    return x[..., i : i + sh * (ho - 1) + 1 : sh, j : j + sw * (wo - 1) + 1 : sw]


def _im2col(xt, kh, kw, ho, wo, sh, sw):
    """``xt`` is (C,B,H,W); returns (C*kh*kw, B*ho*wo)."""
    c, b = xt.shape[:2]
    cols = np.empty((c, kh, kw, b, ho, wo), dtype=xt.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, i, j] = _window(xt, i, j, ho, wo, sh, sw)
    return cols.reshape(c * kh * kw, b * ho * wo)


def _channels_first(t):
    """(B,C,H,W) -> contiguous (C, B*H*W)."""
    return np.ascontiguousarray(t.transpose(1, 0, 2, 3)).reshape(t.shape[1], -1)


def conv_forward(x, w, stride=(1, 1)):
    """Correlate ``x`` (B,C,H,W) with ``w`` (O,C,kh,kw); returns (B,O,Ho,Wo)."""
    sh, sw = stride
    b, _, h, wd = x.shape
    o, _, kh, kw = w.shape
    ho, wo = out_size(h, kh, sh), out_size(wd, kw, sw)
    cols = _im2col(x.transpose(1, 0, 2, 3), kh, kw, ho, wo, sh, sw)
    out = w.reshape(o, -1) @ cols
    return np.ascontiguousarray(out.reshape(o, b, ho, wo).transpose(1, 0, 2, 3))


def conv_backward_input(g, w, in_hw, stride=(1, 1)):
    """Adjoint of :func:`conv_forward` w.r.t. its input; ``g`` is (B,O,Ho,Wo)."""
    sh, sw = stride
    b, o, ho, wo = g.shape
    _, c, kh, kw = w.shape
    cols = (w.reshape(o, -1).T @ _channels_first(g)).reshape(c, kh, kw, b, ho, wo)
    gx = np.zeros((c, b) + tuple(in_hw), dtype=g.dtype)
    for i in range(kh):
        for j in range(kw):
            _window(gx, i, j, ho, wo, sh, sw)[...] += cols[:, i, j]
    return np.ascontiguousarray(gx.transpose(1, 0, 2, 3))


def conv_backward_weight(x, g, kernel, stride=(1, 1)):
    """Gradient of :func:`conv_forward` w.r.t. the weight, shape (O,C,kh,kw)."""
    sh, sw = stride
    kh, kw = kernel
    _, o, ho, wo = g.shape
    c = x.shape[1]
    cols = _im2col(x.transpose(1, 0, 2, 3), kh, kw, ho, wo, sh, sw)
    return (_channels_first(g) @ cols.T).reshape(o, c, kh, kw)
