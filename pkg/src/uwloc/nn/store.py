"""Named trainable arrays, their gradients, and Adam state."""
import numpy as np

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class ParameterStore:
    """Parameters, non-trainable buffers, gradient buffers and Adam moments.

    ``version`` increases on every update so stale forward caches can be
    detected.  Frozen parameters never change and never accumulate gradients.
    """

    def __init__(self, dtype=np.float64):
        self.dtype = np.dtype(dtype)
        self.params = {}
        self.buffers = {}
        self.grads = {}
        self.m = {}
        self.v = {}
        self.frozen = set()
        self.step = 0
        self.version = 0

    def add(self, name, value):
        value = np.array(value, dtype=self.dtype)
        self.params[name] = value
        self.grads[name] = np.zeros_like(value)
        self.m[name] = np.zeros_like(value)
        self.v[name] = np.zeros_like(value)

    def add_buffer(self, name, value):
        self.buffers[name] = np.array(value, dtype=self.dtype)

    def freeze(self, names):
        names = set(names)
        unknown = names - set(self.params)
        if unknown:
            raise KeyError(f"cannot freeze unknown parameters {sorted(unknown)}")
        self.frozen |= names

    def trainable(self):
        return [n for n in self.params if n not in self.frozen]

    def accumulate(self, name, grad):
        if name in self.frozen:
            return
        self.grads[name] += grad

    def zero_grad(self):
        for g in self.grads.values():
            g.fill(0.0)

    def adam_step(self, lr, beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS):
        """Bias-corrected Adam on every unfrozen parameter, then zero gradients."""
        self.step += 1
        c1 = 1.0 - beta1**self.step
        c2 = 1.0 - beta2**self.step
        for name in self.trainable():
            g = self.grads[name]
            m, v = self.m[name], self.v[name]
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            self.params[name] -= (lr * (m / c1) / (np.sqrt(v / c2) + eps)).astype(self.dtype, copy=False)
        self.zero_grad()
        self.version += 1

    def copy_from(self, other, names):
        """Copy parameters and buffers with the given prefixes from another store."""
        for name, value in other.params.items():
            if any(name.startswith(p) for p in names):
                self.params[name][...] = value
        for name, value in other.buffers.items():
            if any(name.startswith(p) for p in names):
                self.buffers[name][...] = value
        self.version += 1
