"""Ordered layer pipelines split into named segments."""
import numpy as np

from ..errors import ShapeMismatch
from . import layers as L
from .store import ParameterStore


class ModelGraph:
    """A chain of layers grouped into segments such as ``encoder`` or ``head``.

    Layers in a frozen segment run in eval mode (running batch-norm
    statistics, no dropout) and never accumulate gradients.
    """

    def __init__(self, input_shape, dtype=np.float64):
        self.input_shape = tuple(input_shape)
        self.layers = []  # (segment, LayerSpec)
        self.shapes = [self.input_shape]
        self.store = ParameterStore(dtype)
        self.frozen_segments = set()
        self.plan = None

    def add(self, segment, layer, rng):
        out = layer.output_shape(self.shapes[-1])
        params, buffers = L.init_params(layer, rng, self.store.dtype)
        for name, value in params.items():
            self.store.add(f"{layer.name}.{name}", value)
        for name, value in buffers.items():
            self.store.add_buffer(f"{layer.name}.{name}", value)
        self.layers.append((segment, layer))
        self.shapes.append(out)
        return out

    @property
    def output_shape(self):
        return self.shapes[-1]

    def segments(self):
        return list(dict.fromkeys(seg for seg, _ in self.layers))

    def segment_range(self, segment):
        idx = [i for i, (seg, _) in enumerate(self.layers) if seg == segment]
        if not idx:
            raise KeyError(f"no segment {segment!r}")
        return idx[0], idx[-1] + 1

    def param_names(self, segment=None):
        return [f"{layer.name}.{p}" for seg, layer in self.layers
                if segment in (None, seg) for p in layer.param_shapes()]

    def freeze(self, segment):
        self.frozen_segments.add(segment)
        self.store.freeze(self.param_names(segment))

    def n_params(self, segment=None):
        return int(sum(self.store.params[n].size for n in self.param_names(segment)))

    def forward(self, x, mode="eval", rng=None, start=0, stop=None):
        """Run layers ``start:stop``; returns ``(output, caches)``."""
        stop = len(self.layers) if stop is None else stop
        x = np.asarray(x, dtype=self.store.dtype)
        if x.shape[1:] != self.shapes[start]:
            raise ShapeMismatch(f"input {x.shape[1:]} vs expected {self.shapes[start]}")
        caches = []
        for seg, layer in self.layers[start:stop]:
            layer_mode = "eval" if seg in self.frozen_segments else mode
            x, cache = L.forward(layer, self.store, x, layer_mode, rng)
            caches.append(cache)
        return x, caches

    def backward(self, caches, g, start=0, need_input_grad=False):
        """Back-propagate ``g`` through the layers covered by ``caches``.

        Gradients accumulate additively into the store.  Propagation stops
        early once every remaining layer is frozen, unless the input
        gradient is requested.
        """
        chain = self.layers[start : start + len(caches)]
        first_live = 0
        if not need_input_grad:
            live = [i for i, (seg, lay) in enumerate(chain)
                    if seg not in self.frozen_segments and lay.param_shapes()]
            if not live:
                return None
            first_live = live[0]
        for i in range(len(chain) - 1, first_live - 1, -1):
            seg, layer = chain[i]
            g, grads = L.backward(layer, self.store, caches[i], g)
            for name, value in grads.items():
                self.store.accumulate(f"{layer.name}.{name}", value)
        return g if need_input_grad or first_live == 0 else None

    def describe(self):
        """Rows of ``(segment, name, kind, output_shape, n_params)``."""
        rows = []
        for (seg, layer), shape in zip(self.layers, self.shapes[1:]):
            count = sum(int(np.prod(s)) for s in layer.param_shapes().values())
            rows.append((seg, layer.name, layer.kind, shape, count))
        return rows
