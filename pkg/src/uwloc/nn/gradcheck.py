"""Central finite-difference check of analytic gradients."""
from dataclasses import dataclass

import numpy as np

from .loss import mse_loss

REL_FLOOR = 1e-6  # denominator floor so near-zero gradients compare absolutely


@dataclass
class GradCheckReport:
    max_rel_error: float
    per_array: dict
    n_coords: int
    n_kinked: int = 0

    def passed(self, tol=1e-4):
        return self.max_rel_error < tol


def rel_error(a, n, floor=REL_FLOOR):
    return abs(a - n) / max(abs(a), abs(n), floor)


def _kink_masks(graph, caches, start=0):
    return [c["mask"] for c, (_, layer) in zip(caches, graph.layers[start:]) if layer.kind == "LeakyReLU"]


def gradient_check(graph, x, target=None, h=1e-5, max_coords=12, seed=0, check_input=True):
    """Compare backprop against central differences of the MSE loss.

    Runs the graph in ``check`` mode (batch statistics, no running-stat
    update, dropout off).  Large arrays are sampled at ``max_coords``
    coordinates.  A coordinate whose +-h stencil flips any LeakyReLU
    branch straddles a kink where the difference quotient is not a
    derivative estimate; it is skipped, counted in ``n_kinked`` and another
    coordinate is drawn.
    """
    rng = np.random.default_rng(seed)
    x = np.array(x, dtype=np.float64)
    store = graph.store
    store.zero_grad()
    y, caches = graph.forward(x, "check")
    if target is None:
        target = rng.uniform(0.0, 1.0, size=y.shape)
    _, g = mse_loss(y, target)
    base_masks = _kink_masks(graph, caches)
    gx = graph.backward(caches, g, need_input_grad=True)

    def probe():
        out, cs = graph.forward(x, "check")
        same = all(np.array_equal(a, b) for a, b in zip(base_masks, _kink_masks(graph, cs)))
        return mse_loss(out, target)[0], same

    per_array = {}
    worst = 0.0
    count = kinked = 0
    arrays = [(n, store.params[n], store.grads[n]) for n in store.trainable()]
    if check_input:
        arrays.append(("input", x, gx))
    for name, arr, analytic in arrays:
        flat = arr.reshape(-1)
        analytic = analytic.reshape(-1)
        err, taken = 0.0, 0
        for c in rng.permutation(flat.size)[: 4 * max_coords]:
            if taken == max_coords:
                break
            orig = flat[c]
            flat[c] = orig + h
            lp, ok_p = probe()
            flat[c] = orig - h
            lm, ok_m = probe()
            flat[c] = orig
            if not (ok_p and ok_m):
                kinked += 1
                continue
            err = max(err, rel_error(analytic[c], (lp - lm) / (2 * h)))
            taken += 1
        per_array[name] = err
        worst = max(worst, err)
        count += taken
    store.zero_grad()
    return GradCheckReport(worst, per_array, count, kinked)


def layer_cases(rng):
    """One small graph per layer kind, as ``(name, graph, input)``."""
    from .graph import ModelGraph
    from .layers import LayerSpec

    specs = [
        ("Conv1D", (3, 11), [LayerSpec("Conv1D", "c", 3, 4, 3, 2)]),
        ("Conv2D", (2, 9, 8), [LayerSpec("Conv2D", "c", 2, 3, 3, 2)]),
        ("TransposedConv2D", (2, 4, 4), [LayerSpec("TransposedConv2D", "t", 2, 3, 4, 2, crop=(9, 9))]),
        ("TransposedConv1D", (3, 5), [LayerSpec("TransposedConv1D", "t", 3, 2, 4, 2, crop=(10,))]),
        ("Dense", (5,), [LayerSpec("Dense", "d", 5, 3)]),
        ("BatchNorm", (3, 4, 4), [LayerSpec("BatchNorm", "b", 3)]),
        ("LeakyReLU", (7,), [LayerSpec("Dense", "d", 7, 7), LayerSpec("LeakyReLU", "l")]),
        ("Sigmoid", (7,), [LayerSpec("Dense", "d", 7, 7), LayerSpec("Sigmoid", "s")]),
        ("Dropout", (7,), [LayerSpec("Dense", "d", 7, 7), LayerSpec("Dropout", "p")]),
        ("Reshape", (2, 6), [LayerSpec("Reshape", "r", shape=(3, 4)), LayerSpec("Conv1D", "c", 3, 2, 2)]),
        ("Flatten", (2, 3, 3), [LayerSpec("Flatten", "f"), LayerSpec("Dense", "d", 18, 2)]),
    ]
    out = []
    for name, shape, layers in specs:
        graph = ModelGraph(shape)
        for layer in layers:
            graph.add("main", layer, rng)
        out.append((name, graph, rng.normal(size=(4,) + shape)))
    return out
