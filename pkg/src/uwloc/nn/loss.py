import numpy as np

from ..errors import ShapeMismatch


def mse_loss(pred, target):
    """Mean squared error and its gradient ``2 (pred - target) / count``."""
    pred = np.asarray(pred)
    target = np.asarray(target, dtype=pred.dtype)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"prediction {pred.shape} vs target {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff)), (2.0 / diff.size) * diff
