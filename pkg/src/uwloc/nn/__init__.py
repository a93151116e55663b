"""Small numpy neural-network engine: layers, graph, Adam, checkpoints."""
from .checkpoint import load_into, read_checkpoint, save_checkpoint
from .gradcheck import GradCheckReport, gradient_check
from .graph import ModelGraph
from .layers import KINDS, LayerSpec, backward, forward, init_params
from .loss import mse_loss
from .store import ParameterStore

__all__ = [
    "GradCheckReport", "KINDS", "LayerSpec", "ModelGraph", "ParameterStore",
    "backward", "forward", "gradient_check", "init_params", "load_into",
    "mse_loss", "read_checkpoint", "save_checkpoint",
]
