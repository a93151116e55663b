"""Interpretable spectral feature selection and a semi-supervised CAE range localizer."""
from .dataset import build_step_one, build_step_two, split_indices
from .jacobi import BACKEND
from .models import build_cae, build_localizer, plan_encoder
from .selection import select_pipeline
from .spectral import TimeSeries, build_feature_matrix
from .synth import SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "SynthConfig", "TimeSeries", "build_cae", "build_feature_matrix",
    "build_localizer", "build_step_one", "build_step_two", "generate",
    "plan_encoder", "select_pipeline", "split_indices",
]
