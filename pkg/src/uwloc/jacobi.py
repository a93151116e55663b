"""Symmetric eigensolver backend selection.

The compiled kernel is used when importable; otherwise the numpy fallback.
Set ``UWLOC_FORCE_PURE=1`` before import to force the fallback.
"""
import os

import numpy as np

from . import _jacobi_py

if os.environ.get("UWLOC_FORCE_PURE"):
    _ext = None
else:
    try:
        from . import _jacobi_ext as _ext
    except ImportError:  # extension not built
        _ext = None

BACKEND = "compiled" if _ext is not None else "python"
_KERNELS = {"python": _jacobi_py.jacobi_eigh}
if _ext is not None:
    _KERNELS["compiled"] = _ext.jacobi_eigh


def available_backends():
    return sorted(_KERNELS)


def jacobi_eigh(a, tol=1e-14, max_sweeps=60, backend=None):
    """Raw kernel call: ``(eigenvalues, eigenvectors, sweeps)`` in diagonal order."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    kernel = _KERNELS[backend or BACKEND]
    return kernel(a, tol, max_sweeps)


def eigh_descending(a, tol=1e-14, max_sweeps=60, backend=None):
    """Eigenpairs of a symmetric matrix sorted by decreasing eigenvalue.

    Ties keep their diagonal order (stable sort) so results are deterministic.
    """
    w, v, _ = jacobi_eigh(a, tol=tol, max_sweeps=max_sweeps, backend=backend)
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]
