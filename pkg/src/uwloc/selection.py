"""Interpretable feature selection from back-projected PCR coefficients.

Pipeline: mean-center, fit the first A principal components, regress the
target on the scores, map the coefficients back onto the original columns,
keep every column whose coefficient magnitude exceeds ``epsilon``.
"""
import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EmptySelection, FormatError, IndexOutOfRange
from .pca import PcaModel, backproject, correlation_loadings, mean_center, pca_fit, pcr_fit

DEFAULT_COMPONENTS = 3  # number of PCs kept for the regression
DEFAULT_EPSILON = 0.02  # coefficient magnitude threshold

INDEX_MAGIC = b"UWSI"
INDEX_VERSION = 1


@dataclass(frozen=True)
class SelectionResult:
    ranked_indices: np.ndarray
    selected_indices: np.ndarray
    threshold: float
    pca: PcaModel | None = None
    theta_pcr: np.ndarray | None = None
    theta_bar: np.ndarray | None = None

    @property
    def selected_count(self):
        return int(self.selected_indices.size)

    def top(self, m):
        return self.ranked_indices[:m]


def rank_coefficients(theta_bar):
    """Column indices by decreasing |theta_bar|, ties by ascending index."""
    theta_bar = np.asarray(theta_bar, dtype=np.float64)
    return np.lexsort((np.arange(theta_bar.size), -np.abs(theta_bar)))


def select_features(theta_bar, epsilon=DEFAULT_EPSILON):
    """Rank coefficients and keep those with ``|theta_bar| > epsilon``.

    Raises EmptySelection when nothing passes; the caller decides what to do.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    theta_bar = np.asarray(theta_bar, dtype=np.float64)
    selected = np.flatnonzero(np.abs(theta_bar) > epsilon)
    if selected.size == 0:
        raise EmptySelection(
            f"no coefficient exceeds epsilon={epsilon:g} "
            f"(max |theta_bar| = {np.max(np.abs(theta_bar), initial=0.0):.4g})"
        )
    return SelectionResult(rank_coefficients(theta_bar), selected, float(epsilon), theta_bar=theta_bar)


def build_selected_matrix(X, selection):
    X = np.asarray(X)
    idx = np.asarray(getattr(selection, "selected_indices", selection))
    if idx.size and (idx.min() < 0 or idx.max() >= X.shape[1]):
        raise IndexOutOfRange(f"selected indices outside 0..{X.shape[1] - 1}")
    return X[:, idx]


def select_pipeline(X, y, n_components=DEFAULT_COMPONENTS, epsilon=DEFAULT_EPSILON, backend=None):
    """Run the full selection on scaled features ``X`` (N x K) and labels ``y``."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.size:
        raise DimensionMismatch(f"X has {X.shape[0]} rows, y has {y.size}")
    if X.shape[0] <= n_components:
        raise DimensionMismatch(f"need more than {n_components} rows, got {X.shape[0]}")
    pca = pca_fit(X, n_components, backend=backend)
    theta_pcr = pcr_fit(pca, y)
    theta_bar = backproject(pca, theta_pcr)
    try:
        frag = select_features(theta_bar, epsilon)
    except EmptySelection as exc:
        raise EmptySelection(
            f"{exc}; lower selection.epsilon or check that the labels vary "
            "(all features are never kept silently)"
        ) from None
    return SelectionResult(frag.ranked_indices, frag.selected_indices, frag.threshold, pca, theta_pcr, theta_bar)


def interpretation_loadings(X_selected, n_components=3, backend=None):
    """Second PCA on the selected matrix, returned with its correlation loadings."""
    Xc, _ = mean_center(X_selected)
    pca = pca_fit(X_selected, n_components, backend=backend)
    return pca, correlation_loadings(Xc, pca.scores)


# ---------------------------------------------------------------- export


def write_selection_csv(path, result, frame_seconds=1.0):
    """``rank,column_index,frequency_hz,theta_bar,selected`` for every column."""
    chosen = set(result.selected_indices.tolist())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "column_index", "frequency_hz", "theta_bar", "selected"])
        for rank, col in enumerate(result.ranked_indices.tolist(), start=1):
            w.writerow([rank, col, repr((col + 1) / frame_seconds),
                        repr(float(result.theta_bar[col])), int(col in chosen)])


def write_index_list(path, indices, n_columns):
    """Compact binary list: magic, u16 version, u64 K, u64 M, M x u32 indices."""
    indices = np.asarray(indices, dtype="<u4")
    with open(path, "wb") as fh:
        fh.write(INDEX_MAGIC)
        fh.write(struct.pack("<HQQ", INDEX_VERSION, int(n_columns), indices.size))
        fh.write(indices.tobytes())


def read_index_list(path):
    """Returns ``(indices, n_columns)``."""
    data = Path(path).read_bytes()
    if data[:4] != INDEX_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    version, k, m = struct.unpack_from("<HQQ", data, 4)
    if version != INDEX_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    off = 4 + struct.calcsize("<HQQ")
    if len(data) != off + 4 * m:
        raise FormatError(f"{path}: truncated index list")
    return np.frombuffer(data, "<u4", m, off).astype(np.int64), int(k)


def write_loadings_csv(path, loadings, columns, frame_seconds=1.0, pc_pair=(1, 3)):
    a, b = pc_pair
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["column_index", "frequency_hz", f"r_pc{a}", f"r_pc{b}", "cum_r2"])
        for row, col in enumerate(np.asarray(columns).tolist()):
            w.writerow([col, repr((col + 1) / frame_seconds),
                        repr(float(loadings.r[row, a - 1])), repr(float(loadings.r[row, b - 1])),
                        repr(float(loadings.cumulative_r2[row]))])


def loadings_svg(loadings, columns, frame_seconds=1.0, pc_pair=(1, 3), size=480):
    """Correlation-loading scatter with the r^2 = 0.5 and r^2 = 1 circles."""
    a, b = pc_pair
    half = size / 2
    scale = half * 0.9

    def xy(rx, ry):
        return half + rx * scale, half - ry * scale

    inside = loadings.between_circles(a, b)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<line x1="0" y1="{half:.2f}" x2="{size}" y2="{half:.2f}" stroke="#999"/>',
        f'<line x1="{half:.2f}" y1="0" x2="{half:.2f}" y2="{size}" stroke="#999"/>',
        f'<circle cx="{half:.2f}" cy="{half:.2f}" r="{scale:.2f}" fill="none" stroke="black"/>',
        f'<circle cx="{half:.2f}" cy="{half:.2f}" r="{scale * np.sqrt(0.5):.2f}" '
        'fill="none" stroke="black" stroke-dasharray="4 3"/>',
        f'<text x="{size - 40}" y="{half - 6:.2f}" font-size="12">PC{a}</text>',
        f'<text x="{half + 6:.2f}" y="14" font-size="12">PC{b}</text>',
    ]
    for row, col in enumerate(np.asarray(columns).tolist()):
        x, y = xy(loadings.r[row, a - 1], loadings.r[row, b - 1])
        colour = "#c0392b" if inside[row] else "#2c3e50"
        hz = (col + 1) / frame_seconds
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="{colour}"><title>{hz:g} Hz</title></circle>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
