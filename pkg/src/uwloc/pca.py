"""PCA by truncated SVD, MLR/PCR regression and correlation loadings.

The SVD is obtained from the Jacobi eigendecomposition of the smaller Gram
matrix (``Xc^T Xc`` when K <= N, else ``Xc Xc^T``).  Loading columns are sign
fixed so that their largest-magnitude entry is positive.
"""
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidComponentCount,
    SingularNormalEquations,
    TooFewRows,
    ZeroVarianceComponent,
)
from .jacobi import eigh_descending

#: singular values below this fraction of the largest are treated as zero;
#: squaring in the Gram matrix limits resolution to about sqrt(eps)
RANK_RTOL = 1e-7


@dataclass(frozen=True)
class PcaModel:
    column_means: np.ndarray
    scores: np.ndarray
    loadings: np.ndarray
    singular_values: np.ndarray
    explained_variance_ratio: np.ndarray

    @property
    def n_components(self):
        return self.loadings.shape[1]

    def reconstruct(self):
        return self.scores @ self.loadings.T + self.column_means

    def residual(self, X):
        return np.asarray(X, dtype=np.float64) - self.reconstruct()


@dataclass(frozen=True)
class RegressionCoefficients:
    theta_pcr: np.ndarray
    theta_bar: np.ndarray
    theta_mlr: np.ndarray | None = None


def mean_center(X):
    """Subtract column means; returns ``(Xc, means)``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TooFewRows(f"need a matrix with at least 2 rows, got shape {X.shape}")
    means = X.mean(axis=0)
    return X - means, means


def _fix_signs(loadings):
    """Flip columns so the largest-|entry| of each is positive; returns the flips."""
    idx = np.argmax(np.abs(loadings), axis=0)
    signs = np.sign(loadings[idx, np.arange(loadings.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def _complete_orthonormal(basis, n_missing):
    """Extend orthonormal columns with ``n_missing`` more, deterministically."""
    dim = basis.shape[0]
    cols = [basis[:, i] for i in range(basis.shape[1])]
    e = 0
    while n_missing and e < dim:
        v = np.zeros(dim)
        v[e] = 1.0
        e += 1
        for _ in range(2):  # twice is enough for numerical orthogonality
            for c in cols:
                v -= (c @ v) * c
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            cols.append(v / norm)
            n_missing -= 1
    return np.column_stack(cols)


def svd_truncated(Xc, n_components, backend=None):
    """Leading ``n_components`` singular triplets of ``Xc``.

    Returns ``(U_hat, s_hat, V_hat)`` with ``s_hat`` a descending vector
    (the diagonal of S_hat).  Directions with a zero singular value are
    completed to an orthonormal set.
    """
    Xc = np.asarray(Xc, dtype=np.float64)
    n, k = Xc.shape
    a = int(n_components)
    if a != n_components or not 1 <= a <= min(n, k):
        raise InvalidComponentCount(f"need 1 <= A <= {min(n, k)}, got {n_components}")

    if k <= n:
        w, v = eigh_descending(Xc.T @ Xc, backend=backend)
        s = np.sqrt(np.clip(w[:a], 0.0, None))
        V = v[:, :a]
        V = V * _fix_signs(V)
        rank = int(np.sum(s > RANK_RTOL * max(s[0], np.finfo(float).tiny)))
        U = (Xc @ V[:, :rank]) / s[:rank]
        if rank < a:
            U = _complete_orthonormal(U, a - rank)
    else:
        w, u = eigh_descending(Xc @ Xc.T, backend=backend)
        s = np.sqrt(np.clip(w[:a], 0.0, None))
        U = u[:, :a]
        rank = int(np.sum(s > RANK_RTOL * max(s[0], np.finfo(float).tiny)))
        V = (Xc.T @ U[:, :rank]) / s[:rank]
        if rank < a:
            V = _complete_orthonormal(V, a - rank)
        signs = _fix_signs(V)
        V = V * signs
        U = U * signs
    s[rank:] = 0.0
    return U, s, V


def pca_fit(X, n_components=3, backend=None):
    """Mean-center ``X`` and keep the first ``n_components`` principal components.

    Scores are ``T = U_hat S_hat`` and loadings ``P = V_hat``; the explained
    variance ratio divides by the total sum of squares of the centered data.
    """
    Xc, means = mean_center(X)
    U, s, V = svd_truncated(Xc, n_components, backend=backend)
    total = float(np.sum(Xc * Xc))
    ratio = s**2 / total if total > 0 else np.zeros_like(s)
    return PcaModel(means, U * s, V, s, ratio)


def mlr_fit(X, y, max_condition=1e12):
    """Ordinary least squares via the normal equations, ``(X^T X)^-1 X^T y``."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.size:
        raise DimensionMismatch(f"X has {X.shape[0]} rows, y has {y.size}")
    gram = X.T @ X
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > max_condition:
        raise SingularNormalEquations(f"X^T X condition number {cond:.3g} exceeds {max_condition:g}")
    return np.linalg.solve(gram, X.T @ y)


def pcr_fit(pca, y):
    """Regress ``y`` on the score matrix: ``(T^T T)^-1 T^T y``."""
    y = np.asarray(y, dtype=np.float64).ravel()
    T = pca.scores
    if T.shape[0] != y.size:
        raise DimensionMismatch(f"scores have {T.shape[0]} rows, y has {y.size}")
    gram = T.T @ T
    diag = np.diag(gram)
    bad = np.flatnonzero(diag <= RANK_RTOL**2 * diag.max()) if diag.max() > 0 else np.arange(diag.size)
    if bad.size:
        raise ZeroVarianceComponent(f"score columns {bad.tolist()} have zero variance")
    return np.linalg.solve(gram, T.T @ y)


def backproject(pca, theta_pcr):
    """Coefficients per original variable, ``P @ theta_pcr``."""
    theta_pcr = np.asarray(theta_pcr, dtype=np.float64).ravel()
    if theta_pcr.size != pca.n_components:
        raise DimensionMismatch(f"{theta_pcr.size} coefficients for {pca.n_components} components")
    return pca.loadings @ theta_pcr


@dataclass(frozen=True)
class CorrelationLoadings:
    r: np.ndarray  # K x A
    cumulative_r2: np.ndarray
    zero_variance: np.ndarray  # bool mask of constant columns (r forced to 0)

    def radius_sq(self, pc_a, pc_b):
        """Squared distance from the origin for a 1-based PC pair."""
        return self.r[:, pc_a - 1] ** 2 + self.r[:, pc_b - 1] ** 2

    def between_circles(self, pc_a, pc_b, inner=0.5):
        """Variables at or beyond the inner (50 % explained variance) circle."""
        return self.radius_sq(pc_a, pc_b) >= inner


def correlation_loadings(Xc, T):
    """Pearson correlation between every data column and every score column."""
    Xc = np.asarray(Xc, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if Xc.shape[0] != T.shape[0]:
        raise DimensionMismatch(f"Xc has {Xc.shape[0]} rows, T has {T.shape[0]}")
    xd = Xc - Xc.mean(axis=0)
    td = T - T.mean(axis=0)
    xn = np.sqrt(np.sum(xd * xd, axis=0))
    tn = np.sqrt(np.sum(td * td, axis=0))
    if np.any(tn == 0):
        raise ZeroVarianceComponent(f"score columns {np.flatnonzero(tn == 0).tolist()} are constant")
    zero = xn <= 1e-14 * max(xn.max(), 1.0)
    r = (xd.T @ td) / (np.where(zero, 1.0, xn)[:, None] * tn[None, :])
    r[zero] = 0.0
    r = np.clip(r, -1.0, 1.0)
    return CorrelationLoadings(r, np.sum(r * r, axis=1), zero)
