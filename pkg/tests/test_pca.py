import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uwloc.errors import (
    DimensionMismatch,
    InvalidComponentCount,
    SingularNormalEquations,
    TooFewRows,
    ZeroVarianceComponent,
)
from uwloc.pca import (
    backproject,
    correlation_loadings,
    mean_center,
    mlr_fit,
    pca_fit,
    pcr_fit,
    svd_truncated,
)
from uwloc.synth import gram_eigen_oracle

# centering removes one rank, so full column rank needs K <= N - 1; keep a margin
shapes = st.integers(10, 40).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(2, min(12, n - 2)), st.integers(0, 2**31)))


@settings(max_examples=40, deadline=None)
@given(shapes)
def test_full_rank_pcr_equals_mlr(shape):
    n, k, seed = shape
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, k))
    y = rng.normal(size=n)
    pca = pca_fit(X, k)
    Xc, _ = mean_center(X)
    theta_bar = backproject(pca, pcr_fit(pca, y))
    theta_mlr = mlr_fit(Xc, y)
    assert np.linalg.norm(theta_bar - theta_mlr) <= 1e-8 * np.linalg.norm(theta_mlr)


@settings(max_examples=40, deadline=None)
@given(shapes)
def test_singular_values_match_oracle(shape):
    n, k, seed = shape
    X = np.random.default_rng(seed).normal(size=(n, k))
    Xc, _ = mean_center(X)
    a = min(n, k)
    _, s, V = svd_truncated(Xc, a)
    _, s_ref, _ = gram_eigen_oracle(Xc)
    np.testing.assert_allclose(s, s_ref[:a], rtol=1e-8, atol=1e-8 * s_ref[0])
    np.testing.assert_allclose(V.T @ V, np.eye(a), atol=1e-10)


def test_wide_matrix_uses_row_gram():
    X = np.random.default_rng(2).normal(size=(6, 20))
    Xc, _ = mean_center(X)
    U, s, V = svd_truncated(Xc, 3)
    np.testing.assert_allclose(Xc @ V, U * s, atol=1e-10)
    np.testing.assert_allclose(V.T @ V, np.eye(3), atol=1e-10)


def test_rank_deficient_columns_are_completed():
    base = np.random.default_rng(5).normal(size=(15, 2))
    X = np.column_stack([base, base.sum(axis=1), base[:, 0] - base[:, 1]])
    _, s, V = svd_truncated(mean_center(X)[0], 4)
    assert s[2] == 0.0 and s[3] == 0.0
    np.testing.assert_allclose(V.T @ V, np.eye(4), atol=1e-10)


def test_loadings_sign_convention():
    X = np.random.default_rng(9).normal(size=(30, 6))
    P = pca_fit(X, 3).loadings
    idx = np.argmax(np.abs(P), axis=0)
    assert np.all(P[idx, np.arange(3)] > 0)


def test_reconstruction_with_all_components():
    X = np.random.default_rng(4).normal(size=(12, 5))
    pca = pca_fit(X, 5)
    np.testing.assert_allclose(pca.reconstruct(), X, atol=1e-10)
    assert pca.explained_variance_ratio.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("a", [0, 7, 2.5])
def test_invalid_component_count(a):
    with pytest.raises(InvalidComponentCount):
        pca_fit(np.random.default_rng(0).normal(size=(10, 6)), a)


def test_too_few_rows():
    with pytest.raises(TooFewRows):
        mean_center(np.ones((1, 4)))


def test_mlr_singular():
    X = np.ones((5, 2))
    with pytest.raises(SingularNormalEquations):
        mlr_fit(X, np.arange(5.0))


def test_pcr_zero_variance_component():
    X = np.column_stack([np.arange(6.0), np.arange(6.0) * 2])
    pca = pca_fit(X, 2)
    with pytest.raises(ZeroVarianceComponent):
        pcr_fit(pca, np.arange(6.0))


def test_backproject_length_checked():
    pca = pca_fit(np.random.default_rng(1).normal(size=(10, 4)), 2)
    with pytest.raises(DimensionMismatch):
        backproject(pca, np.ones(3))


def test_correlation_loadings_against_corrcoef():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(25, 5))
    X[:, 4] = 1.0
    Xc, _ = mean_center(X)
    pca = pca_fit(X, 3)
    cl = correlation_loadings(Xc, pca.scores)
    for j in range(4):
        for a in range(3):
            assert cl.r[j, a] == pytest.approx(np.corrcoef(X[:, j], pca.scores[:, a])[0, 1], abs=1e-12)
    assert cl.zero_variance.tolist() == [False] * 4 + [True]
    assert np.all(cl.r[4] == 0.0)
    assert np.all(cl.cumulative_r2 <= 1 + 1e-12)
