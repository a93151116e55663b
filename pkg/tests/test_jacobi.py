import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uwloc import jacobi

BACKENDS = jacobi.available_backends()


def _sym(n, seed):
    a = np.random.default_rng(seed).normal(size=(n, n))
    return a + a.T


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("n", [1, 2, 5, 17])
def test_reconstructs_matrix(backend, n):
    a = _sym(n, n)
    w, v = jacobi.eigh_descending(a, backend=backend)
    np.testing.assert_allclose(v @ np.diag(w) @ v.T, a, atol=1e-11 * max(1, np.abs(a).max()))
    np.testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-12)
    assert np.all(np.diff(w) <= 0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_matches_numpy_eigenvalues(backend):
    a = _sym(12, 3)
    w, _ = jacobi.eigh_descending(a, backend=backend)
    np.testing.assert_allclose(w, np.sort(np.linalg.eigvalsh(a))[::-1], atol=1e-11)


@pytest.mark.skipif("compiled" not in BACKENDS, reason="extension not built")
@settings(max_examples=30, deadline=None)
@given(st.integers(1, 24), st.integers(0, 10_000))
def test_backends_bitwise_identical(n, seed):
    a = _sym(n, seed)
    wc, vc, sc = jacobi.jacobi_eigh(a, backend="compiled")
    wp, vp, sp = jacobi.jacobi_eigh(a, backend="python")
    assert sc == sp
    assert np.array_equal(wc, wp) and np.array_equal(vc, vp)


def test_diagonal_input_needs_no_sweep():
    w, v, sweeps = jacobi.jacobi_eigh(np.diag([3.0, 1.0, 2.0]))
    assert sweeps == 0
    np.testing.assert_array_equal(v, np.eye(3))


def test_rejects_non_square():
    with pytest.raises(ValueError):
        jacobi.jacobi_eigh(np.ones((2, 3)))
