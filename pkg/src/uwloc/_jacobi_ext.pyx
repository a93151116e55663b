# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled cyclic Jacobi sweeps for dense symmetric matrices.

Arithmetic mirrors ``uwloc._jacobi_py`` operation for operation, so both
backends agree to rounding level.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


cdef double _offdiag_sq(double[:, ::1] a, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            acc += a[i, j] * a[i, j]
    return 2.0 * acc


def jacobi_eigh(a_in, double tol=1e-14, int max_sweeps=60):
    """Eigen-decompose a symmetric matrix by cyclic-by-row Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors, sweeps)`` with eigenvectors in
    columns; the order is the diagonal order, unsorted.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a_arr = np.array(a_in, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = a_arr.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] vt_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] a = a_arr
    cdef double[:, ::1] vt = vt_arr
    cdef Py_ssize_t p, q, k
    cdef int sweep
    cdef double apq, app, aqq, g, h, t, theta, c, s, tau, akp, akq, vkp, vkq
    cdef double fro2 = 0.0
    cdef double limit

    with nogil:
        for p in range(n):
            for q in range(n):
                fro2 += a[p, q] * a[p, q]
    limit = tol * tol * fro2

    sweep = 0
    while sweep < max_sweeps:
        if _offdiag_sq(a, n) <= limit:
            break
        sweep += 1
        with nogil:
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    app = a[p, p]
                    aqq = a[q, q]
                    g = 100.0 * fabs(apq)
                    if sweep > 4 and fabs(app) + g == fabs(app) and fabs(aqq) + g == fabs(aqq):
                        a[p, q] = 0.0
                        continue
                    h = aqq - app
                    if fabs(h) + g == fabs(h):
                        t = apq / h
                    else:
                        theta = 0.5 * h / apq
                        t = 1.0 / (fabs(theta) + sqrt(1.0 + theta * theta))
                        if theta < 0.0:
                            t = -t
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    tau = s / (1.0 + c)
                    # only the upper triangle is maintained; the lower one goes stale
                    for k in range(p):
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = akp - s * (akq + tau * akp)
                        a[k, q] = akq + s * (akp - tau * akq)
                    for k in range(p + 1, q):
                        akp = a[p, k]
                        akq = a[k, q]
                        a[p, k] = akp - s * (akq + tau * akp)
                        a[k, q] = akq + s * (akp - tau * akq)
                    for k in range(q + 1, n):
                        akp = a[p, k]
                        akq = a[q, k]
                        a[p, k] = akp - s * (akq + tau * akp)
                        a[q, k] = akq + s * (akp - tau * akq)
                    a[p, p] = app - t * apq
                    a[q, q] = aqq + t * apq
                    a[p, q] = 0.0
                    for k in range(n):
                        vkp = vt[p, k]
                        vkq = vt[q, k]
                        vt[p, k] = vkp - s * (vkq + tau * vkp)
                        vt[q, k] = vkq + s * (vkp - tau * vkq)
    return np.diag(a_arr).copy(), vt_arr.T.copy(), sweep
