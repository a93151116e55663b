"""Pure-Python (numpy row operations) cyclic Jacobi kernel.

Same rotation sequence and per-element arithmetic as the compiled kernel; used
when the extension is not built or ``UWLOC_FORCE_PURE=1`` is set.
"""
import math

import numpy as np


def jacobi_eigh(a_in, tol=1e-14, max_sweeps=60):
    a = np.array(a_in, dtype=np.float64, order="C", copy=True)
    n = a.shape[0]
    vt = np.eye(n)
    mask = ~np.eye(n, dtype=bool)
    limit = tol * tol * float(np.sum(a * a))

    sweep = 0
    while sweep < max_sweeps:
        if float(np.sum(a[mask] ** 2)) <= limit:
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                g = 100.0 * abs(apq)
                if sweep > 4 and abs(app) + g == abs(app) and abs(aqq) + g == abs(aqq):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                h = aqq - app
                if abs(h) + g == abs(h):
                    t = apq / h
                else:
                    theta = 0.5 * h / apq
                    t = 1.0 / (abs(theta) + math.sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)

                rp = a[p].copy()
                rq = a[q].copy()
                new_p = rp - s * (rq + tau * rp)
                new_q = rq + s * (rp - tau * rq)
                new_p[p] = app - t * apq
                new_q[q] = aqq + t * apq
                new_p[q] = 0.0
                new_q[p] = 0.0
                a[p] = new_p
                a[q] = new_q
                a[:, p] = new_p
                a[:, q] = new_q

                vp = vt[p].copy()
                vq = vt[q].copy()
                vt[p] = vp - s * (vq + tau * vp)
                vt[q] = vq + s * (vp - tau * vq)
    return np.diag(a).copy(), vt.T.copy(), sweep
