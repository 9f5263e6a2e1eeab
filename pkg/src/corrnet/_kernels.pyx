# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise-complete Pearson kernel; see ``_pykernels`` for the reference."""
import numpy as np
cimport numpy as cnp
from libc.math cimport isnan, sqrt

cnp.import_array()


def pairwise_pearson(const double[:, ::1] x):
    """Return ``(rho, n_obs)`` over dates where both columns are present.

    ``x`` is dates x assets with NaN for missing. Each unordered pair is
    computed once with a two-pass (mean, then centred sums) scheme. Pairs
    with fewer than 2 joint observations or zero variance get NaN.
    """
    cdef Py_ssize_t T = x.shape[0], N = x.shape[1]
    rho_arr = np.full((N, N), np.nan)
    nobs_arr = np.zeros((N, N), dtype=np.int64)
    cdef double[:, ::1] rho = rho_arr
    cdef cnp.int64_t[:, ::1] nobs = nobs_arr
    cdef Py_ssize_t i, j, t
    cdef cnp.int64_t n
    cdef double a, b, sa, sb, ma, mb, da, db, saa, sbb, sab, r
    with nogil:
        for i in range(N):
            for j in range(i, N):
                n = 0
                sa = 0.0
                sb = 0.0
                for t in range(T):
                    a = x[t, i]
                    b = x[t, j]
                    if isnan(a) or isnan(b):
                        continue
                    n += 1
                    sa += a
                    sb += b
                nobs[i, j] = n
                nobs[j, i] = n
                if n < 2:
                    continue
                ma = sa / n
                mb = sb / n
                saa = 0.0
                sbb = 0.0
                sab = 0.0
                for t in range(T):
                    a = x[t, i]
                    b = x[t, j]
                    if isnan(a) or isnan(b):
                        continue
                    da = a - ma
                    db = b - mb
                    saa += da * da
                    sbb += db * db
                    sab += da * db
                if saa == 0.0 or sbb == 0.0:
                    continue
                if i == j:
                    r = 1.0
                else:
                    r = sab / sqrt(saa * sbb)
                    if r > 1.0:
                        r = 1.0
                    elif r < -1.0:
                        r = -1.0
                rho[i, j] = r
                rho[j, i] = r
    return rho_arr, nobs_arr
