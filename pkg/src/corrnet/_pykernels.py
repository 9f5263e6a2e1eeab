"""Pure-numpy kernels with the same contract as the compiled ``_kernels``."""
import numpy as np


def pairwise_pearson(x):
    x = np.ascontiguousarray(x, dtype=float)
    T, N = x.shape
    present = ~np.isnan(x)
    filled = np.where(present, x, 0.0)
    rho = np.full((N, N), np.nan)
    nobs = np.zeros((N, N), dtype=np.int64)
    for i in range(N):
        both = present[:, i : i + 1] & present[:, i:]
        n = both.sum(axis=0)
        nobs[i, i:] = n
        nobs[i:, i] = n
        a = np.where(both, filled[:, i : i + 1], 0.0)
        b = np.where(both, filled[:, i:], 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            ma = a.sum(axis=0) / n
            mb = b.sum(axis=0) / n
            da = np.where(both, a - ma, 0.0)
            db = np.where(both, b - mb, 0.0)
            saa = (da * da).sum(axis=0)
            sbb = (db * db).sum(axis=0)
            sab = (da * db).sum(axis=0)
            r = np.clip(sab / np.sqrt(saa * sbb), -1.0, 1.0)
        r[(n < 2) | (saa == 0.0) | (sbb == 0.0)] = np.nan
        if not np.isnan(r[0]):
            r[0] = 1.0
        rho[i, i:] = r
        rho[i:, i] = r
    return rho, nobs
