# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled response kernels; same contract as ``mppc_nrf._fallback``."""
import numpy as np

from libc.math cimport exp, log, log1p, lgamma

NAME = "cython"


cdef inline double _binom(int x, int m, double p, double[::1] logfact,
                          double logp, double logq) noexcept nogil:
    if x < 0 or x > m:
        return 0.0
    if p == 0.0:
        return 1.0 if x == 0 else 0.0
    if p == 1.0:
        return 1.0 if x == m else 0.0
    return exp(logfact[m] - logfact[x] - logfact[m - x]
               + x * logp + (m - x) * logq)


def binom_pmf(x, m, p):
    """Binomial pmf; delegates array handling to numpy."""
    from mppc_nrf._fallback import binom_pmf as _pmf
    return _pmf(x, m, p)


def response_matrix(double eta, double p_ct, int n_max, int k_max):
    cdef bint saturate = n_max <= 2 * k_max
    cdef int n_rows = (n_max if saturate else 2 * k_max) + 1
    cdef int n_direct = n_rows - 1 if saturate else n_rows
    cdef int top = 2 * k_max + 1
    cdef double[::1] logfact = np.zeros(top + 1)
    cdef int i, k, n, x, N, n_hi
    for i in range(2, top + 1):
        logfact[i] = logfact[i - 1] + log(<double>i)

    cdef double le = log(eta) if eta > 0.0 else 0.0
    cdef double lqe = log1p(-eta) if eta < 1.0 else 0.0
    cdef double lp = log(p_ct) if p_ct > 0.0 else 0.0
    cdef double lqp = log1p(-p_ct) if p_ct < 1.0 else 0.0

    out_arr = np.zeros((n_rows, k_max + 1))
    cdef double[:, ::1] out = out_arr
    cdef double det, s
    with nogil:
        for k in range(k_max + 1):
            n_hi = k if k < n_direct - 1 else n_direct - 1
            for n in range(n_hi + 1):
                det = _binom(n, k, eta, logfact, le, lqe)
                if det == 0.0:
                    continue
                for x in range(n + 1):
                    N = n + x
                    if N >= n_direct:
                        break
                    out[N, k] += det * _binom(x, n, p_ct, logfact, lp, lqp)
            if saturate and 2 * k >= n_max:
                s = 0.0
                for N in range(n_rows - 1):
                    s += out[N, k]
                s = 1.0 - s
                out[n_rows - 1, k] = s if s > 0.0 else 0.0
    return out_arr
