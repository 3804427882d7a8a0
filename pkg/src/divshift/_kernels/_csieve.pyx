# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: Dirichlet-convolution sieve passes and linear sieves.

Mirrors the interface of ``pysieve``; the dispatcher in ``__init__`` picks
whichever backend imports.
"""

import numpy as np


def dirichlet_pass_int64(long long[::1] vals, long long[::1] out):
    """out[m] += sum_{d | m} vals[d] for 1 <= m < len(vals); index 0 unused."""
    cdef Py_ssize_t n = vals.shape[0] - 1
    cdef Py_ssize_t d, m
    cdef long long v
    for d in range(1, n + 1):
        v = vals[d]
        if v == 0:
            continue
        for m in range(d, n + 1, d):
            out[m] += v


def dirichlet_pass_float64(double[::1] coef, double[::1] out):
    """out[m] += sum_{d | m} coef[d]; zero coefficients are skipped."""
    cdef Py_ssize_t n = coef.shape[0] - 1
    cdef Py_ssize_t d, m
    cdef double v
    for d in range(1, n + 1):
        v = coef[d]
        if v == 0.0:
            continue
        for m in range(d, n + 1, d):
            out[m] += v


def spf_sieve(Py_ssize_t n):
    """Smallest-prime-factor table; spf[0]=0, spf[1]=1, spf[p]=p for primes."""
    arr = np.arange(n + 1, dtype=np.int64)
    cdef long long[::1] spf = arr
    cdef Py_ssize_t p, m
    if n >= 1:
        spf[1] = 1
    p = 2
    while p * p <= n:
        if spf[p] == p:
            for m in range(p * p, n + 1, p):
                if spf[m] == m:
                    spf[m] = p
        p += 1
    return arr


def mobius_sieve(Py_ssize_t n):
    """mu(m) for 0 <= m <= n as int8 (mu(0) = 0 by convention)."""
    spf_arr = spf_sieve(n)
    cdef long long[::1] spf = spf_arr
    out = np.zeros(n + 1, dtype=np.int8)
    cdef signed char[::1] mu = out
    cdef Py_ssize_t m, r
    cdef long long p
    if n >= 1:
        mu[1] = 1
    for m in range(2, n + 1):
        p = spf[m]
        r = m // p
        if r % p == 0:
            mu[m] = 0
        else:
            mu[m] = -mu[r]
    return out


def phi_sieve(Py_ssize_t n):
    """Euler phi(m) for 0 <= m <= n as int64."""
    spf_arr = spf_sieve(n)
    cdef long long[::1] spf = spf_arr
    out = np.zeros(n + 1, dtype=np.int64)
    cdef long long[::1] phi = out
    cdef Py_ssize_t m, r
    cdef long long p
    if n >= 1:
        phi[1] = 1
    for m in range(2, n + 1):
        p = spf[m]
        r = m // p
        if r % p == 0:
            phi[m] = phi[r] * p
        else:
            phi[m] = phi[r] * (p - 1)
    return out
