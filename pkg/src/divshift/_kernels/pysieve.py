"""Pure numpy fallback for the compiled sieve kernels.

Same contracts as ``_csieve``; slower (one python-level slice update per
divisor in the Dirichlet passes, one per prime in the linear sieves).
"""

import numpy as np


def dirichlet_pass_int64(vals, out):
    n = len(vals) - 1
    for d in range(1, n + 1):
        v = vals[d]
        if v:
            out[d::d] += v


def dirichlet_pass_float64(coef, out):
    n = len(coef) - 1
    for d in range(1, n + 1):
        v = coef[d]
        if v != 0.0:
            out[d::d] += v


def spf_sieve(n):
    spf = np.arange(n + 1, dtype=np.int64)
    if n >= 1:
        spf[1] = 1
    p = 2
    while p * p <= n:
        if spf[p] == p:
            sl = spf[p * p::p]
            unmarked = sl == np.arange(p * p, n + 1, p, dtype=np.int64)
            sl[unmarked] = p
        p += 1
    return spf


def mobius_sieve(n):
    mu = np.ones(n + 1, dtype=np.int8)
    mu[0] = 0
    composite = np.zeros(n + 1, dtype=bool)
    for p in range(2, n + 1):
        if not composite[p]:
            mu[p::p] = -mu[p::p]
            pp = p * p
            if pp <= n:
                mu[pp::pp] = 0
                composite[pp::p] = True
    return mu


def phi_sieve(n):
    phi = np.arange(n + 1, dtype=np.int64)
    if n >= 1:
        phi[1] = 1
    for p in range(2, n + 1):
        if phi[p] == p:  # untouched so far, hence prime
            phi[p::p] -= phi[p::p] // p
    return phi
