"""Main-term ingredients: the Ramanujan-sum densities lambda_{h,d}, the
singular series g, g', g_beta, the Dirichlet series D_h(s) with its Euler
product, and numerical evaluation of smoothed main terms.

The smoothed main term is computed from the convergent expansion

    M(x) = sum_{m <= 2x} d_{k-1}(m) * integral over u >= 1/2 of
           w(u m / x) * [ g(m,h) (log(u m + h) + 2*gamma) - 2 g'(m,h) ] du,

never by residue extraction.  The integral starts at u = 1/2 because u
stands in for a positive integer cofactor and the integer u covers
[u - 1/2, u + 1/2) of the line (midpoint convention; starting at 0 inflates
every m-term near m ~ x by mass the sum does not have, while starting at 1
drops half of the u = 1 terms -- both make the remainder grow like a power
of x).  The m <= 2x cap is then exact, not a truncation: u >= 1/2 forces
m <= 2t <= 2x on the weight support.  Substituting t = u*m and swapping
sum and integral gives the exact staircase form

    M(x) = int_{x/2}^{x} w(t/x) (log(t+h) + 2*gamma) C(2t) dt
         - 2 int_{x/2}^{x} w(t/x) C'(2t) dt,

where C(T) = sum_{m <= T} d_{k-1}(m) g(m,h)/m and C' likewise with g'.
C is piecewise constant, so both integrals are evaluated exactly (to
quadrature precision) one half-integer piece at a time with fixed Gauss
nodes.  For k = 1 the staircase is the constant 1 and M collapses to the
single integral int w(t/x)(log(t+h) + 2*gamma) dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels, arith
from .weights import SmoothWeight, integrate

EULER_GAMMA = 0.5772156649015329


# ---------------------------------------------------------------------------
# lambda_{h,d} and the singular series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LambdaSpec:
    """Density lambda_{h,d}(xi) = c_d(h)/d * (log xi + 2*gamma - 2*log d)."""

    h: int
    d: int

    @property
    def c(self) -> int:
        return arith.ramanujan_sum(self.d, self.h)

    def __call__(self, xi: float) -> float:
        if xi <= 0:
            raise ValueError("lambda density needs xi > 0")
        return (self.c / self.d) * (math.log(xi) + 2 * EULER_GAMMA
                                    - 2 * math.log(self.d))


def lambda_eval(h: int, d: int, xi: float) -> float:
    return LambdaSpec(h, d)(xi)


def _local_csums(p: int, alpha: int, h: int) -> tuple[Fraction, Fraction]:
    """(sum_j c_{p^j}(h)/p^j, sum_j j * c_{p^j}(h)/p^j) for j = 0..alpha."""
    s0 = Fraction(0)
    s1 = Fraction(0)
    for j in range(alpha + 1):
        c = arith.ramanujan_sum(p**j, h)
        s0 += Fraction(c, p**j)
        s1 += Fraction(j * c, p**j)
    return s0, s1


def g_eval(m: int, h: int) -> Fraction:
    """g(m, h) = sum_{d | m} c_d(h)/d, exact; multiplicative in m."""
    out = Fraction(1)
    for p, e in arith.factorize(m).factors:
        out *= _local_csums(p, e, h)[0]
    return out


def g_beta_eval(m: int, h: int, beta: float) -> float:
    """g_beta(m, h) = sum_{d | m} c_d(h) / d^beta."""
    out = 1.0
    for p, e in arith.factorize(m).factors:
        out *= sum(arith.ramanujan_sum(p**j, h) / p ** (j * beta)
                   for j in range(e + 1))
    return out


def gprime_eval(m: int, h: int) -> float:
    """g'(m, h) = sum_{d | m} c_d(h) log(d) / d  (minus d/dbeta of g_beta
    at beta = 1; not multiplicative).

    Expanding log d over the prime powers of d factors the sum as
    sum_p log p * S1_p * prod_{q != p} S0_q with the local sums above."""
    facs = arith.factorize(m).factors
    locals_ = [(_p, _local_csums(_p, _e, h)) for _p, _e in facs]
    total = 0.0
    for i, (p, (_, s1)) in enumerate(locals_):
        prod = float(s1)
        for j, (_, (s0, _)) in enumerate(locals_):
            if j != i:
                prod *= float(s0)
        total += math.log(p) * prod
    return total


def lambda_expansion(m: int, h: int, xi: float) -> float:
    """sum_{d | m} lambda_{h,d}(xi), evaluated through g and g'."""
    return float(g_eval(m, h)) * (math.log(xi) + 2 * EULER_GAMMA) \
        - 2.0 * gprime_eval(m, h)


# ---------------------------------------------------------------------------
# Sieved rows of g and g' (for series and main-term partial sums)
# ---------------------------------------------------------------------------

def g_rows(limit: int, h: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays g(m, h) and g'(m, h) for m <= limit, by a weighted
    divisor-sieve pass over d with coefficients c_d(h)/d and
    c_d(h) log(d)/d."""
    c_row = arith.ramanujan_row(limit, h).astype(np.float64)
    d = np.arange(limit + 1, dtype=np.float64)
    d[0] = 1.0
    coef = c_row / d
    with np.errstate(divide="ignore"):
        logs = np.log(d)
    logs[0] = 0.0
    g = np.zeros(limit + 1)
    gp = np.zeros(limit + 1)
    _kernels.dirichlet_pass_float64(coef, g)
    _kernels.dirichlet_pass_float64(coef * logs, gp)
    g[0] = gp[0] = 0.0
    return g, gp


# ---------------------------------------------------------------------------
# D_h(s): truncated direct sum and truncated Euler product
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeriesValue:
    value: float
    tail_bound: float


def _divisor_tail_bound(k: int, s: float, n: int) -> float:
    """Upper estimate of sum_{m > N} d_{k-1}(m)/m^s by partial summation
    against sum_{m <= T} d_{k-1}(m) <= T (log T + 1)^{k-2}:

        tail <= s * int_N^inf (log t + 1)^{k-2} t^{-s} dt,

    expanded in closed form via the substitution t = N e^v."""
    j = k - 2  # exponent of the log factor
    if j < 0:
        return 0.0
    base = math.log(n) + 1.0
    total = 0.0
    for i in range(j + 1):
        total += (math.comb(j, i) * base ** (j - i) * math.factorial(i)
                  / (s - 1.0) ** (i + 1))
    return s * n ** (1.0 - s) * total


def dirichlet_direct(k: int, h: int, s: float, n: int) -> SeriesValue:
    """Truncated D_h(s) = sum_{m <= N} d_{k-1}(m) g(m, h) m^{-s}."""
    if s < 1.5:
        raise ValueError("direct summation wants s >= 1.5")
    if n > 10**7:
        raise ValueError("direct summation capped at N = 10^7")
    dk1 = arith.sieve_dk(k - 1, n).values if k >= 2 else None
    g, _ = g_rows(n, h)
    m = np.arange(n + 1, dtype=np.float64)
    m[0] = 1.0
    terms = g * m**(-s)
    if dk1 is not None:
        terms = terms * dk1
    else:  # k = 1: d_0(m) = 1 only at m = 1
        terms = np.zeros_like(terms)
        terms[1] = g[1]
    terms[0] = 0.0
    return SeriesValue(float(np.sum(terms)), _divisor_tail_bound(k, s, n))


def _primes_upto(n: int) -> np.ndarray:
    spf = arith.spf_sieve(n)
    idx = np.arange(n + 1)
    return idx[(idx >= 2) & (spf == idx)]


def local_factor(p: int, k: int, s: float) -> float:
    """Euler factor at p not dividing h: 1/p + (1 - p^-s)^-(k-1) (1 - 1/p)."""
    return 1.0 / p + (1.0 - p ** (-s)) ** (-(k - 1)) * (1.0 - 1.0 / p)


def e_h_factor(k: int, h: int, s: float, max_alpha: int = 60,
               tol: float = 1e-12) -> float:
    """E_h(s): exact finite product over p | h of the local series
    sum_alpha d_{k-1}(p^alpha) g(p^alpha, h) p^{-alpha s}."""
    out = 1.0
    for p, _ in arith.factorize(abs(h)).factors:
        acc = 0.0
        glocal = 0.0
        for alpha in range(max_alpha + 1):
            glocal += arith.ramanujan_sum(p**alpha, h) / p**alpha
            term = math.comb(alpha + k - 2, k - 2) * glocal \
                * p ** (-alpha * s) if k >= 2 else (glocal if alpha == 0
                                                    else 0.0)
            acc += term
            if alpha > 2 and abs(term) < tol * max(abs(acc), 1e-30):
                break
        out *= acc
    return out


def euler_product(k: int, h: int, s: float, p_cut: int) -> float:
    """Truncated Euler product: local factors over p <= p_cut, p not
    dividing h, times the exact E_h(s) factors at p | h."""
    if s < 1.5:
        raise ValueError("euler product wants s >= 1.5")
    if p_cut > 10**5:
        raise ValueError("euler product capped at P = 10^5")
    out = e_h_factor(k, h, s)
    for p in _primes_upto(p_cut):
        p = int(p)
        if h % p == 0:
            continue
        out *= local_factor(p, k, s)
    return out


def zeta_truncated(s: float, p_cut: int) -> float:
    """zeta(s) via its Euler product over p <= p_cut (same-cutoff
    regularization partner for the P_h-style ratio checks)."""
    out = 1.0
    for p in _primes_upto(p_cut):
        out /= 1.0 - float(p) ** (-s)
    return out


# ---------------------------------------------------------------------------
# The smoothed main term
# ---------------------------------------------------------------------------

@dataclass
class MainTermTables:
    """Cumulative sums needed to evaluate M(x) for every x <= limit:
    G[t] = sum_{m <= t} d_{k-1}(m) g(m,h)/m and likewise G' with g'."""

    k: int
    h: int
    limit: int
    g_cum: np.ndarray
    gp_cum: np.ndarray

    @classmethod
    def build(cls, k: int, h: int, limit: int) -> "MainTermTables":
        if not 1 <= k <= 4:
            raise ValueError("main-term tables support 1 <= k <= 4")
        g, gp = g_rows(limit, h)
        m = np.arange(limit + 1, dtype=np.float64)
        m[0] = 1.0
        if k >= 2:
            dk1 = arith.sieve_dk(k - 1, limit).values.astype(np.float64)
        else:
            dk1 = np.zeros(limit + 1)
            dk1[1] = 1.0
        g_cum = np.cumsum(dk1 * g / m)
        gp_cum = np.cumsum(dk1 * gp / m)
        return cls(k, h, limit, g_cum, gp_cum)

    def partial_sums(self, t: float) -> tuple[float, float]:
        idx = min(int(math.floor(t)), self.limit)
        return float(self.g_cum[idx]), float(self.gp_cum[idx])


def weight_integrals(h: int, x: float, w: SmoothWeight) -> tuple[float, float]:
    """I0 = int w(t/x) dt and I1 = int w(t/x)(log(t+h) + 2 gamma) dt."""
    if w.lo * x + h <= 0:
        raise ValueError("support window makes log(t + h) undefined")
    i0 = integrate(w, x)
    i1 = integrate(w, x, f=lambda t: np.log(t + h) + 2 * EULER_GAMMA)
    return i0, i1


# Gauss-Legendre nodes/weights on [0, 1], order 5: exact through degree 9,
# far beyond what the unit-interval restriction of w(t/x) log(t+h) needs.
_GL5_NODES = np.array([
    0.046910077030668, 0.230765344947158, 0.5,
    0.769234655052841, 0.953089922969332,
])
_GL5_WEIGHTS = np.array([
    0.118463442528095, 0.239314335249683, 0.284444444444444,
    0.239314335249683, 0.118463442528095,
])


def _staircase_integrals(x: float, h: int, w: SmoothWeight,
                         tables: MainTermTables) -> tuple[float, float]:
    """(int w(t/x) L(t) C(2t) dt, int w(t/x) C'(2t) dt) over the support
    window, with L(t) = log(t+h) + 2*gamma and C, C' the cumulative tables.
    C(2t) is constant on each half-integer piece [j/2, (j+1)/2)."""
    lo, hi = w.lo * x, w.hi * x
    j = np.arange(int(math.floor(2 * lo)), int(math.ceil(2 * hi)) + 1,
                  dtype=np.int64)
    a = np.maximum(0.5 * j.astype(np.float64), lo)
    b = np.minimum(0.5 * (j.astype(np.float64) + 1.0), hi)
    keep = b > a
    j, a, b = j[keep], a[keep], b[keep]
    t = a[:, None] + (b - a)[:, None] * _GL5_NODES[None, :]
    wv = w(t / x)
    l1 = np.log(t + h) + 2.0 * EULER_GAMMA
    span = (b - a)[:, None] * _GL5_WEIGHTS[None, :]
    piece1 = np.sum(wv * l1 * span, axis=1)
    piece0 = np.sum(wv * span, axis=1)
    c1 = tables.g_cum[np.minimum(j, tables.limit)]
    c2 = tables.gp_cum[np.minimum(j, tables.limit)]
    return float(np.sum(piece1 * c1)), float(np.sum(piece0 * c2))


def main_term(k: int, h: int, x: float, w: SmoothWeight,
              tables: MainTermTables | None = None) -> float:
    """M(x) for the weighted convolution sum_n w(n/x) d_k(n) d(n + h).

    For k = 1 this collapses to I1 = int w(t/x)(log(t+h) + 2 gamma) dt;
    the generic path integrates the smooth factors against the cumulative
    staircase tables (u >= 1 convention, see the module docstring)."""
    if h == 0:
        raise ValueError("shift h must be nonzero")
    if w.lo * x + h <= 0:
        raise ValueError("support window makes log(t + h) undefined")
    if k == 1:
        _, i1 = weight_integrals(h, x, w)
        return i1
    if tables is None:
        tables = MainTermTables.build(k, h, int(math.ceil(2 * x)) + 1)
    if tables.k != k or tables.h != h:
        raise ValueError("tables were built for different (k, h)")
    if tables.limit < 2 * x:
        raise ValueError("tables too short for this x")
    j1, j0 = _staircase_integrals(x, h, w, tables)
    return j1 - 2.0 * j0


def truncation_diagnostics(tables: MainTermTables, x: float) -> dict:
    """Share of the m-sum carried by the top decade below its 2x cap
    (the u >= 1/2 convention makes the cap exact, not a truncation)."""
    full_g, full_gp = tables.partial_sums(2 * x)
    dec_g, dec_gp = tables.partial_sums(0.2 * x)
    return {
        "m_cap": min(int(2 * x), tables.limit),
        "g_partial": full_g,
        "gprime_partial": full_gp,
        "g_top_decade_share": 1.0 - dec_g / full_g if full_g else 0.0,
        "gprime_top_decade_share":
            1.0 - dec_gp / full_gp if full_gp else 0.0,
    }


# ---------------------------------------------------------------------------
# Quadratic-in-log model fit for the paired divisor sum
# ---------------------------------------------------------------------------

def certain_main_fit(r1: int, r2: int, h: int, x_grid, w1, w2,
                     direct_values):
    """Least squares for values ~ (x / rbar) (c0 + c1 log x + c2 log^2 x)
    with rbar = max(r1, r2); returns (coefficients, residuals).

    w1, w2 are carried in the signature because the data they produced
    determines the fit's meaning; they do not enter the design matrix."""
    del w1, w2
    x = np.asarray(x_grid, dtype=float)
    y = np.asarray(direct_values, dtype=float)
    if len(x) < 6:
        raise ValueError("need at least 6 grid points")
    if math.log10(x.max() / x.min()) < 1.5:
        raise ValueError("grid must span at least 1.5 decades")
    rbar = max(r1, r2)
    logs = np.log(x)
    design = np.column_stack([(x / rbar) * logs**j for j in range(3)])
    coeffs, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3:
        raise ValueError("singular fit: grid too degenerate")
    residuals = y - design @ coeffs
    return coeffs, residuals
