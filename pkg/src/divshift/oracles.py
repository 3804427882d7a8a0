"""Deliberately naive re-derivations used as independent cross-checks.

Nothing here shares code with the implementations it checks: divisor
tables come from per-divisor double loops instead of kernel passes,
Ramanujan sums from the defining exponential sum instead of the closed
form, coset counts from orbit enumeration in SL2(Z/LZ) instead of the
projective-line parameterization.
"""

from __future__ import annotations

import cmath
import math
from itertools import product


def dk_bruteforce(k: int, limit: int) -> list[int]:
    """d_k by k-1 naive convolution double loops over plain ints;
    entry [n] is d_k(n), entry [0] is 0."""
    vals = [0] + [1] * limit
    for _ in range(k - 1):
        out = [0] * (limit + 1)
        for d in range(1, limit + 1):
            v = vals[d]
            for m in range(d, limit + 1, d):
                out[m] += v
        vals = out
    return vals


def dk_single(k: int, n: int) -> int:
    """d_k(n) by recursive divisor enumeration (no tables)."""
    if k == 1:
        return 1
    total = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            total += dk_single(k - 1, d)
            if d != n // d:
                total += dk_single(k - 1, n // d)
        d += 1
    return total


def ramanujan_exp_sum(d: int, h: int) -> complex:
    """c_d(h) straight from the definition sum_{(a,d)=1} e(a h / d)."""
    total = 0j
    for a in range(d):
        if math.gcd(a, d) == 1:
            total += cmath.exp(2j * cmath.pi * a * h / d)
    if d == 1:
        total = 1 + 0j
    return total


def proj_line_bruteforce(q: int) -> set:
    """Classes of primitive pairs mod q under unit scaling, each class
    keyed by its lexicographically smallest element."""
    units = [u for u in range(q) if math.gcd(u, q) == 1] or [0]
    classes = set()
    for x in range(q):
        for y in range(q):
            if math.gcd(math.gcd(x, y), q) != 1 and q > 1:
                continue
            orbit = {(u * x % q, u * y % q) for u in units}
            classes.add(min(orbit))
    return classes


def sl2_mod_elements(l: int) -> list[tuple]:
    if l == 1:
        return [(0, 0, 0, 0)]
    out = []
    for a, b, c, d in product(range(l), repeat=4):
        if (a * d - b * c) % l == 1 % l:
            out.append((a, b, c, d))
    return out


def sl2_orbit_count(q1: int, q2: int) -> int:
    """Number of Gamma_2(q1, q2)-orbits on SL2(Z/LZ), L = lcm(q1, q2),
    under left multiplication.  By strong approximation this equals the
    index of Gamma_2(q1, q2) in SL2(Z)."""
    l = math.lcm(q1, q2)
    elements = sl2_mod_elements(l)
    subgroup = [(a, b, c, d) for (a, b, c, d) in elements
                if b % math.gcd(q1, l) == 0 and c % math.gcd(q2, l) == 0]
    seen = set()
    orbits = 0
    for g in elements:
        if g in seen:
            continue
        orbits += 1
        ga, gb, gc, gd = g
        for ha, hb, hc, hd in subgroup:
            prod_ = ((ha * ga + hb * gc) % l, (ha * gb + hb * gd) % l,
                     (hc * ga + hd * gc) % l, (hc * gb + hd * gd) % l)
            seen.add(prod_)
    return orbits


def sl2_ball(bound: float, weight_b: float = 1.0,
             weight_c: float = 1.0) -> list[tuple]:
    """Integer SL2 matrices with |a| + |b| w_b + |c| w_c + |d| <= bound."""
    out = []
    amax = int(bound)
    for a in range(-amax, amax + 1):
        for b in range(-int(bound / weight_b) if weight_b else amax,
                       int(bound / weight_b) + 1 if weight_b else amax + 1):
            for c in range(-int(bound / weight_c) if weight_c else amax,
                           int(bound / weight_c) + 1 if weight_c else amax + 1):
                if a != 0 or b * c == -1:
                    if a == 0:
                        d_candidates = range(-int(bound), int(bound) + 1)
                    else:
                        if (1 + b * c) % a:
                            continue
                        d_candidates = [(1 + b * c) // a]
                    for d in d_candidates:
                        if a * d - b * c != 1:
                            continue
                        if (abs(a) + abs(b) * weight_b + abs(c) * weight_c
                                + abs(d)) <= bound:
                            out.append((a, b, c, d))
    return out


def euler_phi_naive(n: int) -> int:
    return sum(1 for a in range(1, n + 1) if math.gcd(a, n) == 1)
