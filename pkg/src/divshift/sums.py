"""Weighted convolution sums, dyadic covers, the three-case exponent
classifier and the remainder-bound formulas.

Sums are evaluated over the integer window cut out by the weight support
with numpy pairwise reductions (bit-stable for a fixed window).  The
classifier works verbatim on ``fractions.Fraction`` input, which is how the
exhaustive grid verification stays exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

import numpy as np

from . import arith
from .errors import CapacityError, LemmaViolationError
from .weights import SmoothWeight


# ---------------------------------------------------------------------------
# Direct weighted sums
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvolutionQuery:
    """sum_n w(n/x) d_k(n) d(n + h)."""

    k: int
    h: int
    x: float
    w: SmoothWeight

    def __post_init__(self):
        if self.h == 0:
            raise ValueError("shift h must be nonzero")
        if math.floor(self.w.lo * self.x) + 1 + self.h < 1:
            raise ValueError("window contains n with n + h < 1")


@dataclass(frozen=True)
class CertainQuery:
    """sum_n w1(r1 n/x) w2(r2 n/x) d(r1 n + h) d(r2 n + h)."""

    r1: int
    r2: int
    h: int
    x: float
    w1: SmoothWeight
    w2: SmoothWeight

    def __post_init__(self):
        if self.h == 0:
            raise ValueError("shift h must be nonzero")
        if not (arith.is_squarefree(self.r1) and arith.is_squarefree(self.r2)):
            raise ValueError("r1, r2 must be squarefree")


def _window(lo: float, hi: float) -> np.ndarray:
    nlo = max(math.floor(lo) + 1, 1)
    nhi = math.ceil(hi) - 1
    if nhi < nlo:
        return np.empty(0, dtype=np.int64)
    return np.arange(nlo, nhi + 1, dtype=np.int64)


def direct_sum(q: ConvolutionQuery, dk: arith.DivisorTable | None = None,
               d2: arith.DivisorTable | None = None) -> float:
    """Exact weighted sum in double precision (numpy pairwise reduction)."""
    n = _window(q.w.lo * q.x, q.w.hi * q.x)
    if len(n) == 0:
        return 0.0
    top = int(n[-1])
    if dk is None:
        dk = arith.sieve_dk(q.k, top)
    if d2 is None:
        d2 = arith.sieve_dk(2, top + max(q.h, 0))
    wvals = q.w(n / q.x)
    vals = dk.values[n] * d2.values[n + q.h]
    return float(np.sum(wvals * vals))


def certain_sum(q: CertainQuery,
                d2: arith.DivisorTable | None = None) -> float:
    n = _window(max(q.w1.lo * q.x / q.r1, q.w2.lo * q.x / q.r2),
                min(q.w1.hi * q.x / q.r1, q.w2.hi * q.x / q.r2))
    if len(n) == 0:
        return 0.0
    if d2 is None:
        d2 = arith.sieve_dk(2, int(n[-1]) * max(q.r1, q.r2) + max(q.h, 0))
    wvals = q.w1(q.r1 * n / q.x) * q.w2(q.r2 * n / q.x)
    vals = d2.values[q.r1 * n + q.h] * d2.values[q.r2 * n + q.h]
    return float(np.sum(wvals * vals))


def certain_terms(q: CertainQuery,
                  d2: arith.DivisorTable | None = None):
    """(n, weighted term) arrays; the per-n view used by the determinant
    correspondence tests."""
    n = _window(max(q.w1.lo * q.x / q.r1, q.w2.lo * q.x / q.r2),
                min(q.w1.hi * q.x / q.r1, q.w2.hi * q.x / q.r2))
    if len(n) == 0:
        return n, np.empty(0)
    if d2 is None:
        d2 = arith.sieve_dk(2, int(n[-1]) * max(q.r1, q.r2) + max(q.h, 0))
    wvals = q.w1(q.r1 * n / q.x) * q.w2(q.r2 * n / q.x)
    vals = d2.values[q.r1 * n + q.h] * d2.values[q.r2 * n + q.h]
    return n, wvals * vals


# ---------------------------------------------------------------------------
# Partition classifier
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PartitionCase:
    """tag A: alpha_1 >= 1/3 + 2 delta/3;  tag B: alpha_1 + alpha_2 >=
    1/2 + delta;  tag C: witness index set I with 2 delta <= sum_I alpha_i
    <= 1/3 - 4 delta/3."""

    tag: str
    witness: tuple[int, ...] = ()


def _case_holds(case: PartitionCase, alphas, delta) -> bool:
    if case.tag == "A":
        return alphas[0] >= Fraction(1, 3) + Fraction(2, 3) * delta
    if case.tag == "B":
        return alphas[0] + alphas[1] >= Fraction(1, 2) + delta
    lo, hi = 2 * delta, Fraction(1, 3) - Fraction(4, 3) * delta
    s = sum(alphas[i] for i in case.witness)
    return len(case.witness) > 0 and lo <= s <= hi


def classify_partition(alphas, delta) -> PartitionCase:
    """First case (searched A, then B, then C) whose condition holds.

    Inputs may be floats or Fractions; Fractions classify exactly.  The
    witness search tries prefixes first, then all subsets (k <= 20).  The
    returned case is re-verified before returning; a vector admitting no
    case raises LemmaViolationError, which for valid input would mean a
    bug, not a boundary effect.
    """
    alphas = list(alphas)
    k = len(alphas)
    if k == 0:
        raise ValueError("need at least one exponent")
    if any(a < 0 or a > 1 for a in alphas):
        raise ValueError("entries must lie in [0, 1]")
    if any(alphas[i] < alphas[i + 1] for i in range(k - 1)):
        raise ValueError("entries must be sorted descending")
    if abs(float(sum(alphas)) - 1.0) > 1e-12:
        raise ValueError("entries must sum to 1")
    if not 0 < delta <= Fraction(1, 16):
        raise ValueError("delta must lie in (0, 1/16]")

    case = None
    if alphas[0] >= Fraction(1, 3) + Fraction(2, 3) * delta:
        case = PartitionCase("A")
    elif k >= 2 and alphas[0] + alphas[1] >= Fraction(1, 2) + delta:
        case = PartitionCase("B")
    else:
        lo, hi = 2 * delta, Fraction(1, 3) - Fraction(4, 3) * delta
        run = 0
        for i in range(k):  # smallest prefix first
            run = run + alphas[i]
            if lo <= run <= hi:
                case = PartitionCase("C", tuple(range(i + 1)))
                break
        if case is None and k <= 20:
            for mask in range(1, 2**k):
                idx = tuple(i for i in range(k) if mask >> i & 1)
                s = sum(alphas[i] for i in idx)
                if lo <= s <= hi:
                    case = PartitionCase("C", idx)
                    break
    if case is None:
        raise LemmaViolationError(f"no case holds for {alphas} at {delta}")
    assert _case_holds(case, alphas, delta)
    return case


# ---------------------------------------------------------------------------
# Dyadic boxes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DyadicBox:
    """Scales A_1 >= ... >= A_k (powers of two); slot i covers
    a_i in [A_i, 2 A_i)."""

    bounds: tuple[int, ...]

    def __post_init__(self):
        b = self.bounds
        if any(b[i] < b[i + 1] for i in range(len(b) - 1)):
            raise ValueError("bounds must be sorted descending")
        if any(v & (v - 1) or v < 1 for v in b):
            raise ValueError("bounds must be powers of two")

    @property
    def product(self) -> int:
        return math.prod(self.bounds)


def dyadic_cover(x: float, k: int, support=(0.5, 1.0)) -> list[DyadicBox]:
    """Sorted-descending dyadic boxes whose product range [P, 2^k P) meets
    the window (lo*x, hi*x]; every ordered k-tuple with product in the
    window lies in exactly one box (after sorting its scales)."""
    if k > 6:
        raise CapacityError("dyadic covers capped at k = 6")
    lo, hi = support[0] * x, support[1] * x
    out = []

    def rec(prefix, cap, prod):
        if len(prefix) == k:
            if (2**k) * prod > lo:  # prod <= hi held at every step
                out.append(DyadicBox(tuple(prefix)))
            return
        a = cap
        while a >= 1:
            if prod * a <= hi:
                rec(prefix + [a], a, prod * a)
            a //= 2

    top = 1
    while top * 2 <= hi:
        top *= 2
    rec([], top, 1)
    return sorted(out, key=lambda b: b.bounds, reverse=True)


def box_restricted_sum(box: DyadicBox, x: float, h: int, w: SmoothWeight,
                       d2: arith.DivisorTable | None = None) -> float:
    """sum over ordered tuples whose sorted dyadic scales equal the box of
    w(prod/x) d(prod + h).  Exhaustive; test-scale inputs only."""
    k = len(box.bounds)
    hi = w.hi * x
    if d2 is None:
        d2 = arith.sieve_dk(2, int(math.ceil(hi)) + max(h, 0))
    total = 0.0
    for perm in sorted(set(permutations(box.bounds))):
        total += _ordered_box_sum(perm, x, h, w, d2)
    return total


def _ordered_box_sum(scales, x, h, w, d2, prefix_prod=1, depth=0):
    if depth == len(scales):
        val = w(prefix_prod / x)
        if val == 0.0 or prefix_prod + h < 1:
            return 0.0
        return val * d2.values[prefix_prod + h]
    a = scales[depth]
    total = 0.0
    for v in range(a, 2 * a):
        prod = prefix_prod * v
        if prod > w.hi * x:
            break
        total += _ordered_box_sum(scales, x, h, w, d2, prod, depth + 1)
    return total


def classify_box(box: DyadicBox, x: float, delta) -> PartitionCase:
    """Classify through alpha_i = log2(A_i) / log2(prod A_j), which sums to
    one exactly; an all-ones box counts as case A outright."""
    js = [v.bit_length() - 1 for v in box.bounds]
    total = sum(js)
    if total == 0:
        return PartitionCase("A")
    alphas = [Fraction(j, total) for j in js]
    delta = delta if isinstance(delta, Fraction) else Fraction(delta)
    return classify_partition(alphas, delta)


# ---------------------------------------------------------------------------
# Exponent thresholds and remainder bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentThresholds:
    """X1 = x^(1/3 + 2d/3), X2 = x^(1/2 + d), X3 = x^(1/3 - 4d/3),
    X4 = x^(2d); ordered X4 <= X3 <= X1 <= X2 for 0 < d <= 1/16."""

    x: float
    delta: float

    @property
    def x1(self) -> float:
        return self.x ** (1 / 3 + 2 * self.delta / 3)

    @property
    def x2(self) -> float:
        return self.x ** (1 / 2 + self.delta)

    @property
    def x3(self) -> float:
        return self.x ** (1 / 3 - 4 * self.delta / 3)

    @property
    def x4(self) -> float:
        return self.x ** (2 * self.delta)


@dataclass(frozen=True)
class RemainderBounds:
    rem1: float
    rem2: float
    rem3: dict


def remainder_bounds(box: DyadicBox, x: float, h: int,
                     theta: float) -> RemainderBounds:
    """The three error envelopes for a dyadic box, with the x^epsilon
    display convention dropped (epsilon = 0)."""
    if not 0 <= theta <= 7 / 64:
        raise ValueError("theta must lie in [0, 7/64]")
    a = box.bounds
    a1 = a[0]
    rem1 = x**1.5 / a1**1.5
    if len(a) >= 2:
        a2 = a[1]
        rem2 = (x**1.5 / (a1 * a2)
                * (1 + (a1 * a2) ** (2 * theta) / x**theta)
                * (1 + math.sqrt(a2 / a1))
                * (1 + abs(h) ** 0.25 * math.sqrt(a1 * a2 / x)))
    else:
        rem2 = math.inf
    rem3 = {}
    k = len(a)
    for mask in range(1, 2**k):
        idx = tuple(i for i in range(k) if mask >> i & 1)
        prod = math.prod(a[i] for i in idx)
        rem3[idx] = (x / math.sqrt(prod)
                     + prod**0.75 * x**0.75
                     * (abs(h) ** (theta / 2) * prod ** (theta / 2)
                        + x ** (theta / 2) / prod ** (theta / 2)))
    return RemainderBounds(rem1, rem2, rem3)


def applicable_bound(box: DyadicBox, x: float, h: int, theta: float,
                     delta) -> tuple[PartitionCase, float]:
    """Classify the box and return the remainder envelope its case selects:
    A -> rem1, B -> rem2, C with witness I -> rem3 at A = prod_I A_i."""
    case = classify_box(box, x, delta)
    rb = remainder_bounds(box, x, h, theta)
    if case.tag == "A":
        return case, rb.rem1
    if case.tag == "B":
        return case, rb.rem2
    return case, rb.rem3[case.witness]
