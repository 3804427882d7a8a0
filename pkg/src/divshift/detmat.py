"""Determinant-equation enumeration: the exact correspondence between pairs
of shifted factorizations and integer matrices.

For squarefree r1 != r2 and a shift h, the solutions counted by
sum_n d(r1 n + h) d(r2 n + h) over a window correspond bijectively to
matrices (a, b; c, d) with

    a d - b c = rt2*h1 - rt1*h2,   rt2 | a,   rt1 | c,
    r2 | a d - h1*rt2,             a d - h1*rt2 in the scaled window,

where r0 = gcd(r1, r2), rt_i = r_i / r0 and (h1, h2) = (h, h) for the plain
instance.  Reduced instances produced by ``split_by_gcd`` carry distinct
shifts h1 != h2 plus coprimality side conditions; the same machinery covers
both, so conservation of counts through the splitting is checked exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .arith import factorize, gcd_infty, is_squarefree, spf_sieve
from .errors import CapacityError

ENUM_CAPACITY = 10**6


@dataclass(frozen=True)
class DetInstance:
    """A pair of shifted divisor factors d(r1 n + h) d(r2 n + h)."""

    r1: int
    r2: int
    h: int

    def __post_init__(self):
        if self.h == 0:
            raise ValueError("shift h must be nonzero")
        if not (is_squarefree(self.r1) and is_squarefree(self.r2)):
            raise ValueError("r1, r2 must be squarefree")

    @property
    def r0(self) -> int:
        return math.gcd(self.r1, self.r2)

    @property
    def rt1(self) -> int:
        return self.r1 // self.r0

    @property
    def rt2(self) -> int:
        return self.r2 // self.r0

    @property
    def k(self) -> int:
        """Prime-power-saturated gcd of rt2 - rt1 against r1*r2."""
        if self.rt1 == self.rt2:
            raise ValueError("degenerate instance: rt1 == rt2")
        return gcd_infty(abs(self.rt2 - self.rt1), self.r1 * self.r2)

    @property
    def target_det(self) -> int:
        return self.h * (self.rt2 - self.rt1)

    def reduced(self) -> "ReducedInstance":
        return ReducedInstance(self.r1, self.r2, self.h, self.h)


@dataclass(frozen=True)
class ReducedInstance:
    """Generalized instance d'(R1 n + H1) d'(R2 n + H2) with side conditions.

    ``forbid_a`` lists primes that must not divide the a-side factor of the
    first product; ``forbid_b`` likewise for the b-side factor of the
    second.  ``label`` records the branch of the gcd splitting that made
    this instance (empty for a plain instance).
    """

    r1: int
    r2: int
    h1: int
    h2: int
    forbid_a: tuple[int, ...] = ()
    forbid_b: tuple[int, ...] = ()
    label: tuple = ()
    window_moduli: tuple[int, int] | None = None

    @property
    def win(self) -> tuple[int, int]:
        """Moduli defining the n-window; branches of a gcd splitting keep
        the window of the instance they came from."""
        return self.window_moduli or (self.r1, self.r2)

    @property
    def r0(self) -> int:
        return math.gcd(self.r1, self.r2)

    @property
    def rt1(self) -> int:
        return self.r1 // self.r0

    @property
    def rt2(self) -> int:
        return self.r2 // self.r0

    @property
    def target_det(self) -> int:
        return self.rt2 * self.h1 - self.rt1 * self.h2


def window(r1: int, r2: int, x: float) -> range:
    """Integers n with x/2 < r_i n < x for both i (open support window)."""
    lo = max(x / (2 * r1), x / (2 * r2))
    hi = min(x / r1, x / r2)
    nlo = math.floor(lo) + 1
    nhi = math.ceil(hi) - 1
    return range(max(nlo, 1), nhi + 1)


def _pair_count(m: int, forbid: tuple[int, ...], spf=None) -> int:
    """Ordered factorizations m = u*v with gcd(u, prod(forbid)) = 1.

    Each forbidden prime forces its full power into v, so the count is the
    product of (e+1) over the non-forbidden prime powers of m."""
    assert m > 0
    out = 1
    if spf is not None and m < len(spf):
        while m > 1:
            p = int(spf[m])
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            if p not in forbid:
                out *= e + 1
        return out
    for p, e in factorize(m).factors:
        if p not in forbid:
            out *= e + 1
    return out


def _pair_list(m: int, forbid: tuple[int, ...]) -> list[tuple[int, int]]:
    out = []
    for u in factorize(m).divisors():
        if all(u % p for p in forbid):
            out.append((u, m // u))
    return out


def direct_count(inst: ReducedInstance | DetInstance, x: float,
                 spf=None) -> int:
    """sum over the window of (pair count of R1 n + H1) * (pair count of
    R2 n + H2) under the side conditions."""
    inst = inst.reduced() if isinstance(inst, DetInstance) else inst
    total = 0
    for n in window(*inst.win, x):
        m1 = inst.r1 * n + inst.h1
        m2 = inst.r2 * n + inst.h2
        if m1 <= 0 or m2 <= 0:
            raise ValueError("shift pushes a product non-positive in window")
        total += (_pair_count(m1, inst.forbid_a, spf)
                  * _pair_count(m2, inst.forbid_b, spf))
    return total


def direct_solutions(inst: DetInstance, x: float) -> list[tuple]:
    """Complete list of (n, (a, d), (b, c)) with a*d = r1 n + h and
    b*c = r2 n + h over the window."""
    if x > ENUM_CAPACITY:
        raise CapacityError(f"exhaustive listing capped at x={ENUM_CAPACITY}")
    out = []
    for n in window(inst.r1, inst.r2, x):
        m1 = inst.r1 * n + inst.h
        m2 = inst.r2 * n + inst.h
        if m1 <= 0 or m2 <= 0:
            raise ValueError("shift pushes a product non-positive in window")
        for ad in _pair_list(m1, ()):
            for bc in _pair_list(m2, ()):
                out.append((n, ad, bc))
    return out


def matrix_solutions(inst: ReducedInstance | DetInstance,
                     x: float) -> list[tuple]:
    """All matrices (a, b, c, d) with positive entries satisfying the
    determinant equation, the divisibility conditions and the window.

    Entries are positive because both products r_i n + h_i are positive on
    the window; a sign-flipped matrix never meets the window condition."""
    if x > ENUM_CAPACITY:
        raise CapacityError(f"exhaustive listing capped at x={ENUM_CAPACITY}")
    inst = inst.reduced() if isinstance(inst, DetInstance) else inst
    rt1, rt2, r2 = inst.rt1, inst.rt2, inst.r2
    det = inst.target_det
    if det == 0:
        raise ValueError("degenerate instance: zero target determinant")
    win = window(*inst.win, x)
    if len(win) == 0:
        return []
    if inst.r1 * win[0] + inst.h1 <= 0 or inst.r2 * win[0] + inst.h2 <= 0:
        raise ValueError("shift pushes a product non-positive in window")
    prod_lo = rt2 * (inst.r1 * win[0] + inst.h1)   # = a*d at window start
    prod_hi = rt2 * (inst.r1 * win[-1] + inst.h1)
    out = []
    bc_pairs: dict[int, list] = {}
    a = rt2
    while a <= prod_hi:
        if any((a // rt2) % p == 0 for p in inst.forbid_a):
            a += rt2
            continue
        d_lo = -(-prod_lo // a)   # ceil
        d_hi = prod_hi // a
        for d in range(max(d_lo, 1), d_hi + 1):
            u = a * d - inst.h1 * rt2
            if u % r2:
                continue
            if u % (inst.r1 * rt2):
                continue
            n = u // (inst.r1 * rt2)
            if n not in win:
                continue
            p = a * d - det
            assert p > 0 and p % rt1 == 0
            m2 = p // rt1
            assert m2 == inst.r2 * n + inst.h2
            if m2 not in bc_pairs:
                bc_pairs[m2] = _pair_list(m2, inst.forbid_b)
            for b, cc in bc_pairs[m2]:
                mat = (a, b, rt1 * cc, d)
                _assert_solution(inst, mat, n)
                out.append(mat)
        a += rt2
    return out


def _assert_solution(inst: ReducedInstance, mat: tuple, n: int) -> None:
    a, b, c, d = mat
    assert a * d - b * c == inst.target_det
    assert a % inst.rt2 == 0 and c % inst.rt1 == 0
    assert (a * d - inst.h1 * inst.rt2) % inst.r2 == 0
    assert (a * d - inst.h1 * inst.rt2) == inst.r1 * inst.rt2 * n


def matrix_count(inst: ReducedInstance | DetInstance, x: float) -> int:
    return len(matrix_solutions(inst, x))


def correspondence_check(inst: DetInstance | ReducedInstance,
                         x: float) -> tuple[int, int, bool]:
    """(direct count, matrix count, equal).  Equality certifies the
    factorization <-> matrix bijection on this instance; any mismatch is an
    implementation bug, not numerical noise."""
    nd = direct_count(inst, x)
    nm = matrix_count(inst, x)
    return nd, nm, nd == nm


def split_by_gcd(inst: DetInstance) -> list[ReducedInstance]:
    """Branch family reducing gcd(h, r1 r2) > 1 to shift-coprime instances.

    For s1 = gcd(h, rt1), s2 = gcd(h, rt2), s0 = gcd(h, r0): every prime of
    s1 (and of s0) divides the first product, every prime of s2 (and of s0)
    divides the second.  A divisible factor pair m = u*v splits exactly as
    (p | u) or (p | v with p coprime to u), which is where the coprimality
    side conditions come from.  The union of the branch solution sets maps
    bijectively onto the original solution set, so counts are conserved.
    """
    h = inst.h
    s0 = math.gcd(abs(h), inst.r0)
    s1 = math.gcd(abs(h), inst.rt1)
    s2 = math.gcd(abs(h), inst.rt2)
    wm = (inst.r1, inst.r2)
    branches = [ReducedInstance(inst.r1, inst.r2, h, h, window_moduli=wm)]
    for p in [p for p, _ in factorize(s1).factors]:
        branches = _split_first(branches, p)
    for p in [p for p, _ in factorize(s2).factors]:
        branches = _split_second(branches, p)
    for p in [p for p, _ in factorize(s0).factors]:
        branches = _split_first(branches, p)
        branches = _split_second(branches, p)
    return branches


def _split_first(branches: list[ReducedInstance],
                 p: int) -> list[ReducedInstance]:
    """p divides R1 n + H1 identically; peel it off the first factor pair."""
    out = []
    for br in branches:
        assert br.r1 % p == 0 and br.h1 % p == 0
        out.append(ReducedInstance(
            br.r1 // p, br.r2, br.h1 // p, br.h2, br.forbid_a, br.forbid_b,
            br.label + (("a", p),), br.window_moduli))
        out.append(ReducedInstance(
            br.r1 // p, br.r2, br.h1 // p, br.h2,
            br.forbid_a + (p,), br.forbid_b, br.label + (("d", p),),
            br.window_moduli))
    return out


def _split_second(branches: list[ReducedInstance],
                  p: int) -> list[ReducedInstance]:
    out = []
    for br in branches:
        assert br.r2 % p == 0 and br.h2 % p == 0
        out.append(ReducedInstance(
            br.r1, br.r2 // p, br.h1, br.h2 // p, br.forbid_a, br.forbid_b,
            br.label + (("b", p),), br.window_moduli))
        out.append(ReducedInstance(
            br.r1, br.r2 // p, br.h1, br.h2 // p,
            br.forbid_a, br.forbid_b + (p,), br.label + (("c", p),),
            br.window_moduli))
    return out


def gamma_decomposition_check(inst: DetInstance, x: float) -> bool:
    """Partition the matrix solutions by (gcd(a,c,k), gcd(b,d,k)) and check
    that the cells are a partition and that rescaling each cell by its
    divisor pair lands in the gcd(a,c,k) = gcd(b,d,k) = 1 stratum."""
    k = inst.k
    sols = matrix_solutions(inst, x)
    divisors_k = factorize(k).divisors()
    cells = {(g1, g2): [] for g1 in divisors_k for g2 in divisors_k}
    for a, b, c, d in sols:
        g1 = math.gcd(math.gcd(a, c), k)
        g2 = math.gcd(math.gcd(b, d), k)
        cells[(g1, g2)].append((a, b, c, d))
    if sum(len(v) for v in cells.values()) != len(sols):
        return False
    for (g1, g2), mats in cells.items():
        for a, b, c, d in mats:
            aa, cc = a // g1, c // g1
            bb, dd = b // g2, d // g2
            if math.gcd(math.gcd(aa, cc), k) != 1:
                return False
            if math.gcd(math.gcd(bb, dd), k) != 1:
                return False
            if (aa * dd - bb * cc) * g1 * g2 != inst.target_det:
                return False
    return True


def build_spf(limit: int):
    """Smallest-prime-factor table shared across repeated instance checks."""
    return spf_sieve(limit)
