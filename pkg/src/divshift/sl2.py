"""Projective lines over Z/qZ, coset enumeration for the congruence
subgroups Gamma_2(q1, q2) = {(a,b;c,d) in SL2(Z) : q1 | b, q2 | c}, and
correlation sums of automorphic indicator weights against unipotent and
twisted translates.

A coset of Gamma_2(q1, q2)\\SL2(Z) is labelled by its two row classes: a
point of P^1(Z/q1) from row one and a point of P^1(Z/q2) from row two,
subject to the determinant being a unit modulo gcd(q1, q2).  ``lift_coset``
inverts the labelling constructively (CRT plus extended Euclid), which is
what lets every K-sum below be evaluated by exact enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith import factorize, gcd_infty, is_squarefree
from .errors import CapacityError

PROJ_CAPACITY = 10**6


def _crt2(r1: int, m1: int, r2: int, m2: int) -> int:
    """Unique residue mod m1*m2 (m1, m2 coprime)."""
    if m1 == 1:
        return r2 % m2
    if m2 == 1:
        return r1 % m1
    return (r1 + (r2 - r1) * pow(m1, -1, m2) % m2 * m1) % (m1 * m2)


def psi_index(q: int) -> int:
    """psi(q) = q * prod_{p|q} (1 + 1/p) = [SL2(Z) : Gamma_0(q)], exactly."""
    out = 1
    for p, e in factorize(q).factors:
        out *= p**e + p ** (e - 1)
    return out


# ---------------------------------------------------------------------------
# Projective points and coset labels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProjPoint:
    """Point of P^1(Z/qZ) held by its canonical representative.

    Canonical form: componentwise at every prime power p^e || q, scale by
    the unit making y = 1 when y is a unit mod p, else x = 1; the pieces
    are CRT-combined.  Two representatives of one class normalize equal.
    """

    q: int
    x: int
    y: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("modulus must be positive")
        x, y = normalize_point(self.q, self.x, self.y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


def normalize_point(q: int, x: int, y: int) -> tuple[int, int]:
    if q == 1:
        return 0, 0
    x %= q
    y %= q
    if math.gcd(math.gcd(x, y), q) != 1:
        raise ValueError(f"({x}, {y}) is not primitive mod {q}")
    lam, mod = 0, 1
    for p, e in factorize(q).factors:
        pe = p**e
        if y % p != 0:
            lam_pe = pow(y % pe, -1, pe)
        else:
            lam_pe = pow(x % pe, -1, pe)
        lam = _crt2(lam, mod, lam_pe, pe)
        mod *= pe
    return (x * lam) % q, (y * lam) % q


def proj_line(q: int) -> list[ProjPoint]:
    """All points of P^1(Z/qZ); size q * prod_{p|q}(1 + 1/p)."""
    if q > PROJ_CAPACITY:
        raise CapacityError(f"projective line for q={q} exceeds capacity")
    if q == 1:
        return [ProjPoint(1, 0, 0)]
    pairs = [(0, 0)]
    mod = 1
    for p, e in factorize(q).factors:
        pe = p**e
        local = [(xx, 1) for xx in range(pe)]
        local += [(1, p * yy) for yy in range(pe // p)]
        pairs = [
            (_crt2(xa, mod, xb, pe), _crt2(ya, mod, yb, pe))
            for xa, ya in pairs
            for xb, yb in local
        ]
        mod *= pe
    return [ProjPoint(q, x, y) for x, y in pairs]


@dataclass(frozen=True)
class CosetLabel:
    """Label of a Gamma_2(q1, q2) coset: row classes with unit determinant
    mod q0 = gcd(q1, q2)."""

    row1: ProjPoint
    row2: ProjPoint

    def __post_init__(self):
        q0 = math.gcd(self.q1, self.q2)
        det = self.row1.x * self.row2.y - self.row1.y * self.row2.x
        if math.gcd(det, q0) != 1:
            raise ValueError("determinant condition fails mod gcd(q1, q2)")

    @property
    def q1(self) -> int:
        return self.row1.q

    @property
    def q2(self) -> int:
        return self.row2.q


def coset_list(q1: int, q2: int) -> list[CosetLabel]:
    q0 = math.gcd(q1, q2)
    out = []
    for p1 in proj_line(q1):
        for p2 in proj_line(q2):
            det = p1.x * p2.y - p1.y * p2.x
            if math.gcd(det, q0) == 1:
                out.append(CosetLabel(p1, p2))
    return out


def mat_mul(m: tuple, n: tuple) -> tuple:
    a, b, c, d = m
    e, f, g, h = n
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def mat_det(m: tuple) -> int:
    return m[0] * m[3] - m[1] * m[2]


def coset_of(mat: tuple, q1: int, q2: int) -> CosetLabel:
    """Label of [mat] in Gamma_2(q1, q2)\\SL2(Z); invariant under left
    multiplication by Gamma_2(q1, q2)."""
    if mat_det(mat) != 1:
        raise ValueError("matrix must have determinant 1")
    a, b, c, d = mat
    return CosetLabel(ProjPoint(q1, a, b), ProjPoint(q2, c, d))


def _lift_primitive(x: int, y: int, q: int) -> tuple[int, int]:
    """Integer pair congruent to (x, y) mod q with gcd = 1."""
    if q == 1:
        return 1, 0
    x %= q
    y %= q
    big_x = x if x != 0 else q
    t, mod = 0, 1
    for p, _ in factorize(big_x).factors:
        if q % p == 0:
            continue  # p | x and p | q force p coprime to y already
        avoid = (-y) * pow(q, -1, p) % p
        t = _crt2(t, mod, (avoid + 1) % p, p)
        mod *= p
    big_y = y + t * q
    assert math.gcd(big_x, big_y) == 1
    return big_x, big_y


def lift_coset(label: CosetLabel) -> tuple:
    """SL2(Z) representative of the labelled coset.

    Row two is lifted to a coprime pair first; row one is then adjusted (by
    CRT at the primes of q2 away from q1) so that its determinant against
    row two is a unit mod q2, which makes the final shearing congruence
    solvable.
    """
    q1, q2 = label.q1, label.q2
    c0, d0 = _lift_primitive(label.row2.x, label.row2.y, q2)

    residues = [(label.row1.x, label.row1.y, q1)]
    for p, e in factorize(q2).factors:
        if q1 % p == 0:
            continue
        pe = p**e
        if d0 % p != 0:
            residues.append((pow(d0, -1, pe), 0, pe))
        else:
            residues.append((0, (-pow(c0, -1, pe)) % pe, pe))
    ax, bx, mod = 0, 0, 1
    for rx, ry, m in residues:
        ax = _crt2(ax, mod, rx, m)
        bx = _crt2(bx, mod, ry, m)
        mod *= m
    a, b = _lift_primitive(ax, bx, mod)

    # det (a, b; u, v) = 1 from extended Euclid, then shear row two by t*(a, b)
    g, s, tt = _xgcd(a, b)
    assert g == 1
    v, u = s, -tt  # a*v - b*u = 1
    delta = (a * d0 - b * c0) % q2 if q2 > 1 else 1
    t = (c0 * v - d0 * u) * pow(delta, -1, q2) % q2 if q2 > 1 else 0
    mat = (a, b, u + t * a, v + t * b)
    assert mat_det(mat) == 1
    assert coset_of(mat, q1, q2) == label
    return mat


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        qq = old_r // r
        old_r, r = r, old_r - qq * r
        old_s, s = s, old_s - qq * s
        old_t, t = t, old_t - qq * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def gamma2_generators(q1: int, q2: int) -> list[tuple]:
    """Sampling set for Gamma_2(q1, q2): elementary shears and -I."""
    return [
        (1, q1, 0, 1), (1, -q1, 0, 1),
        (1, 0, q2, 1), (1, 0, -q2, 1),
        (-1, 0, 0, -1),
    ]


def random_gamma2(q1: int, q2: int, rng, word_length: int = 12) -> tuple:
    gens = gamma2_generators(q1, q2)
    m = (1, 0, 0, 1)
    for _ in range(int(rng.integers(1, word_length + 1))):
        m = mat_mul(m, gens[int(rng.integers(len(gens)))])
    return m


def random_sl2(rng, word_length: int = 12) -> tuple:
    gens = [(0, -1, 1, 0), (1, 1, 0, 1), (1, -1, 0, 1)]
    m = (1, 0, 0, 1)
    for _ in range(int(rng.integers(1, word_length + 1))):
        m = mat_mul(m, gens[int(rng.integers(len(gens)))])
    return m


# ---------------------------------------------------------------------------
# Automorphic indicator weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AutoWeight:
    """Indicator weight on integer matrices, parameterized by (r1, r2, h).

    mode "alpha0":  1[rt2 | a] * 1[rt1 | c]
    mode "alpha":   additionally 1[r2 | a*d - h*rt2]

    where r0 = gcd(r1, r2), rt_i = r_i / r0.  Both modes are left
    Gamma_2(r2, r1)-automorphic (checkable via ``check_automorphy``).
    """

    r1: int
    r2: int
    h: int = 0
    mode: str = "alpha0"

    def __post_init__(self):
        if self.mode not in ("alpha0", "alpha"):
            raise ValueError(f"unknown mode {self.mode!r}")
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

    def __call__(self, mat: tuple) -> int:
        a, b, c, d = mat
        if a % self.rt2 or c % self.rt1:
            return 0
        if self.mode == "alpha" and (a * d - self.h * self.rt2) % self.r2:
            return 0
        return 1

    def mask(self, a, c, d=None):
        """Vectorized indicator on matrix-entry arrays."""
        out = (a % self.rt2 == 0) & (c % self.rt1 == 0)
        if self.mode == "alpha":
            if d is None:
                raise ValueError("alpha mode needs the d entries")
            r2 = self.r2
            out &= ((a % r2) * (d % r2) - self.h * self.rt2) % r2 == 0
        return out


def check_automorphy(weight: AutoWeight, trials: int = 1000, seed: int = 0,
                     word_length: int = 12, indicator=None) -> bool:
    """Sample gamma in Gamma_2(r2, r1) and g in SL2(Z); report whether
    alpha(gamma g) == alpha(g) held on every trial.

    ``indicator`` overrides the evaluated function (negative controls)."""
    fn = indicator if indicator is not None else weight
    q1, q2 = weight.r2, weight.r1
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        gamma = random_gamma2(q1, q2, rng, word_length)
        g = random_sl2(rng, word_length)
        if fn(mat_mul(gamma, g)) != fn(g):
            return False
    return True


# ---------------------------------------------------------------------------
# Coset tables and K-sums
# ---------------------------------------------------------------------------

@dataclass
class CosetTable:
    """Lifted representatives of Gamma_2(q1, q2)\\SL2(Z) as entry arrays."""

    q1: int
    q2: int
    labels: list[CosetLabel]
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    @classmethod
    def build(cls, q1: int, q2: int) -> "CosetTable":
        labels = coset_list(q1, q2)
        mats = [lift_coset(lab) for lab in labels]
        cols = np.array(mats, dtype=np.int64).reshape(len(mats), 4)
        return cls(q1, q2, labels, cols[:, 0], cols[:, 1], cols[:, 2],
                   cols[:, 3])

    def __len__(self) -> int:
        return len(self.labels)

    def randomized(self, rng, word_length: int = 8) -> "CosetTable":
        """Replace every representative by another one of the same coset."""
        mats = []
        for i in range(len(self.labels)):
            gamma = random_gamma2(self.q1, self.q2, rng, word_length)
            mats.append(mat_mul(gamma, (int(self.a[i]), int(self.b[i]),
                                        int(self.c[i]), int(self.d[i]))))
        cols = np.array(mats, dtype=np.int64).reshape(len(mats), 4)
        return CosetTable(self.q1, self.q2, self.labels, cols[:, 0],
                          cols[:, 1], cols[:, 2], cols[:, 3])


def _table_for(weight: AutoWeight, table: CosetTable | None) -> CosetTable:
    if table is None:
        return CosetTable.build(weight.r2, weight.r1)
    if (table.q1, table.q2) != (weight.r2, weight.r1):
        raise ValueError("coset table moduli do not match the weight")
    return table


def _require_alpha0(weight: AutoWeight) -> None:
    if weight.mode != "alpha0":
        raise ValueError("this K-sum is defined for alpha0-mode weights")


def correlation_at(weight: AutoWeight, sigma: tuple,
                   table: CosetTable | None = None) -> float:
    """|sum_tau alpha0(tau) alpha0(tau sigma)| for one integer matrix.

    alpha0 reads only the first column of tau*sigma, which involves only
    the first column of sigma."""
    _require_alpha0(weight)
    t = _table_for(weight, table)
    s11, s21 = sigma[0], sigma[2]
    base = weight.mask(t.a, t.c)
    prod_a = t.a * s11 + t.b * s21
    prod_c = t.c * s11 + t.d * s21
    return abs(float(np.sum(base & weight.mask(prod_a, prod_c))))


def ksum_b_terms(weight: AutoWeight, bmax: int,
                 table: CosetTable | None = None) -> np.ndarray:
    """Entry [b] holds the correlations against (1, +-b; 0, 1): the b = 0
    term at index 0, and the sum of the +b and -b terms for b >= 1."""
    t = _table_for(weight, table)
    out = np.empty(bmax + 1)
    out[0] = correlation_at(weight, (1, 0, 0, 1), t)
    for b in range(1, bmax + 1):
        out[b] = (correlation_at(weight, (1, b, 0, 1), t)
                  + correlation_at(weight, (1, -b, 0, 1), t))
    return out


def ksum_b(weight: AutoWeight, bmax: int,
           table: CosetTable | None = None) -> float:
    """Sum over 0 <= |b| <= bmax of |sum_tau alpha0(tau) alpha0(tau u_b)|
    with upper unipotent u_b."""
    return float(ksum_b_terms(weight, bmax, table).sum())


def ksum_c_terms(weight: AutoWeight, cmax: int,
                 table: CosetTable | None = None) -> np.ndarray:
    """Entry [c] holds the +c plus -c lower-unipotent correlations for
    c >= 1; index 0 is zero (the c = 0 term is excluded)."""
    t = _table_for(weight, table)
    out = np.zeros(cmax + 1)
    for c in range(1, cmax + 1):
        out[c] = (correlation_at(weight, (1, 0, c, 1), t)
                  + correlation_at(weight, (1, 0, -c, 1), t))
    return out


def ksum_c(weight: AutoWeight, cmax: float,
           table: CosetTable | None = None) -> float:
    """Sum over 0 < |c| <= cmax."""
    return float(ksum_c_terms(weight, int(math.floor(cmax)), table).sum())


def ksum_sigma_sup(weight: AutoWeight, samples: int = 1000, seed: int = 0,
                   entry_bound: int = 50, include_identity: bool = True,
                   table: CosetTable | None = None) -> float:
    """Max of the correlation over sampled integer matrices sigma."""
    t = _table_for(weight, table)
    rng = np.random.default_rng(seed)
    sup = 0.0
    if include_identity:
        sup = correlation_at(weight, (1, 0, 0, 1), t)
    for _ in range(samples):
        sigma = tuple(int(v) for v in
                      rng.integers(-entry_bound, entry_bound + 1, size=4))
        sup = max(sup, correlation_at(weight, sigma, t))
    return sup


# ---------------------------------------------------------------------------
# Hecke representatives and the twisted K-sum
# ---------------------------------------------------------------------------

def hecke_reps(k: int) -> list[tuple]:
    """Hermite-form orbit representatives (a, b; 0, d), ad = k, 0 <= b < d,
    of SL2(Z)\\{det = k}, filtered by gcd(a, k) = 1 and gcd(b, d, k) = 1."""
    reps = []
    for a in range(1, k + 1):
        if k % a:
            continue
        d = k // a
        for b in range(d):
            if math.gcd(a, k) == 1 and math.gcd(math.gcd(b, d), k) == 1:
                reps.append((a, b, 0, d))
    return reps


def lemma_k(r1: int, r2: int) -> int:
    """Prime-power-saturated gcd of rt2 - rt1 against r1*r2."""
    r0 = math.gcd(r1, r2)
    rt1, rt2 = r1 // r0, r2 // r0
    if rt1 == rt2:
        raise ValueError("degenerate: rt1 == rt2")
    return gcd_infty(abs(rt2 - rt1), r1 * r2)


def lemma_r(r1: int, r2: int, k: int | None = None) -> int:
    r0 = math.gcd(r1, r2)
    if k is None:
        k = lemma_k(r1, r2)
    return r0 // math.gcd(r0, k)


def _twisted_candidates(k: int, r: int, ell: Fraction, cand_cap: int):
    """Yield (sigma, f1, f2, w_num, g) with sigma in SL2(Z),
    sigma_j = (1, f_j*r; 0, k), g = sigma_1 sigma sigma_2^{-1} inside the
    norm ball |g11| + |g12|*L + |g21|/L + |g22| <= 10.

    w_num is the integer matrix with tau*sigma*g = tau * w_num / k.
    g is returned as integer entries over denominator k: (n11*k, n12, n21*k,
    n22*k)/k -- only used for the exact norm check here.
    """
    ten = Fraction(10)
    s21_cap = int(ten * ell / k)  # |k*s21| / L <= 10
    visited = 0
    for f1 in range(1, k + 1):
        for f2 in range(1, k + 1):
            for s21 in range(-s21_cap, s21_cap + 1):
                if s21 == 0:
                    for eps in (1, -1):
                        # g12 = (s12 + eps*(f1 - f2)*r) / k
                        shift = eps * (f1 - f2) * r
                        lo = math.ceil(-ten * k / ell - shift)
                        hi = math.floor(ten * k / ell - shift)
                        for s12 in range(lo, hi + 1):
                            visited += 1
                            if visited > cand_cap:
                                raise CapacityError(
                                    "twisted K-sum enumeration too large")
                            yield from _emit_candidate(
                                (eps, s12, 0, eps), f1, f2, k, r, ell)
                    continue
                a_lo = -10 - f1 * r * s21
                d_lo = -10 + f2 * r * s21
                for s11 in range(a_lo, a_lo + 21):
                    for s22 in range(d_lo, d_lo + 21):
                        visited += 1
                        if visited > cand_cap:
                            raise CapacityError(
                                "twisted K-sum enumeration too large")
                        num = s11 * s22 - 1
                        if num % s21:
                            continue
                        s12 = num // s21
                        yield from _emit_candidate(
                            (s11, s12, s21, s22), f1, f2, k, r, ell)


def _emit_candidate(sigma: tuple, f1: int, f2: int, k: int, r: int,
                    ell: Fraction):
    s11, s12, s21, s22 = sigma
    g11 = s11 + f1 * r * s21
    g21 = k * s21
    g22 = s22 - f2 * r * s21
    g12_num = s12 + f1 * r * s22 - f2 * r * g11  # g12 = g12_num / k
    norm = (abs(g11) + Fraction(abs(g12_num), k) * ell
            + Fraction(abs(g21)) / ell + abs(g22))
    if norm > 10:
        return
    sig1 = (1, f1 * r, 0, k)
    adj2 = (k, -f2 * r, 0, 1)
    w_num = mat_mul(mat_mul(mat_mul(sigma, sig1), sigma), adj2)
    yield sigma, f1, f2, w_num, (g11, g12_num, g21, g22)


def twisted_ksum(weight: AutoWeight, k: int | None = None,
                 r: int | None = None, ell: float = 1.0,
                 table: CosetTable | None = None,
                 cand_cap: int = 10**7) -> float:
    """Exact evaluation of the twisted correlation sum.

    Enumerates sigma in SL2(Z) together with upper-triangular determinant-k
    translates sigma_j = (1, f_j r; 0, k), keeps g = sigma_1 sigma
    sigma_2^{-1} in the L-weighted norm ball of radius 10, and accumulates
    |sum_tau alpha(tau sigma) conj(alpha(tau sigma g))| over the full coset
    list.  alpha vanishes on non-integer matrices.
    """
    if weight.mode != "alpha":
        raise ValueError("twisted K-sum needs an alpha-mode weight")
    if math.gcd(weight.h, weight.r1 * weight.r2) != 1:
        raise ValueError("the shift must be coprime to r1*r2")
    if weight.r1 * weight.r2 > 200:
        raise CapacityError("twisted K-sum expects r1*r2 <= 200")
    if k is None:
        k = lemma_k(weight.r1, weight.r2)
    if r is None:
        r = lemma_r(weight.r1, weight.r2, k)
    if k > 4:
        raise ValueError("twisted K-sum expects determinant parameter k <= 4")
    if math.gcd(k, r) != 1:
        raise ValueError("k and r must be coprime")
    t = _table_for(weight, table)
    ell_f = ell if isinstance(ell, Fraction) else \
        Fraction(ell).limit_denominator(10**9)
    total = 0.0
    for sigma, _f1, _f2, w_num, _g in _twisted_candidates(
            k, r, ell_f, cand_cap):
        s11, s12, s21, s22 = sigma
        ts_a = t.a * s11 + t.b * s21
        ts_c = t.c * s11 + t.d * s21
        ts_d = t.c * s12 + t.d * s22
        m1 = weight.mask(ts_a, ts_c, ts_d)
        if not m1.any():
            continue
        w11, w12, w21, w22 = w_num
        n11 = t.a * w11 + t.b * w21
        n12 = t.a * w12 + t.b * w22
        n21 = t.c * w11 + t.d * w21
        n22 = t.c * w12 + t.d * w22
        integral = ((n11 % k == 0) & (n12 % k == 0)
                    & (n21 % k == 0) & (n22 % k == 0))
        m2 = integral & weight.mask(n11 // k, n21 // k, n22 // k)
        total += abs(float(np.sum(m1 & m2)))
    return total


def twisted_envelope(weight: AutoWeight, k: int, ell: float) -> float:
    """Right-hand side k*r0^2/L + k^2 r0^2 L / (rt1 rt2) + k^2 r0^2."""
    r0sq = weight.r0**2
    return (k * r0sq / ell + k * k * r0sq * ell / (weight.rt1 * weight.rt2)
            + k * k * r0sq)
