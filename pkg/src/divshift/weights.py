"""Smooth compactly supported weights, dyadic partitions of unity, quadrature.

The canonical weight is the standard mollifier exp(-1/(1-u^2)) mapped
affinely onto the support (default [1/2, 1]); "cos2" (raised cosine) is the
alternative shape selectable from experiment configs.  Derivatives of the
mollifier are evaluated exactly through the polynomial recurrence

    w^(j) = Q_j(u) / (1-u^2)^(2j) * exp(-1/(1-u^2)),
    Q_{j+1} = (1-u^2)^2 Q_j' + (4ju(1-u^2) - 2u) Q_j,

with integer-coefficient Q_j precomputed once at import.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NonConvergenceError

MAX_DERIV_ORDER = 8


def _mollifier_numerators(jmax: int) -> list[np.ndarray]:
    """Coefficient arrays of Q_j (lowest degree first)."""
    one_minus_u2 = np.array([1.0, 0.0, -1.0])
    sq = np.polynomial.polynomial.polymul(one_minus_u2, one_minus_u2)
    qs = [np.array([1.0])]
    for j in range(jmax):
        q = qs[-1]
        dq = np.polynomial.polynomial.polyder(q)
        term1 = np.polynomial.polynomial.polymul(sq, dq)
        lin = np.polynomial.polynomial.polymul(
            np.array([0.0, 4.0 * j]), one_minus_u2)
        lin = np.polynomial.polynomial.polyadd(lin, np.array([0.0, -2.0]))
        term2 = np.polynomial.polynomial.polymul(lin, q)
        qs.append(np.polynomial.polynomial.polyadd(term1, term2))
    return qs


_MOLLIFIER_Q = _mollifier_numerators(MAX_DERIV_ORDER)


def _mollifier_deriv_u(u: np.ndarray, j: int) -> np.ndarray:
    """j-th derivative in the normalized variable u, zero for |u| >= 1."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0 - 1e-14
    ui = u[inside]
    core = 1.0 - ui * ui
    val = np.exp(-1.0 / core)
    num = np.polynomial.polynomial.polyval(ui, _MOLLIFIER_Q[j])
    out[inside] = val * num / core ** (2 * j)
    return out


def _cos2_deriv_u(u: np.ndarray, j: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0 if j else np.abs(u) <= 1.0
    ui = u[inside]
    # w(u) = (1 + cos(pi u)) / 2; only C^1 at the endpoints
    out[inside] = 0.5 * math.pi**j * np.cos(math.pi * ui + j * math.pi / 2)
    if j == 0:
        out[inside] += 0.5
    return out


_SHAPES: dict[str, Callable[[np.ndarray, int], np.ndarray]] = {
    "mollifier": _mollifier_deriv_u,
    "cos2": _cos2_deriv_u,
}


@dataclass(frozen=True)
class SmoothWeight:
    """Nonnegative smooth bump on [lo, hi], zero outside.

    ``amplitude`` rescales the named shape (used by the normalized Mellin
    kernel); derivative bounds for orders <= MAX_DERIV_ORDER are exposed via
    ``deriv_bound`` (numerical sup on a fine grid with a 5% safety margin).
    """

    shape: str = "mollifier"
    lo: float = 0.5
    hi: float = 1.0
    amplitude: float = 1.0
    _bounds: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.shape not in _SHAPES:
            raise ValueError(f"unknown weight shape {self.shape!r}")
        if not self.lo < self.hi:
            raise ValueError("support must satisfy lo < hi")

    def _to_u(self, t):
        t = np.asarray(t, dtype=float)
        return (2.0 * t - (self.lo + self.hi)) / (self.hi - self.lo)

    def __call__(self, t):
        return self.deriv(t, 0)

    def deriv(self, t, j: int):
        """Exact j-th derivative in t; vectorized, scalar in scalar out."""
        if not 0 <= j <= MAX_DERIV_ORDER:
            raise ValueError(f"derivative order must be 0..{MAX_DERIV_ORDER}")
        scale = (2.0 / (self.hi - self.lo)) ** j
        u = self._to_u(t)
        out = self.amplitude * scale * _SHAPES[self.shape](u, j)
        if np.ndim(t) == 0:
            return float(out)
        return out

    def deriv_bound(self, j: int) -> float:
        if self._bounds is None:
            grid = np.linspace(self.lo, self.hi, 4001)
            bounds = tuple(
                1.05 * float(np.max(np.abs(self.deriv(grid, jj))))
                for jj in range(MAX_DERIV_ORDER + 1)
            )
            object.__setattr__(self, "_bounds", bounds)
        return self._bounds[j]


def make_weight(shape: str = "mollifier", lo: float = 0.5,
                hi: float = 1.0) -> SmoothWeight:
    return SmoothWeight(shape=shape, lo=lo, hi=hi)


# ---------------------------------------------------------------------------
# Gauss-Kronrod 7-15 adaptive quadrature (fixed nodes, deterministic)
# ---------------------------------------------------------------------------

_GK_NODES = np.array([
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0,
])
_GK_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
])
_GK_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
])


def _gk15(f, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    xs = np.concatenate((mid - half * _GK_NODES[:-1],
                         [mid], mid + half * _GK_NODES[:-1][::-1]))
    ys = np.asarray(f(xs), dtype=float)
    left, center, right = ys[:7], ys[7], ys[8:][::-1]
    pairs = left + right
    k = half * (np.dot(pairs, _GK_WK[:-1]) + center * _GK_WK[-1])
    g = half * (np.dot(pairs[1::2], _GK_WG[:-1]) + center * _GK_WG[-1])
    return k, abs(k - g)


def adaptive_quadrature(f, a: float, b: float, tol: float = 1e-10,
                        max_depth: int = 40, seed_panels: int = 8) -> float:
    """Adaptive G7K15 with bisection; tol is relative to the magnitude of
    the integral (absolute floor near zero).  Node placement is a fixed
    function of (a, b), so results are bit-stable across runs."""
    if a == b:
        return 0.0
    edges = np.linspace(a, b, seed_panels + 1)
    panels = []
    total = 0.0
    for i in range(seed_panels):
        val, err = _gk15(f, edges[i], edges[i + 1])
        panels.append((edges[i], edges[i + 1], val, err, 0))
        total += val
    budget = tol * max(abs(total), 1e-30) + 1e-300
    result = 0.0
    stack = panels[::-1]
    while stack:
        lo, hi, val, err, depth = stack.pop()
        if err <= budget * (hi - lo) / (b - a) or err <= 1e-16 * abs(val):
            result += val
            continue
        if depth >= max_depth:
            raise NonConvergenceError(
                f"quadrature stalled on [{lo}, {hi}] at depth {depth}")
        mid = 0.5 * (lo + hi)
        for seg in ((lo, mid), (mid, hi)):
            v, e = _gk15(f, *seg)
            stack.append((seg[0], seg[1], v, e, depth + 1))
    return result


def integrate(w: SmoothWeight, x: float, f=None, tol: float = 1e-10,
              max_depth: int = 40) -> float:
    """integral of w(xi/x) * f(xi) dxi over the support window [lo*x, hi*x]."""
    if f is None:
        integrand = lambda xi: w(xi / x)
    else:
        integrand = lambda xi: w(xi / x) * f(xi)
    return adaptive_quadrature(integrand, w.lo * x, w.hi * x, tol=tol,
                               max_depth=max_depth)


# ---------------------------------------------------------------------------
# Dyadic partition of unity
# ---------------------------------------------------------------------------

def _exp_bump(v):
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    pos = v > 1e-14
    out[pos] = np.exp(-1.0 / v[pos])
    return out


def smooth_step(v):
    """C^infinity step: 0 for v <= 0, 1 for v >= 1, strictly rising between."""
    v = np.asarray(v, dtype=float)
    a = _exp_bump(v)
    b = _exp_bump(1.0 - v)
    with np.errstate(invalid="ignore"):
        out = np.where(a + b > 0, a / np.where(a + b > 0, a + b, 1.0), 0.0)
    return out


def _telescoping_base(u):
    """base(u) = step(log2 u) - step(log2 u - 1); support (1, 4)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    l = np.log2(u[pos])
    out[pos] = smooth_step(l) - smooth_step(l - 1.0)
    return out


@dataclass(frozen=True)
class DyadicPartition:
    """Family v_j(u) = base(u / 2^j) with sum_j v_j(u) = 1 for all u > 0.

    The base is a two-octave bump built from a smooth step sigma so that
    sigma(u) + sigma(2u) = 1 on the overlap; at most two members are nonzero
    at any point (exactly one at exact powers of two).
    """

    base: Callable = _telescoping_base

    def member(self, j: int, u):
        u = np.asarray(u, dtype=float)
        out = self.base(u / 2.0**j)
        return float(out) if np.ndim(out) == 0 else out

    def active_range(self, u: float) -> range:
        if u <= 0:
            return range(0)
        j0 = math.floor(math.log2(u))
        return range(j0 - 2, j0 + 1)

    def member_sum(self, u: float, jrange=None) -> float:
        js = self.active_range(u) if jrange is None else jrange
        return float(sum(self.member(j, u) for j in js))


def make_partition(base=None, probe: int = 200) -> DyadicPartition:
    """Build (and validate) a dyadic partition of unity.

    A custom base must vanish outside [1, 4] and satisfy the telescoping
    identity on a probe grid; the default base does so by construction.
    """
    if base is None:
        return DyadicPartition()
    part = DyadicPartition(base=base)
    for u in np.linspace(0.25, 0.999, 16):
        if abs(base(u)) > 1e-12 or abs(base(4.0 + 3.0 * u)) > 1e-12:
            raise ValueError("base must be supported inside [1, 4]")
    for u in np.geomspace(1.0, 64.0, probe):
        if abs(part.member_sum(float(u)) - 1.0) > 1e-9:
            raise ValueError("base does not telescope to a partition of unity")
    return part


def mellin_normalized_bump() -> SmoothWeight:
    """Smooth bump psi on [1, 2] scaled so that the integral of psi(u)/u
    over (0, infinity) equals 1 (equivalently psi(1/x)/x integrates to 1)."""
    raw = SmoothWeight(shape="mollifier", lo=1.0, hi=2.0)
    mass = adaptive_quadrature(lambda u: raw(u) / u, 1.0, 2.0)
    return SmoothWeight(shape="mollifier", lo=1.0, hi=2.0,
                        amplitude=1.0 / mass)
