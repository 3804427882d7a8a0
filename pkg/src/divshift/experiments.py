"""End-to-end experiments: direct sum S(x), predicted main term M(x),
remainder R = S - M over a geometric grid, empirical error-exponent fits,
and the exact exponent tables.

Everything is deterministic for a fixed configuration: sieve tables are
immutable, per-point reductions are numpy pairwise sums, thread pools only
distribute whole grid points and collect them in order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import arith, detmat, mainterm, oracles, sl2, sums
from .errors import ConfigError, LemmaViolationError
from .weights import make_weight

THETA_KIM_SARNAK = Fraction(7, 64)

# Measured ceiling for twisted-K-sum / envelope over the acceptance grid
# (the literature's bound hides radius-and-multiplicity constants; the
# artifact records an explicit one and fails on regression past it).
TWISTED_RECORDED_CONSTANT = 40.0


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    k: int = 1
    h: int = 1
    x_min: float = 1e4
    x_max: float = 1e7
    grid_points: int = 8
    weight: str = "mollifier"
    delta: Fraction = Fraction(1, 16)
    theta: Fraction = THETA_KIM_SARNAK
    seed: int = 0
    threads: int = 1

    def validate(self) -> None:
        if self.k < 1 or self.k > 4:
            raise ConfigError("k must lie in 1..4")
        if self.h == 0:
            raise ConfigError("shift h must be nonzero")
        if self.x_min < 1e3:
            raise ConfigError("x_min must be at least 10^3")
        if self.grid_points < 6:
            raise ConfigError("need at least 6 grid points")
        if math.log10(self.x_max / self.x_min) < 1.5:
            raise ConfigError("grid must span at least 1.5 decades")
        if self.ratio < 1.3:
            raise ConfigError("geometric ratio must be at least 1.3 "
                              "(reduce grid_points or widen the range)")
        if not 0 < self.delta <= Fraction(1, 16):
            raise ConfigError("delta must lie in (0, 1/16]")
        if not 0 <= self.theta <= THETA_KIM_SARNAK:
            raise ConfigError("theta must lie in [0, 7/64]")
        if self.x_min / 2 + self.h <= 0:
            raise ConfigError("shift makes n + h <= 0 inside a window")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        make_weight(self.weight)  # raises on unknown shape

    @property
    def ratio(self) -> float:
        return (self.x_max / self.x_min) ** (1.0 / (self.grid_points - 1))

    def grid(self) -> list[float]:
        # last point pinned to x_max exactly (the power form can overshoot
        # by an ulp, which would outrun tables sized from x_max)
        pts = [self.x_min * self.ratio**i
               for i in range(self.grid_points - 1)]
        return pts + [float(self.x_max)]


def parse_config(text: str) -> ExperimentConfig:
    """Simple key = value format; '#' starts a comment.  Fractions may be
    written a/b, strings bare or quoted."""
    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, val = line.partition("=")
        raw[key.strip()] = _parse_value(val.strip())
    fields_ = ExperimentConfig.__dataclass_fields__
    unknown = set(raw) - set(fields_)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    coerced = {}
    for key, val in raw.items():
        want = fields_[key].type
        if want == "int":
            coerced[key] = int(val)
        elif want == "float":
            coerced[key] = float(val)
        elif want == "Fraction":
            coerced[key] = val if isinstance(val, Fraction) \
                else Fraction(str(val))
        else:
            coerced[key] = str(val)
    cfg = ExperimentConfig(**coerced)
    cfg.validate()
    return cfg


def _parse_value(tok: str):
    if tok.startswith('"') and tok.endswith('"') and len(tok) >= 2:
        return tok[1:-1]
    try:
        return int(tok)
    except ValueError:
        pass
    if "/" in tok:
        try:
            return Fraction(tok)
        except ValueError:
            pass
    try:
        return float(tok)
    except ValueError:
        return tok


# ---------------------------------------------------------------------------
# Exponent tables (exact rationals)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentTable:
    """Every displayed error exponent, as exact rationals.

    ``h_exponent`` is the a in |h| = x^a.  Field ``applicable`` names which
    h-range case of the range-split bound applies at a, and
    ``applicable_exponent`` is that case's exponent (including its |h|^...
    contribution).  ``nontrivial`` flags exponents < 1.
    """

    delta: Fraction
    theta: Fraction
    h_exponent: Fraction
    uniform_exponent: Fraction
    range_a_threshold: Fraction
    range_b_threshold: Fraction
    case_a_exponent: Fraction
    case_b_exponent: Fraction
    case_c_exponent: Fraction
    applicable: str
    applicable_exponent: Fraction
    small_delta_a: Fraction
    small_delta_b: Fraction
    small_b_h_threshold: Fraction | None
    headline_coefficient: Fraction = Fraction(7, 128)

    @property
    def nontrivial(self) -> dict:
        return {
            "uniform": self.uniform_exponent < 1,
            "applicable": self.applicable_exponent < 1,
            "small_delta_a": self.small_delta_a < 1,
            "small_delta_b": self.small_delta_b < 1,
        }


def headline_exponent(eta: Fraction) -> Fraction:
    """Error exponent 1 - 7 eta/128 for shifts |h| <= x^(25/28 - eta)."""
    return 1 - Fraction(7, 128) * Fraction(eta)


def exponent_calculator(delta, theta, h_exponent=0) -> ExponentTable:
    d = Fraction(delta)
    t = Fraction(theta)
    a = Fraction(h_exponent)
    if not 0 <= d <= Fraction(1, 16):
        raise ConfigError("delta must lie in [0, 1/16]")
    if not 0 <= t < Fraction(1, 2):
        raise ConfigError("theta must lie in [0, 1/2)")
    if not 0 <= a < 1:
        raise ConfigError("h exponent must lie in [0, 1)")

    # two-piece uniform bound, h-dependence folded in at |h| = x^a
    piece1 = 1 - d + 2 * d * t + max(Fraction(0),
                                     a / 4 - (Fraction(1, 4) - d / 2))
    piece2 = (1 - d + t / 3 + 2 * d * t / 3
              + max(Fraction(0), a * t / 2 - (t / 6 + 4 * d * t / 3)))
    uniform = max(piece1, piece2)

    case_a = 1 - d + (1 + 2 * d) * t / 3
    case_b = 1 - d + (1 - 4 * d) * t / 6 + a * t / 2
    case_c = Fraction(3, 4) - d / 2 + 2 * d * t + a / 4
    a1 = Fraction(1, 3) + 8 * d * t / 3
    a2 = (1 - 2 * d + 2 * (1 - 16 * d) * t / 3) / (1 - 2 * t)
    if a <= a1:
        applicable, app_exp = "a", case_a
    elif a <= min(a2, Fraction(1)):
        applicable, app_exp = "b", case_b
    else:
        applicable, app_exp = "c", case_c

    d16 = Fraction(1, 16)
    small_a = 1 - d16 + (1 + 2 * d16) * t / 3      # = 15/16 + 3 theta/8
    small_b = 1 - d16 + (1 - 4 * d16) * t / 6 + a * t / 2
    threshold = None if t == 0 else Fraction(1) / (8 * t) - Fraction(1, 4)

    return ExponentTable(
        delta=d, theta=t, h_exponent=a, uniform_exponent=uniform,
        range_a_threshold=a1, range_b_threshold=a2,
        case_a_exponent=case_a, case_b_exponent=case_b,
        case_c_exponent=case_c, applicable=applicable,
        applicable_exponent=app_exp, small_delta_a=small_a,
        small_delta_b=small_b, small_b_h_threshold=threshold,
    )


# ---------------------------------------------------------------------------
# The experiment runner
# ---------------------------------------------------------------------------

@dataclass
class ErrorReport:
    config: ExperimentConfig
    rows: list  # (x, S, M, R, absR)
    fitted_slope: float | None
    dropped: list
    predicted_exponent: Fraction

    def to_csv(self) -> str:
        lines = ["x,S,M,R,absR"]
        for x, s, m, r, ar in self.rows:
            lines.append(",".join(repr(float(v)) for v in (x, s, m, r, ar)))
        return "\n".join(lines) + "\n"


def fit_slope(xs, ys) -> float:
    """OLS slope of log ys against log xs."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    lx = lx - lx.mean()
    return float(np.sum(lx * ly) / np.sum(lx * lx))


def run_experiment(cfg: ExperimentConfig,
                   _tables: dict | None = None) -> ErrorReport:
    """Compute (S, M, R) over the grid and fit the error-exponent slope.

    ``_tables`` lets callers reuse sieve tables across configurations that
    share (k, h, x_max); contents are treated as immutable.
    """
    cfg.validate()
    w = make_weight(cfg.weight)
    top = int(math.ceil(cfg.x_max))
    tabs = _tables if _tables is not None else {}
    if "dk" not in tabs:
        tabs["dk"] = arith.sieve_dk(cfg.k, top)
    if "d2" not in tabs:
        tabs["d2"] = arith.sieve_dk(2, top + max(cfg.h, 0))
    if "mt" not in tabs:
        tabs["mt"] = (mainterm.MainTermTables.build(cfg.k, cfg.h, 2 * top + 1)
                      if cfg.k >= 2 else None)

    def point(x: float):
        q = sums.ConvolutionQuery(cfg.k, cfg.h, x, w)
        s_val = sums.direct_sum(q, tabs["dk"], tabs["d2"])
        m_val = mainterm.main_term(cfg.k, cfg.h, x, w, tabs["mt"])
        r = s_val - m_val
        return (x, s_val, m_val, r, abs(r))

    grid = cfg.grid()
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(point, grid))
    else:
        rows = [point(x) for x in grid]

    drop_tol = [1e-9 * max(abs(m), 1.0) for (_, _, m, _, _) in rows]
    kept = [(x, ar) for (x, _, _, _, ar), tol in zip(rows, drop_tol)
            if ar > tol]
    dropped = [x for (x, _, _, _, ar), tol in zip(rows, drop_tol)
               if ar <= tol]
    slope = fit_slope(*zip(*kept)) if len(kept) >= 2 else None
    predicted = exponent_calculator(cfg.delta, cfg.theta).case_a_exponent
    return ErrorReport(cfg, rows, slope, dropped, predicted)


# ---------------------------------------------------------------------------
# verify-all: one pass/fail line per check, with measured constants
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: str


@dataclass
class VerifySummary:
    results: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        return [f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.measured}"
                for r in self.results]


def verify_all(seed: int = 0, overrides: dict | None = None) -> VerifySummary:
    """Fast end-to-end verification sweep: oracle equivalences, bound
    envelopes, the partition grid, coset bijections and correspondence
    checks.  ``overrides`` swaps named primitives (fault injection for
    the harness's own tests)."""
    ov = overrides or {}
    rs = ov.get("ramanujan_sum", arith.ramanujan_sum)
    summary = VerifySummary()
    add = summary.results.append

    # sieve vs brute-force convolution
    limit = 800
    worst = 0
    ok = True
    for k in range(1, 6):
        table = arith.sieve_dk(k, limit)
        brute = oracles.dk_bruteforce(k, limit)
        diff = int(np.abs(table.values[1:] - np.array(brute[1:])).max())
        worst = max(worst, diff)
        ok &= diff == 0
    add(CheckResult("sieve-dk-oracle", ok, f"max |diff| = {worst}, "
                    f"k <= 5, N = {limit}"))

    # ramanujan closed form vs exponential sum
    ok = True
    worst_im = 0.0
    for d in range(1, 61):
        for h in range(-15, 16):
            z = oracles.ramanujan_exp_sum(d, h)
            worst_im = max(worst_im, abs(z.imag))
            if round(z.real) != rs(d, h):
                ok = False
    add(CheckResult("ramanujan-oracle", ok,
                    f"d <= 60, |h| <= 15, max imag = {worst_im:.2e}"))

    # coset bijection and lift round-trip
    ok = True
    for q1 in range(1, 5):
        for q2 in range(1, 5):
            labels = sl2.coset_list(q1, q2)
            ok &= len(labels) == oracles.sl2_orbit_count(q1, q2)
            ok &= all(sl2.coset_of(sl2.lift_coset(lab), q1, q2) == lab
                      for lab in labels)
    for q1, q2 in ((3, 4), (5, 8), (7, 9)):
        ok &= (len(sl2.coset_list(q1, q2))
               == sl2.psi_index(q1) * sl2.psi_index(q2))
    add(CheckResult("coset-bijection", ok, "orbit counts + lifts, q <= 4; "
                    "psi(q1)psi(q2) spot checks"))

    # unipotent K-sum envelopes (constant 8), sup envelope (constant 8)
    ok = True
    worst_ratio = 0.0
    for r1 in (1, 2, 3, 5, 6):
        for r2 in (1, 2, 3, 5, 6):
            wgt = sl2.AutoWeight(r1, r2)
            tab = sl2.CosetTable.build(r2, r1)
            r0 = wgt.r0
            bsum = sl2.ksum_b(wgt, 16, tab)
            csum = sl2.ksum_c(wgt, 16, tab)
            sup = sl2.ksum_sigma_sup(wgt, samples=60, seed=seed, table=tab)
            ok &= bsum <= 8 * r0**2 * 17
            ok &= csum <= 8 * (r0**2 * 16 / (wgt.rt1 * wgt.rt2) + r0**2)
            ok &= sup <= 8 * r0**2
            worst_ratio = max(worst_ratio, sup / r0**2)
    add(CheckResult("ksum-envelopes", ok,
                    f"constant 8; measured sup/r0^2 max = {worst_ratio:.2f}"))

    # twisted K-sum with the recorded constant
    ok = True
    worst_ratio = 0.0
    for r1, r2 in ((1, 2), (3, 1), (2, 6), (6, 10)):
        wgt = sl2.AutoWeight(r1, r2, h=1, mode="alpha")
        kk = sl2.lemma_k(r1, r2)
        for ell in (0.5, 1.0, 2.0):
            val = sl2.twisted_ksum(wgt, ell=ell)
            ratio = val / sl2.twisted_envelope(wgt, kk, ell)
            worst_ratio = max(worst_ratio, ratio)
            ok &= ratio <= TWISTED_RECORDED_CONSTANT
    add(CheckResult("twisted-ksum-envelope", ok,
                    f"recorded constant {TWISTED_RECORDED_CONSTANT}; "
                    f"measured max ratio = {worst_ratio:.1f}"))

    # partition lemma on a coarse exact grid
    try:
        n_checked = 0
        for delta in (Fraction(1, 32), Fraction(1, 16)):
            for alphas in _simplex_grid(24, 4):
                sums.classify_partition(alphas, delta)
                n_checked += 1
        add(CheckResult("partition-grid", True,
                        f"{n_checked} vectors, resolution 1/24, k <= 4"))
    except LemmaViolationError as exc:
        add(CheckResult("partition-grid", False, str(exc)))

    # determinant correspondence
    rng = np.random.default_rng(seed)
    ok = True
    n_inst = 0
    while n_inst < 8:
        r1, r2 = int(rng.integers(1, 13)), int(rng.integers(1, 13))
        h = int(rng.integers(-8, 9))
        if h == 0 or r1 == r2:
            continue
        if not (arith.is_squarefree(r1) and arith.is_squarefree(r2)):
            continue
        if max(r1, r2) >= 2 * min(r1, r2):
            continue  # empty window
        if math.gcd(abs(h), r1 * r2) == 1:
            nd, nm, eq = detmat.correspondence_check(
                detmat.DetInstance(r1, r2, h), 2000)
            ok &= eq
            n_inst += 1
        else:
            inst = detmat.DetInstance(r1, r2, h)
            nd = detmat.direct_count(inst, 2000)
            parts = detmat.split_by_gcd(inst)
            nm = sum(detmat.matrix_count(b, 2000) for b in parts)
            ok &= nd == nm
            n_inst += 1
    add(CheckResult("detmat-correspondence", ok,
                    f"{n_inst} random instances at x = 2000, exact"))

    # Euler product vs direct sum (fast cutoffs)
    gap = abs(mainterm.dirichlet_direct(2, 1, 2.0, 10**5).value
              - mainterm.euler_product(2, 1, 2.0, 10**3))
    add(CheckResult("euler-vs-direct", gap < 1e-3,
                    f"|diff| = {gap:.2e} at N = 1e5, P = 1e3"))

    # g' finite differences
    ok = True
    worst = 0.0
    for m in range(2, 400):
        eps = 1e-4
        fd = -(mainterm.g_beta_eval(m, 5, 1 + eps)
               - mainterm.g_beta_eval(m, 5, 1 - eps)) / (2 * eps)
        worst = max(worst, abs(fd - mainterm.gprime_eval(m, 5)))
        ok &= worst < 1e-6
    add(CheckResult("gprime-fd", ok, f"max |diff| = {worst:.2e}, m < 400"))

    # exponent table exact values
    tab = exponent_calculator(Fraction(1, 16), THETA_KIM_SARNAK)
    ok = (tab.small_delta_a == Fraction(501, 512)
          and tab.small_delta_b == Fraction(487, 512)
          and tab.small_b_h_threshold == Fraction(25, 28)
          and headline_exponent(Fraction(1, 10))
          == 1 - Fraction(7, 1280))
    add(CheckResult("exponent-table", ok,
                    "501/512, 487/512, 25/28, 1 - 7 eta/128"))

    return summary


def _simplex_grid(resolution: int, kmax: int):
    """Sorted-descending rational vectors with denominators ``resolution``
    summing to one, at most kmax nonzero parts."""
    def partitions(total, parts, cap):
        if parts == 1:
            if total <= cap:
                yield (total,)
            return
        for first in range(min(total, cap), -(-total // parts) - 1, -1):
            for rest in partitions(total - first, parts - 1, first):
                yield (first,) + rest

    out = []
    for shape in partitions(resolution, kmax, resolution):
        out.append(tuple(Fraction(v, resolution) for v in shape))
    return out
