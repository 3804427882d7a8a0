"""`lab` command line: experiments, exponent tables and verification runs.

Exit codes: 0 success, 1 verification failure, 2 capacity or configuration
error.
"""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import arith, detmat, experiments, mainterm, sl2, sums
from .errors import CapacityError, ConfigError
from .weights import make_weight


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_run(args) -> int:
    cfg = experiments.parse_config(Path(args.config).read_text())
    report = experiments.run_experiment(cfg)
    _write(args.out, report.to_csv())
    if args.out not in (None, "-"):
        slope = ("none (too few usable points)"
                 if report.fitted_slope is None
                 else f"{report.fitted_slope:.4f}")
        print(f"fitted slope: {slope}")
        print(f"predicted exponent (case a): {report.predicted_exponent} "
              f"= {float(report.predicted_exponent):.5f}")
        if report.dropped:
            print(f"dropped {len(report.dropped)} points with |R| below "
                  f"tolerance: {report.dropped}")
    return 0


def cmd_exponents(args) -> int:
    tab = experiments.exponent_calculator(
        Fraction(args.delta), Fraction(args.theta), Fraction(args.h_exp))
    print(f"delta = {tab.delta}, theta = {tab.theta}, "
          f"|h| = x^{tab.h_exponent}")
    print(f"uniform bound exponent:      {tab.uniform_exponent} "
          f"= {float(tab.uniform_exponent):.6f}")
    print(f"h-range case (a) for a <= {tab.range_a_threshold}: "
          f"{tab.case_a_exponent} = {float(tab.case_a_exponent):.6f}")
    print(f"h-range case (b) for a <= {tab.range_b_threshold}: "
          f"{tab.case_b_exponent} = {float(tab.case_b_exponent):.6f}")
    print(f"h-range case (c) otherwise:  {tab.case_c_exponent} "
          f"= {float(tab.case_c_exponent):.6f}")
    print(f"applicable case: ({tab.applicable}), exponent "
          f"{tab.applicable_exponent} "
          f"= {float(tab.applicable_exponent):.6f}")
    print(f"delta = 1/16 specialization: (a) {tab.small_delta_a}, "
          f"(b) {tab.small_delta_b}")
    print(f"case (b) nontrivial for h exponent < {tab.small_b_h_threshold}")
    for name, flag in tab.nontrivial.items():
        print(f"nontrivial[{name}] = {flag}")
    return 0


def cmd_verify_all(args) -> int:
    summary = experiments.verify_all(seed=args.seed)
    for line in summary.lines():
        print(line)
    return 0 if summary.ok else 1


def cmd_verify_cosets(args) -> int:
    from . import oracles

    rows = ["q1,q2,cosets,pair_count,orbit_count,psi_product,match"]
    ok = True
    for q1 in range(1, args.qmax + 1):
        for q2 in range(1, args.qmax + 1):
            labels = sl2.coset_list(q1, q2)
            orbit = oracles.sl2_orbit_count(q1, q2)
            psi = (sl2.psi_index(q1) * sl2.psi_index(q2)
                   if math.gcd(q1, q2) == 1 else "")
            match = len(labels) == orbit and all(
                sl2.coset_of(sl2.lift_coset(lab), q1, q2) == lab
                for lab in labels)
            if psi != "":
                match = match and len(labels) == psi
            ok &= match
            rows.append(f"{q1},{q2},{len(labels)},{len(labels)},{orbit},"
                        f"{psi},{match}")
    _write(args.out, "\n".join(rows) + "\n")
    return 0 if ok else 1


def cmd_verify_ksum(args) -> int:
    rows = ["kind,r1,r2,param,measured,envelope,ratio"]
    ok = True
    squarefree = [r for r in range(1, args.rmax + 1) if arith.is_squarefree(r)]
    for r1 in squarefree:
        for r2 in squarefree:
            w = sl2.AutoWeight(r1, r2)
            tab = sl2.CosetTable.build(r2, r1)
            r0 = w.r0
            b_val = sl2.ksum_b(w, args.bmax, tab)
            b_env = 8 * r0**2 * (args.bmax + 1)
            ok &= b_val <= b_env
            rows.append(f"b,{r1},{r2},{args.bmax},{b_val},{b_env},"
                        f"{b_val / b_env:.4f}")
            c_val = sl2.ksum_c(w, args.cmax, tab)
            c_env = 8 * (r0**2 * args.cmax / (w.rt1 * w.rt2) + r0**2)
            ok &= c_val <= c_env
            rows.append(f"c,{r1},{r2},{args.cmax},{c_val},{c_env},"
                        f"{c_val / c_env:.4f}")
            s_val = sl2.ksum_sigma_sup(w, samples=args.samples,
                                       seed=args.seed, table=tab)
            s_env = 8 * r0**2
            ok &= s_val <= s_env
            rows.append(f"sup,{r1},{r2},{args.samples},{s_val},{s_env},"
                        f"{s_val / s_env:.4f}")
    _write(args.out, "\n".join(rows) + "\n")
    return 0 if ok else 1


def cmd_verify_detmat(args) -> int:
    inst = detmat.DetInstance(args.r1, args.r2, args.h)
    if math.gcd(abs(args.h), args.r1 * args.r2) == 1:
        nd, nm, eq = detmat.correspondence_check(inst, args.x)
        print(f"direct = {nd}, matrix = {nm}, equal = {eq}")
        return 0 if eq else 1
    nd = detmat.direct_count(inst, args.x)
    branches = detmat.split_by_gcd(inst)
    nm = sum(detmat.matrix_count(b, args.x) for b in branches)
    print(f"direct = {nd}, matrix via {len(branches)} split branches = {nm},"
          f" equal = {nd == nm}")
    return 0 if nd == nm else 1


def cmd_verify_partition(args) -> int:
    from .experiments import _simplex_grid

    delta = Fraction(args.delta)
    rows = ["resolution,k,delta,vectors,violations"]
    violations = 0
    count = 0
    for alphas in _simplex_grid(args.grid_resolution, args.kmax):
        count += 1
        try:
            sums.classify_partition(alphas, delta)
        except Exception:
            violations += 1
    rows.append(f"{args.grid_resolution},{args.kmax},{delta},{count},"
                f"{violations}")
    _write(args.out, "\n".join(rows) + "\n")
    return 0 if violations == 0 else 1


def cmd_mainterm(args) -> int:
    w = make_weight(args.weight)
    tables = (mainterm.MainTermTables.build(args.k, args.h,
                                            int(math.ceil(2 * args.x)))
              if args.k >= 2 else None)
    val = mainterm.main_term(args.k, args.h, args.x, w, tables)
    print(f"M({args.x:g}) = {val!r}")
    if tables is not None:
        for key, v in mainterm.truncation_diagnostics(tables,
                                                      args.x).items():
            print(f"  {key} = {v}")
    return 0


def cmd_sum(args) -> int:
    w = make_weight(args.weight)
    q = sums.ConvolutionQuery(args.k, args.h, args.x, w)
    print(repr(sums.direct_sum(q)))
    return 0


def cmd_certain_sum(args) -> int:
    w = make_weight(args.weight)
    q = sums.CertainQuery(args.r1, args.r2, args.h, args.x, w, w)
    print(repr(sums.certain_sum(q)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lab",
        description="Experiments and exact verification for smoothed "
                    "shifted divisor convolutions.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="-", help="CSV destination ('-' stdout)")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("exponents", help="exact error-exponent tables")
    p.add_argument("--delta", default="1/16")
    p.add_argument("--theta", default="7/64")
    p.add_argument("--h-exp", default="0")
    p.set_defaults(fn=cmd_exponents)

    p = sub.add_parser("verify-all", help="run every verification suite")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_verify_all)

    p = sub.add_parser("verify-cosets", help="coset bijection checks (CSV)")
    p.add_argument("--qmax", type=int, default=5)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_verify_cosets)

    p = sub.add_parser("verify-ksum", help="K-sum bound envelopes (CSV)")
    p.add_argument("--rmax", type=int, default=6)
    p.add_argument("--bmax", type=int, default=16)
    p.add_argument("--cmax", type=int, default=16)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_verify_ksum)

    p = sub.add_parser("verify-detmat",
                       help="determinant-equation correspondence")
    p.add_argument("--r1", type=int, required=True)
    p.add_argument("--r2", type=int, required=True)
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--x", type=float, required=True)
    p.set_defaults(fn=cmd_verify_detmat)

    p = sub.add_parser("verify-partition",
                       help="exhaustive case-classifier grid")
    p.add_argument("--grid-resolution", type=int, default=48)
    p.add_argument("--kmax", type=int, default=5)
    p.add_argument("--delta", default="1/16")
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_verify_partition)

    p = sub.add_parser("mainterm", help="evaluate the predicted main term")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--weight", default="mollifier")
    p.set_defaults(fn=cmd_mainterm)

    p = sub.add_parser("sum", help="direct weighted convolution sum")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--weight", default="mollifier")
    p.set_defaults(fn=cmd_sum)

    p = sub.add_parser("certain-sum", help="paired shifted divisor sum")
    p.add_argument("--r1", type=int, required=True)
    p.add_argument("--r2", type=int, required=True)
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--weight", default="mollifier")
    p.set_defaults(fn=cmd_certain_sum)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CapacityError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
