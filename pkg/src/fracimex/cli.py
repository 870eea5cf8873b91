"""Command line entry point: ``fracimex <command> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from contextlib import contextmanager

import numpy as np

from .corrections import ExponentSequence, starting_weights
from .errors import ConfigError, DomainError
from .harness import (
    ReferencePolicy,
    compare_schemes,
    convergence_study,
    parse_step,
    rows_to_dicts,
    write_rows_csv,
    write_study_json,
    NORM_NOTE,
)
from .model import load_problem
from .schemes import BootstrapMode, Scheme, SchemeConfig, solve
from .stability import boundary_locus
from .weights import GenKind, flmm_weights

SAMPLE_ROWS = (1, 2, 5, 10, 50, 100)


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _float_list(text: str) -> list[float]:
    return [parse_step(s) for s in text.split(",") if s.strip()]


def _counts(args) -> dict:
    m = args.m
    return {
        "m_u": m if args.mu is None else args.mu,
        "m_f": m if args.mf is None else args.mf,
        "mt_f": m if args.mtf is None else args.mtf,
        "mt_u": m if args.mtu is None else args.mtu,
    }


def _problem(args):
    problem = load_problem(args.problem, args.beta, args.alpha)
    if args.T is not None:
        problem = problem.with_horizon(args.T)
    return problem


def cmd_weights(args) -> int:
    w = flmm_weights(GenKind(args.kind), args.beta, args.count)
    with _output(args.out) as fh:
        out = csv.writer(fh)
        out.writerow(["j", "omega"])
        for j, v in enumerate(w.omega):
            out.writerow([j, repr(float(v))])
    return 0


def cmd_diagnose(args) -> int:
    exps = ExponentSequence.from_unsorted(_float_list(args.exponents))
    m = len(exps) if args.m is None else args.m
    n_max = args.n_max
    omega = flmm_weights(GenKind(args.kind), args.beta, n_max)
    table = starting_weights(omega, args.beta, exps, m, n_max)
    rows = [n for n in SAMPLE_ROWS if n <= n_max]
    payload = {
        "beta": args.beta,
        "exponents": list(table.exponents),
        "m": table.m,
        "cond": table.cond,
        "cond2": table.cond2,
        "residual": table.residual,
        "sample_rows": [{"n": n, "W": table.W[n].tolist(), "B": float(table.B[n])} for n in rows],
    }
    with _output(args.out) as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return 0


def cmd_solve(args) -> int:
    problem = _problem(args)
    cfg = SchemeConfig(
        scheme=Scheme(args.scheme),
        h=parse_step(args.h),
        bootstrap=BootstrapMode(args.bootstrap),
        exact_forcing=args.exact_forcing,
        **_counts(args),
    )
    traj = solve(problem, cfg)
    with _output(args.out) as fh:
        out = csv.writer(fh)
        out.writerow(["n", "t"] + [f"u_{i + 1}" for i in range(problem.dim)])
        for n, u in enumerate(traj.U):
            vals = np.real_if_close(u)
            out.writerow([n, repr(float(traj.t[n]))] + [repr(complex(x) if np.iscomplexobj(vals) else float(x)) for x in vals])
    if not traj.ok:
        print(f"run failed: {traj.status.value} at step {traj.fail_step}", file=sys.stderr)
        return 3
    return 0


def _write_table(path, problem, scheme, rows):
    if path and path.endswith(".json"):
        write_study_json(problem, scheme, rows, path)
    else:
        with _output(path) as fh:
            write_rows_csv(rows, fh)


def cmd_converge(args) -> int:
    problem = _problem(args)
    rows = convergence_study(
        problem,
        Scheme(args.scheme),
        _float_list(args.h_list),
        _counts(args),
        BootstrapMode(args.bootstrap),
        ReferencePolicy.parse(args.ref),
        exact_forcing=args.exact_forcing,
    )
    _write_table(args.out, problem.name, args.scheme, rows)
    return 0


def cmd_compare(args) -> int:
    problem = _problem(args)
    schemes = [Scheme(s.strip()) for s in args.schemes.split(",") if s.strip()]
    table = compare_schemes(
        problem,
        schemes,
        _float_list(args.h_list),
        _counts(args),
        BootstrapMode(args.bootstrap),
        ReferencePolicy.parse(args.ref),
        exact_forcing=args.exact_forcing,
    )
    if args.out and args.out.endswith(".json"):
        payload = {
            "problem": table.problem,
            "norm": NORM_NOTE,
            "schemes": {s.value: rows_to_dicts(r) for s, r in table.rows.items()},
        }
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
        return 0
    with _output(args.out) as fh:
        for i, (s, rows) in enumerate(table.rows.items()):
            buf = io.StringIO()
            write_rows_csv(rows, buf, scheme=s.value)
            lines = buf.getvalue().splitlines(keepends=True)
            fh.writelines(lines if i == 0 else lines[1:])
    return 0


def cmd_stability(args) -> int:
    locus = boundary_locus(Scheme(args.scheme), args.beta, args.k_ratio, args.points)
    with _output(args.out) as fh:
        out = csv.writer(fh)
        out.writerow(["theta", "re_xi", "im_xi"])
        for th, xi in zip(locus.theta, locus.points):
            out.writerow([repr(float(th)), repr(float(xi.real)), repr(float(xi.imag))])
    return 0


def _run_flags(p: argparse.ArgumentParser, with_scheme: bool = True) -> None:
    p.add_argument("--problem", required=True, help="built-in id or JSON problem file")
    if with_scheme:
        p.add_argument("--scheme", required=True, choices=[s.value for s in Scheme])
    p.add_argument("--beta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--mu", type=int)
    p.add_argument("--mf", type=int)
    p.add_argument("--mtf", type=int)
    p.add_argument("--mtu", type=int)
    p.add_argument("--bootstrap", default="exact", choices=[b.value for b in BootstrapMode])
    p.add_argument("--T", type=float)
    p.add_argument("--exact-forcing", action="store_true", help="integrate power-sum forcing in closed form")
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracimex", description="IMEX solvers for Caputo fractional ODEs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="convolution weights as CSV")
    p.add_argument("--kind", default="lubich2", choices=[k.value for k in GenKind])
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("diagnose-weights", help="starting-weight conditioning as JSON")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--exponents", required=True, help="comma separated")
    p.add_argument("--m", type=int)
    p.add_argument("--n-max", type=int, default=100)
    p.add_argument("--kind", default="lubich2", choices=[k.value for k in GenKind])
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("solve", help="run one scheme, trajectory as CSV")
    _run_flags(p)
    p.add_argument("--h", required=True, help="step, e.g. 2^-8")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("converge", help="convergence table for one scheme")
    _run_flags(p)
    p.add_argument("--h-list", required=True, help="e.g. 2^-5,2^-6,2^-7")
    p.add_argument("--ref", default="exact", help="exact | fine | fine:2^-15")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("compare", help="convergence tables for several schemes")
    _run_flags(p, with_scheme=False)
    p.add_argument("--schemes", required=True, help="comma separated scheme ids")
    p.add_argument("--h-list", required=True)
    p.add_argument("--ref", default="exact")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("stability", help="boundary locus as CSV")
    p.add_argument("--scheme", required=True, choices=["imex-e", "imex-t"])
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--k-ratio", type=float, default=0.0)
    p.add_argument("--points", type=int, default=1024)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stability)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
