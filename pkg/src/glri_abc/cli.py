"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import abc_theory, fem1d, fem3d
from .errors import ABCError
from .specialfuncs import MAX_PADE_ORDER, pade_zeros

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

S_PRESETS = {"case0": 4.0 + 0.25j, "case1": 0.25 + 4.0j, "case2": 4.0j}


class UsageError(Exception):
    pass


def parse_complex(text: str) -> complex:
    """Parse "a", "a+bi", "a-bi" or "bi"."""
    t = text.strip().replace(" ", "")
    bad = argparse.ArgumentTypeError(f"not a complex literal of the form a+bi: {text!r}")
    if not t or "j" in t.lower():
        raise bad
    if t.endswith("i"):
        t = t[:-1]
        if t == "" or t[-1] in "+-":
            t += "1"
        t += "j"
    try:
        z = complex(t)
    except ValueError:
        raise bad from None
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise bad
    return z


def parse_s(text: str) -> complex:
    return S_PRESETS[text] if text in S_PRESETS else parse_complex(text)


def format_complex(z: complex, digits: int = 8, style: str = "f") -> str:
    """"a", "a+bi" or "a-bi" with ``digits`` after the point."""
    z = complex(z)
    if z.imag == 0:
        return f"{z.real:.{digits}{style}}"
    sign = "-" if z.imag < 0 else "+"
    return f"{z.real:.{digits}{style}}{sign}{abs(z.imag):.{digits}{style}}i"


def table_order(zeros) -> list:
    """Real roots first, then conjugate pairs by real part, minus before plus."""
    real = sorted(z for z in zeros if z.imag == 0)
    cplx = sorted((z for z in zeros if z.imag != 0), key=lambda z: (round(z.real, 12), z.imag))
    return [complex(z) for z in real] + cplx


def _check_n(n: int):
    if not 1 <= n <= MAX_PADE_ORDER:
        raise UsageError(f"--n must be in 1..{MAX_PADE_ORDER}")


def cmd_pade_zeros(args) -> int:
    _check_n(args.n)
    for z in table_order(pade_zeros(args.n)):
        print(format_complex(z))
    return EXIT_OK


def cmd_reflection_formula(args) -> int:
    _check_n(args.n)
    spec = abc_theory.LayerSpec.uniform(args.n, args.lmax, args.gamma1)
    R = abc_theory.reflection_abc(args.gamma, spec)
    print(f"R = {format_complex(R, 12, 'e')}")
    print(f"|R| = {abs(R):.12g}")
    return EXIT_OK


def cmd_reflection_map(args) -> int:
    _check_n(args.n)
    if args.nx < 1 or args.ny < 1:
        raise UsageError("--nx and --ny must be positive")
    grid = fem1d.Grid(nx=args.nx, ny=args.ny)
    rows = fem1d.reflection_map(args.n, args.gamma1, grid)
    if args.out:
        fem1d.write_reflection_csv(rows, args.out)
    else:
        for p in rows:
            print(f"{p.gamma.real:.10g},{p.gamma.imag:.10g},{abs(p.reflection):.10g}")
    ok = [p for p in rows if p.error is None and np.isfinite(abs(p.reflection))]
    failed = len(rows) - len(ok)
    if ok:
        best = min(ok, key=lambda p: abs(p.reflection))
        print(f"min |R| = {abs(best.reflection):.6e} at gamma = {format_complex(best.gamma, 6)}",
              file=sys.stderr if not args.out else sys.stdout)
    if failed > 0.01 * len(rows):
        print(f"error: {failed} of {len(rows)} grid points failed", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_solve1d(args) -> int:
    _check_n(args.n)
    if args.gamma is None:
        raise UsageError("solve1d needs --gamma")
    spec = abc_theory.LayerSpec.uniform(args.n, args.lmax, args.gamma1)
    right = fem1d.TRANSFORMED_SOMMERFELD if args.termination == "sommerfeld" else fem1d.DIRICHLET_ZERO
    sol = fem1d.solve_1d(fem1d.Mesh1D.layered(spec), args.gamma, args.n, 1.0, right)
    R = fem1d.extract_reflection(sol, 0, args.gamma)
    print(f"extracted R = {format_complex(R, 12, 'e')}")
    if right == fem1d.DIRICHLET_ZERO:
        print(f"formula   R = {format_complex(abc_theory.reflection_abc(args.gamma, spec), 12, 'e')}")
    print(f"impedance Z = {format_complex(fem1d.weak_flux_impedance(sol, 1, args.gamma), 12)}")
    return EXIT_OK


def cmd_converge3d(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if any(r < 1 for r in args.ref):
        raise UsageError("--ref must be >= 1")
    lmax = args.lmax if args.lmax is not None else 12 // args.n
    if lmax < 1:
        raise UsageError("--lmax must be >= 1")
    if lmax * args.n > 12 and not args.force:
        raise UsageError("lmax * n exceeds 12; pass --force to run anyway")
    columns, failed, side = {}, False, []
    for ref in args.ref:
        res = fem3d.convergence_study(args.s, args.n, ref, range(1, lmax + 1), solver=args.solver)
        columns[ref] = res.errors
        failed |= bool(res.failures)
        for L, msg in res.failures.items():
            print(f"error: {msg}", file=sys.stderr)
        side.append(f"# interpolation ref={ref}: {res.interpolation_error!r}")
    text = fem3d.format_dat(columns)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for line in side:
        print(line)
    return EXIT_NUMERIC if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="glri-abc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("pade-zeros", help="zeros of the [N/N] Pade approximant of exp(-z)")
    q.add_argument("--n", type=int, required=True)
    q.set_defaults(func=cmd_pade_zeros)

    q = sub.add_parser("reflection-formula", help="closed-form reflection of an (L,N) layer stack")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--gamma1", type=parse_complex, default=1.0)
    q.add_argument("--gamma", type=parse_complex, required=True)
    q.add_argument("--lmax", type=int, default=1, help="number of layers")
    q.set_defaults(func=cmd_reflection_formula)

    q = sub.add_parser("reflection-map", help="extracted |R| over a grid of gamma")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--gamma1", type=parse_complex, default=1.0)
    q.add_argument("--nx", type=int, default=9)
    q.add_argument("--ny", type=int, default=9)
    q.add_argument("--out")
    q.set_defaults(func=cmd_reflection_map)

    q = sub.add_parser("solve1d", help="solve one 1D layered problem and extract R")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--gamma1", type=parse_complex, default=1.0)
    q.add_argument("--gamma", type=parse_complex)
    q.add_argument("--lmax", type=int, default=1, help="number of layers")
    q.add_argument("--termination", choices=["dirichlet", "sommerfeld"], default="dirichlet")
    q.set_defaults(func=cmd_solve1d)

    q = sub.add_parser("converge3d", help="3D box-with-hole convergence study")
    q.add_argument("--s", type=parse_s, required=True, help="a+bi or case0|case1|case2")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--ref", type=int, nargs="+", default=[1])
    q.add_argument("--lmax", type=int)
    q.add_argument("--solver", choices=["direct", "gmres"])
    q.add_argument("--force", action="store_true")
    q.add_argument("--out")
    q.set_defaults(func=cmd_converge3d)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ABCError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
