"""Command-line front end.

Exit statuses: 0 success (or certified), 2 solved but not certified,
1 solver failure or unusable input.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from geqnewton import __version__, avi, driver, files, geqn, majorant
from geqnewton.errors import GeqnError, NoCertificateError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_UNCERTIFIED = 2


def _err(msg):
    print(f"geqnewton: {msg}", file=sys.stderr)


def _options(parsed, args):
    opts = parsed.options
    overrides = {}
    for attr, name in (("tol_res", "tol_residual"), ("tol_step", "tol_step"), ("max_iter", "max_iter")):
        val = getattr(args, attr, None)
        if val is not None:
            overrides[name] = val
    return replace(opts, **overrides) if overrides else opts


def _print_history(history, out):
    out.write(f"{'k':>4}  {'||step||':>24}  {'residual':>24}  {'pivots':>6}\n")
    for k, res in enumerate(history.residuals):
        if k == 0:
            out.write(f"{k:>4}  {'':>24}  {files.fmt_float(res):>24}  {'':>6}\n")
        else:
            out.write(f"{k:>4}  {files.fmt_float(history.steps[k - 1]):>24}  "
                      f"{files.fmt_float(res):>24}  {history.sub_stats[k - 1].pivots:>6}\n")
    out.write(f"outcome: {history.outcome.value}")
    out.write(f" ({history.message})\n" if history.message else "\n")


def _solve(args):
    parsed = files.parse_problem(args.problem)
    history = driver.josephy_newton(parsed.problem, _options(parsed, args))
    _print_history(history, sys.stdout)
    out = Path(args.out)
    files.atomic_write(out / f"{Path(args.problem).stem}_history.csv", files.history_csv(history))
    return parsed, history


def cmd_solve(args):
    _, history = _solve(args)
    if history.outcome is not driver.Outcome.CONVERGED:
        _err(f"solver stopped with {history.outcome.value}")
        return EXIT_FAILURE
    return EXIT_OK


def cmd_certify(args):
    parsed, history = _solve(args)
    if history.outcome is not driver.Outcome.CONVERGED:
        _err(f"solver stopped with {history.outcome.value}; no certificate attempted")
        return EXIT_FAILURE
    if parsed.psi is None:
        _err("problem file has no 'majorant' block")
        return EXIT_FAILURE
    check = geqn.verify_majorant_condition(parsed.problem, parsed.psi, samples=args.samples, seed=args.seed)
    try:
        cert = driver.certify(history, parsed.problem, parsed.psi, majorant_check=check)
    except NoCertificateError as exc:
        _err(f"no certificate: {exc}")
        return EXIT_UNCERTIFIED
    report = files.certificate_dict(cert, history, parsed.psi, source=Path(args.problem).name)
    files.atomic_write(Path(args.out) / f"{Path(args.problem).stem}_certificate.json", files.to_json(report) + "\n")
    print(f"t* = {files.fmt_float(cert.t_star)}  b = ||x1-x0|| = {files.fmt_float(cert.b)}  "
          f"psi(0) = {files.fmt_float(cert.psi0)}")
    print(f"{'k':>4}  {'t_k':>24}  {'t*-t_k':>24}  {'||x^-x_k|| (proxy)':>24}  ok")
    for k, tk in enumerate(cert.t_aligned):
        ok = cert.terminal_bound_ok[k] and (k == len(cert.step_bound_ok) or cert.step_bound_ok[k])
        print(f"{k:>4}  {files.fmt_float(tk):>24}  {files.fmt_float(cert.error_envelope[k]):>24}  "
              f"{files.fmt_float(cert.terminal_errors[k]):>24}  {'yes' if ok else 'NO'}")
    print(f"majorant condition sampled: {check.passed}/{check.samples} passed")
    print(f"certified: {'yes' if cert.ok else 'no'}")
    return EXIT_OK if cert.ok else EXIT_UNCERTIFIED


def cmd_scalar(args):
    try:
        if args.kind == majorant.LIPSCHITZ:
            if args.K is None:
                raise GeqnError("--kind lipschitz requires --K")
            psi = majorant.make_lipschitz(args.K, args.b, args.lam)
        else:
            if args.gamma is None:
                raise GeqnError("--kind smale requires --gamma")
            psi = majorant.make_smale(args.gamma, args.b, args.lam)
    except GeqnError as exc:
        _err(str(exc))
        return EXIT_FAILURE
    report = majorant.check_conditions(psi)
    print(f"kind: {psi.kind}  b = {files.fmt_float(psi.b)}  lambda = {files.fmt_float(psi.lam)}  "
          f"R = {files.fmt_float(psi.domain_r)}")
    for h in ("h1", "h2", "h3", "h4"):
        print(f"{h}: {'true ' if getattr(report, h) else 'false'}  {report.diagnostics.get(h, '')}")
    if not report.h3:
        print(f"{majorant.kantorovich_condition(psi)} violated")
        _err(f"{majorant.kantorovich_condition(psi)} violated")
        return EXIT_UNCERTIFIED
    trace = majorant.scalar_sequence(psi, max_iter=args.max_iter, tol=args.tol)
    rates = majorant.rate_constants(psi)
    print(f"t* = {files.fmt_float(trace.t_star)}")
    print(f"{'k':>4}  {'t_k':>24}  {'t*-t_k':>24}")
    for k, tk in enumerate(trace.t):
        print(f"{k:>4}  {files.fmt_float(tk):>24}  {files.fmt_float(trace.t_star - tk):>24}")
    print(f"linear rate: {files.fmt_float(rates.linear)}")
    quad = "absent (h4 fails)" if rates.quadratic is None else files.fmt_float(rates.quadratic)
    print(f"quadratic rate constant: {quad}")
    return EXIT_OK


def cmd_lcp(args):
    M, q = files.parse_lcp(args.lcp)
    sol = avi.lemke(M, q, args.max_pivots)
    print("z = [" + ", ".join(files.fmt_float(v) for v in sol.y) + "]")
    print("w = [" + ", ".join(files.fmt_float(v) for v in sol.w) + "]")
    print(f"status: {sol.status.value}  pivots: {sol.pivots}  "
          f"complementarity residual: {files.fmt_float(sol.complementarity_residual)}")
    return EXIT_OK if sol.solved else EXIT_FAILURE


def build_parser():
    parser = argparse.ArgumentParser(prog="geqnewton", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def solve_flags(p):
        p.add_argument("problem", help="problem JSON file")
        p.add_argument("--out", default=".", help="directory for report files (default: .)")
        p.add_argument("--tol-res", dest="tol_res", type=float)
        p.add_argument("--tol-step", dest="tol_step", type=float)
        p.add_argument("--max-iter", dest="max_iter", type=int)

    p = sub.add_parser("solve", help="run the Josephy-Newton iteration")
    solve_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="solve, then certify the iterates against the majorant envelope")
    solve_flags(p)
    p.add_argument("--seed", type=int, default=0, help="seed of the majorant-condition sampler")
    p.add_argument("--samples", type=int, default=2048)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("scalar", help="analyse a preset majorant function")
    p.add_argument("--kind", choices=[majorant.LIPSCHITZ, majorant.SMALE], required=True)
    p.add_argument("--K", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_scalar)

    p = sub.add_parser("lcp", help="solve one LCP with Lemke's method")
    p.add_argument("lcp", help="JSON file with 'M' and 'q'")
    p.add_argument("--max-pivots", dest="max_pivots", type=int)
    p.set_defaults(func=cmd_lcp)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GeqnError as exc:
        _err(str(exc))
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
