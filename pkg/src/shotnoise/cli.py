"""Command-line front end.

Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 validation
rejection of a response or distribution.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np
from scipy import special

from . import distributions as dist
from . import engine, fixed_point, io, repro, response
from ._quad import QuadratureError
from .stats import ks_one_sample, ks_two_sample

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INVALID = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _model_flags(p, dist_required=True):
    p.add_argument("--dist", required=dist_required, help="distribution key, e.g. gamma:0.5,0.5")
    p.add_argument("--response", required=True, help="response key, e.g. sech2, gamma:0.5, pow:s2:0.5")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="Poisson intensity")


def _out_flag(p):
    p.add_argument("--out", help="write the JSON report here (default: stdout)")


def build_parser():
    top = _Parser(prog="shotnoise", description="Poisson shot-noise transforms and their fixed points.")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="Monte Carlo shot-noise samples")
    _model_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--trunc-eps", type=float, default=1e-8)
    p.add_argument("--horizon", type=float, help="arrival horizon T (required for infinite-mean input)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", required=True)

    v = sub.add_parser("verify", help="numerical checks of fixed-point identities")
    checks = v.add_subparsers(dest="check", required=True, parser_class=_Parser)

    c = checks.add_parser("fixed-point", help="LST residuals of the fixed-point equation")
    _model_flags(c)
    c.add_argument("--tol", type=float, default=1e-6)
    c.add_argument("--s-min", type=float, default=1e-3)
    c.add_argument("--s-max", type=float, default=10.0)
    c.add_argument("--s-n", type=int, default=50)
    _out_flag(c)

    c = checks.add_parser("levy", help="Levy tail M(x, inf) on a set of points")
    _model_flags(c)
    c.add_argument("--x", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    c.add_argument("--oracle", choices=("none", "e1"), default="none",
                   help="compare against E1(x) (Exp(1) input, exponential response)")
    c.add_argument("--tol", type=float, default=1e-8)
    _out_flag(c)

    for name, text in (("steutel", "Steutel convolution identity"),
                       ("feature", "Levy first-moment identity against the mixing measure")):
        c = checks.add_parser(name, help=text)
        _model_flags(c)
        c.add_argument("--upper", type=float, default=4.0)
        c.add_argument("--step", type=float, default=1e-3)
        c.add_argument("--factor", type=float, default=5.0, help="bound = factor * step")
        if name == "feature":
            c.add_argument("--nu", help="mixing measure key (default: dual of the response)")
        _out_flag(c)

    c = checks.add_parser("perpetuity", help="perpetuity terminal law against a target law")
    c.add_argument("--nu", required=True, help="mixing measure, e.g. nu-beta:1,0.5")
    c.add_argument("--base", required=True, help="law of eta, e.g. gamma:0.5,2")
    c.add_argument("--target", required=True, help="expected terminal law, e.g. gamma:1.5,2")
    c.add_argument("--steps", type=int, default=200)
    c.add_argument("--n", type=int, default=100_000)
    c.add_argument("--seed", type=int, default=42)
    c.add_argument("--alpha", type=float, default=0.01)
    c.add_argument("--sample-out", help="also write the terminal sample as CSV")
    _out_flag(c)

    c = checks.add_parser("sd-logconvex", help="log-convexity probe of a response")
    c.add_argument("--response", required=True)
    c.add_argument("--u-max", type=float, default=5.0)
    c.add_argument("--points", type=int, default=101)
    c.add_argument("--expect", choices=("log-convex", "log-concave", "log-linear", "mixed"))
    _out_flag(c)

    c = checks.add_parser("atom", help="interior root of exp(-b(1 - z)) = z")
    c.add_argument("--b", type=float, required=True)
    _out_flag(c)

    r = sub.add_parser("repro", help="run the acceptance targets")
    r.add_argument("targets", nargs="*", help=f"subset of: {', '.join(repro.TARGETS)}")
    r.add_argument("--out", help="write the JSON summary here")
    r.add_argument("--table", help="write a CSV summary table here")
    return top


# ---------------------------------------------------------------------------

def _emit(report, out):
    if out:
        io.write_json(out, report)
    else:
        sys.stdout.write(io.report_text(report))


def _config(args, horizon=None, trunc_eps=1e-8):
    h = response.make_response(args.response)
    return engine.SntConfig(args.lam, h, trunc_eps, horizon)


def cmd_simulate(args):
    if args.n < 1:
        raise engine.EngineError("--n must be at least 1")
    spec = dist.parse_dist(args.dist)
    cfg = _config(args, args.horizon, args.trunc_eps)
    smp = engine.sample_snt(spec, cfg, args.n, args.seed)
    if args.format == "csv":
        io.write_sample_csv(args.out, smp)
    else:
        io.write_json(args.out, {"command": "simulate", "seed": args.seed,
                                 "provenance": smp.provenance, "values": smp.values.tolist()})
    return EXIT_OK


def _verify_fixed_point(args):
    spec = dist.parse_dist(args.dist)
    cfg = _config(args)
    s = np.geomspace(args.s_min, args.s_max, args.s_n)
    recs = engine.lst_residual(spec, cfg, s)
    worst = engine.max_residual(recs)
    ok = worst <= args.tol
    return ok, {"check": "fixed-point", "dist": args.dist, "response": args.response,
                "lambda": args.lam, "tol": args.tol, "max_residual": worst, "pass": ok,
                "records": [r.as_dict() for r in recs]}


def _verify_levy(args):
    spec = dist.parse_dist(args.dist)
    tail = engine.LevyTail(spec, _config(args))
    xs = sorted(args.x)
    vals = [tail.value(x) for x in xs]
    ok = all(v >= 0 for v in vals) and all(a >= b for a, b in zip(vals, vals[1:]))
    rep = {"check": "levy", "dist": args.dist, "response": args.response, "lambda": args.lam,
           "x": xs, "levy_tail": vals, "monotone_nonnegative": ok}
    if args.oracle == "e1":
        errs = [abs(v - float(special.exp1(x))) for x, v in zip(xs, vals)]
        rep["oracle_abs_err"] = errs
        ok = ok and max(errs) <= args.tol
    rep["pass"] = ok
    return ok, rep


def _verify_identity(args):
    spec = dist.parse_dist(args.dist)
    tail = engine.LevyTail(spec, _config(args))
    grid = engine.uniform_grid(args.upper, args.step)
    if args.check == "steutel":
        res = engine.steutel_check(spec, tail, grid, args.factor)
    else:
        nu = response.make_mixing(args.nu) if args.nu else None
        res = engine.feature_check(spec, tail, nu, grid, args.factor)
    rep = {"dist": args.dist, "response": args.response, "lambda": args.lam, "step": args.step,
           "upper": args.upper}
    rep.update(res.as_dict())
    return res.passed, rep


def _verify_perpetuity(args):
    nu = response.make_mixing(args.nu)
    base = dist.parse_dist(args.base)
    want = dist.parse_dist(args.target)
    smp = fixed_point.perpetuity_sample(nu, base, args.steps, args.n, args.seed)
    if args.sample_out:
        io.write_sample_csv(args.sample_out, smp)
    try:
        ks = ks_one_sample(smp, want.cdf, args.alpha)
    except dist.SamplerOnlyError:
        ks = ks_two_sample(smp, dist.sample(want, args.n, args.seed + 1), args.alpha)
    return ks.passed, {"check": "perpetuity", "nu": args.nu, "base": args.base,
                       "target": args.target, "steps": args.steps, "ks": ks.as_dict(),
                       "pass": ks.passed}


def _verify_logconvex(args):
    h = response.make_response(args.response)
    probe = response.log_convexity_probe(h, np.linspace(0.0, args.u_max, args.points))
    ok = args.expect is None or probe.classification == args.expect
    return ok, {"check": "sd-logconvex", "response": args.response,
                "classification": probe.classification, "expect": args.expect,
                "max_second_difference": float(np.max(probe.second_differences)),
                "min_second_difference": float(np.min(probe.second_differences)), "pass": ok}


def _verify_atom(args):
    r = fixed_point.atom_solver(args.b)
    rep = {"check": "atom"}
    rep.update(r.as_dict())
    rep["pass"] = True
    return True, rep


VERIFY = {
    "fixed-point": _verify_fixed_point,
    "levy": _verify_levy,
    "steutel": _verify_identity,
    "feature": _verify_identity,
    "perpetuity": _verify_perpetuity,
    "sd-logconvex": _verify_logconvex,
    "atom": _verify_atom,
}


def cmd_verify(args):
    ok, rep = VERIFY[args.check](args)
    _emit(rep, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_repro(args):
    try:
        results = repro.run(args.targets)
    except KeyError as exc:
        print(f"shotnoise repro: {exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    for r in results:
        print(r.line())
    if args.table:
        io.write_csv(args.table, ("criterion", "name", "pass", "seconds"),
                     [(r.number, r.name, r.passed, r.seconds) for r in results])
    report = {"command": "repro", "results": [r.as_dict() for r in results],
              "pass": all(r.passed for r in results)}
    if args.out:
        io.write_json(args.out, report)
    return EXIT_OK if report["pass"] else EXIT_FAIL


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "repro": cmd_repro}

# domain rejections (exit 3) as opposed to numerical failures
_INVALID = (response.ResponseError, dist.DistError, engine.EngineError)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except _INVALID as exc:
        print(f"shotnoise: rejected: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except QuadratureError as exc:
        print(f"shotnoise: quadrature failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
