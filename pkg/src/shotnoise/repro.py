"""Named reproduction targets, one per acceptance criterion.

Each target returns a :class:`CriterionResult`. Statistical targets use
fixed seeds, so repeated runs give identical results.
"""

from __future__ import annotations

import math
import os
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy import stats as sps

from . import distributions as dist
from . import engine, fixed_point, io, response
from .stats import empirical_lst, ks_one_sample, ks_two_sample

SEED = 42
DIRECT_SEED = 4242


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name} ({self.seconds:.1f}s)"

    def as_dict(self):
        return {"criterion": self.number, "name": self.name, "pass": self.passed,
                "seconds": self.seconds, "detail": self.detail}


TARGETS = {}


def target(number, name):
    def wrap(fn):
        def run():
            t0 = time.perf_counter()
            passed, detail = fn()
            return CriterionResult(number, name, bool(passed), detail, time.perf_counter() - t0)
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        TARGETS[name] = (number, run)
        return run
    return wrap


def _max_res(spec, lam, h, s=engine.STANDARD_S_GRID):
    return engine.max_residual(engine.lst_residual(spec, engine.SntConfig(lam, h), s))


@target(1, "gamma-fixed-point")
def gamma_fixed_point():
    """Gamma(alpha, 1/alpha) is fixed by the gamma-family response, lambda = 1."""
    detail, ok = {}, True
    for a in (0.5, 1.0, 2.0):
        t0 = time.perf_counter()
        res = _max_res(dist.Gamma(a, 1.0 / a), 1.0, response.gamma_family(a))
        secs = time.perf_counter() - t0
        detail[f"alpha={a:g}"] = {"max_residual": res, "seconds": secs}
        ok &= res <= 1e-6 and secs < 10.0
    return ok, detail


@target(2, "sech2-closed-form")
def sech2_closed_form():
    """Numeric inversion of the alpha = 1/2 gamma-family response equals 1/cosh(u)**2."""
    u = np.linspace(0.0, 10.0, 100)
    diff = float(np.max(np.abs(response.gamma_family(0.5).eval(u) - 1.0 / np.cosh(u) ** 2)))
    return diff <= 1e-10, {"max_abs_diff": diff, "n": int(u.size)}


def mc_sample(seed=SEED, n=200_000):
    cfg = engine.SntConfig(1.0, response.sech2())
    return engine.sample_snt(dist.Gamma(0.5, 0.5), cfg, n, seed)


@target(3, "mc-fixed-point")
def mc_fixed_point():
    """Shot noise of Gamma(1/2, 1/2) marks under sech**2 is again Gamma(1/2, 1/2)."""
    s = mc_sample()
    rep = ks_one_sample(s, sps.gamma(0.5, scale=0.5).cdf, 0.01)
    return rep.passed, rep.as_dict()


@target(4, "exponential-family")
def exponential_family():
    """Exponential response: Exp fixed point, Linnik fixed point, tail series, negative control."""
    h = response.exponential()
    r1 = _max_res(dist.Gamma(1.0, 2.0), 1.0, h)
    r2 = _max_res(dist.PositiveLinnik(0.5, 2.0), 0.5, h)
    ml = float(dist.mittag_leffler_tail(1.0, 0.5, 1.0))
    oracle = float(special.erfcx(1.0))  # E_{1/2}(-z) = exp(z**2) erfc(z)
    neg = engine.lst_residual(dist.Gamma(1.0, 1.0), engine.SntConfig(2.0, h), [1.0])[0].residual
    ok = r1 <= 1e-6 and r2 <= 1e-5 and abs(ml - oracle) <= 1e-8 and neg >= 1e-2
    return ok, {"exp_residual": r1, "linnik_residual": r2, "ml_tail": ml,
                "ml_oracle": oracle, "negative_control_residual": neg}


@target(5, "s2-family")
def s2_family():
    """S2 and S2-rho fixed points and the monotone S2 Levy k-function."""
    h = response.s2_family()
    detail, ok = {}, True
    for d in (1.0, 2.0):
        r = _max_res(dist.S2(d), 1.0, h)
        detail[f"s2 delta={d:g}"] = r
        ok &= r <= 1e-5
    r = _max_res(dist.S2Rho(2.0, 0.5), 1.0, response.power_transform(h, 0.5))
    detail["s2rho delta=2 rho=0.5"] = r
    ok &= r <= 1e-5
    k = dist.s2_levy_k(2.0, np.geomspace(1e-3, 5.0, 50))
    dec = bool(np.all(np.diff(k) < 0))
    detail["k_strictly_decreasing"] = dec
    return ok and dec, detail


@target(6, "iteration")
def iteration():
    """LST iteration from exp(-s/4) under sech**2 converges to the Gamma(1/2, 1/2) LST."""
    cfg = engine.SntConfig(1.0, response.sech2())
    m = 0.25
    g, tr = fixed_point.iterate(cfg, m, 50, tol=0.0)
    target_lst = dist.Gamma(0.5, 0.5).lst(g.s_values)
    sup = float(np.max(np.abs(g.phi_values - target_lst)))
    mean = fixed_point.mean_estimate(g)
    g2, _ = fixed_point.iterate(cfg, m, 50, start=dist.Gamma(2.0, m / 2.0).lst, tol=0.0)
    uniq = float(np.max(np.abs(g.phi_values - g2.phi_values)))
    ok = (tr.min_increment >= -1e-12 and sup <= 1e-4 and abs(mean - m) <= 0.01 * m
          and uniq <= 1e-5)
    return ok, {"min_increment": tr.min_increment, "sup_to_gamma": sup, "mean_estimate": mean,
                "uniqueness_gap": uniq, "final_m_metric": tr.records[-1].m_metric}


def perpetuity_pair(alpha, seed=SEED):
    p = fixed_point.perpetuity_sample(response.MixingMeasure.beta1(alpha),
                                      dist.Gamma(alpha, 1.0 / alpha), 200, 100_000, seed)
    q = dist.sample(dist.Gamma(1.0 + alpha, 1.0 / alpha), 100_000, DIRECT_SEED)
    return p, q


@target(7, "perpetuity")
def perpetuity():
    """Perpetuity with Beta(1, alpha) multipliers reproduces Gamma(1 + alpha, 1/alpha)."""
    detail, ok = {}, True
    for a in (0.5, 1.0):
        rep = ks_two_sample(*perpetuity_pair(a), 0.01)
        detail[f"alpha={a:g}"] = rep.as_dict()
        ok &= rep.passed
    return ok, detail


@target(8, "subordination")
def subordination():
    """Stable subordination composes the base LST with s**alpha."""
    base = dist.Gamma(0.5, 0.5)
    spec = dist.StableSubordinated(base, 0.5)
    smp = dist.sample(spec, 100_000, SEED)
    detail, ok = {}, True
    for s in (0.25, 1.0, 4.0):
        v, se = empirical_lst(smp, s)
        exact = float(base.lst(s ** 0.5))
        detail[f"s={s:g}"] = {"empirical": v, "stderr": se, "exact": exact,
                              "z": abs(v - exact) / se}
        ok &= abs(v - exact) <= 4.0 * se
    return ok, detail


@target(9, "levy-identities")
def levy_identities():
    """Levy tail equals E1 for Exp(1); Steutel and feature identities on [0, 4]."""
    cfg_exp = engine.SntConfig(1.0, response.exponential())
    lt = engine.LevyTail(dist.Gamma(1.0, 1.0), cfg_exp)
    e1 = {x: abs(lt.value(x) - float(special.exp1(x))) for x in (0.5, 1.0, 2.0)}
    detail = {"e1_abs_err": {f"{k:g}": v for k, v in e1.items()}}
    ok = max(e1.values()) <= 1e-8
    grid = engine.uniform_grid(4.0, 1e-3)
    for label, spec, cfg in (("exp", dist.Gamma(1.0, 1.0), cfg_exp),
                             ("gamma-half", dist.Gamma(0.5, 0.5),
                              engine.SntConfig(1.0, response.sech2()))):
        tail = engine.LevyTail(spec, cfg)
        st = engine.steutel_check(spec, tail, grid)
        ft = engine.feature_check(spec, tail, None, grid)
        detail[label] = {"steutel": st.as_dict(), "feature": ft.as_dict()}
        ok &= st.passed and ft.passed
    return ok, detail


@target(10, "sd-counterexample")
def sd_counterexample():
    """sech**2 is log-concave yet its fixed point is a (selfdecomposable) gamma law."""
    probe = response.log_convexity_probe(response.sech2(), np.linspace(0.0, 5.0, 101))
    concave = bool(np.all(probe.second_differences < 0))
    mc = mc_fixed_point()
    return concave and mc.passed, {"log_concave": concave, "classification": probe.classification,
                                   "max_second_difference": float(np.max(probe.second_differences)),
                                   "mc_fixed_point": mc.detail}


def atom_oracle(b):
    # independent route: z = -W(-b exp(-b)) / b on the principal branch
    return float((-special.lambertw(-b * math.exp(-b)) / b).real)


@target(11, "atom")
def atom():
    """Interior root of exp(-b(1 - z)) = z for b = 2; none for b in {0.5, 1}."""
    r = fixed_point.atom_solver(2.0)
    oracle = atom_oracle(2.0)
    none = [fixed_point.atom_solver(b).root is None for b in (0.5, 1.0)]
    ok = r.root is not None and abs(r.root - oracle) <= 1e-9 and all(none)
    return ok, {"root": r.root, "oracle": oracle, "no_root_b_0.5": none[0], "no_root_b_1": none[1]}


def _csv_bytes(sample):
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "s.csv")
        io.write_sample_csv(path, sample)
        with open(path, "rb") as fh:
            return fh.read()


@target(12, "determinism")
def determinism():
    """Same seeds give byte-identical CSV output for the Monte Carlo and perpetuity runs."""
    mc = _csv_bytes(mc_sample()) == _csv_bytes(mc_sample())
    perp = all(_csv_bytes(perpetuity_pair(a)[0]) == _csv_bytes(perpetuity_pair(a)[0])
               for a in (0.5, 1.0))
    return mc and perp, {"mc_identical": mc, "perpetuity_identical": perp}


def run(names=None):
    names = list(TARGETS) if not names else names
    unknown = [n for n in names if n not in TARGETS]
    if unknown:
        raise KeyError(f"unknown repro target(s): {', '.join(unknown)}")
    return [TARGETS[n][1]() for n in sorted(names, key=lambda n: TARGETS[n][0])]
