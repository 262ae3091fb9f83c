"""Response functions h and their dual mixing measures.

A response function is non-increasing and right-continuous on [0, inf) with
``h(+0) = h0 <= 1``. Every integral the engine needs has the form

    int_0^inf g(h(u)) du = int_(0, h0] g(z) kappa(dz),   g(0) = 0,

where ``kappa(dz) = -d h_inv(z)`` is the image of Lebesgue measure under h
(``h_inv`` the generalized inverse). ``kappa`` is stored as a density
``smooth(z) * (h0 - z) ** top`` or as a single atom, which keeps endpoint
singularities out of the quadrature. The mixing measure is
``nu(dz) = lam * z * kappa(dz)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from ._quad import QuadratureError, integrate_halving, integrate_measure, quad

__all__ = [
    "ResponseError",
    "ResponseFunction",
    "MixingMeasure",
    "ValidationReport",
    "LogConvexityReport",
    "gamma_family",
    "s2_family",
    "sech2",
    "exponential",
    "indicator",
    "from_function",
    "from_inverse",
    "make_response",
    "make_mixing",
    "power_transform",
    "to_mixing_measure",
    "from_mixing_measure",
    "validate",
    "log_convexity_probe",
    "nu_moment",
]

REGIME_TOL = 1e-6
PROBE_GRID = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 241)])


class ResponseError(ValueError):
    """Invalid response function, mixing measure, or parameter."""


# ---------------------------------------------------------------------------
# Mixing measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MixingMeasure:
    """Probability law of the perpetuity multiplier on (0, b].

    ``density(z) * (b - z) ** top`` is the density; ``atom`` replaces it for
    a point mass.
    """

    name: str
    b: float
    density: Optional[Callable[[float], float]] = None
    top: float = 0.0
    atom: Optional[float] = None
    params: tuple = ()
    _draw: Optional[Callable] = field(default=None, repr=False)

    def pdf(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.atom is not None:
            raise ResponseError("point mass has no density")
        inside = (z > 0) & (z < self.b)
        out = np.zeros(z.shape)
        zi = z[inside]
        out[inside] = np.array([self.density(v) for v in zi]) * (self.b - zi) ** self.top
        return out

    def integrate(self, g, lower=0.0, upper=None):
        """Integral of ``g`` against the measure over ``(lower, upper]``."""
        if self.atom is not None:
            hi = self.b if upper is None else upper
            return g(self.atom) if lower < self.atom <= hi else 0.0
        return integrate_measure(lambda z: g(z) * self.density(z), self.b, self.top, lower, upper)

    def mass(self):
        return self.integrate(lambda z: 1.0)

    def mean(self):
        return self.integrate(lambda z: z)

    def draw(self, rng, n):
        if self.atom is not None:
            return np.full(n, self.atom)
        if self._draw is not None:
            return self._draw(rng, n)
        return self._inverse_cdf_table()(rng.random(n))

    @cached_property
    def _cdf_nodes(self):
        z = np.concatenate([np.geomspace(1e-12 * self.b, 0.5 * self.b, 400),
                            self.b - np.geomspace(0.5 * self.b, 1e-13 * self.b, 400)[1:]])
        pieces = [self.integrate(lambda t: 1.0, 0.0, z[0])]
        pieces += [self.integrate(lambda t: 1.0, lo, hi) for lo, hi in zip(z[:-1], z[1:])]
        cdf = np.cumsum(pieces)
        return np.concatenate([[0.0], z, [self.b]]), np.concatenate([[0.0], cdf / cdf[-1], [1.0]])

    def _inverse_cdf_table(self):
        z, cdf = self._cdf_nodes
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        return lambda u: np.interp(u, cdf[keep], z[keep])

    def is_valid(self, tol=1e-6):
        if self.atom is not None:
            return 0.0 < self.atom <= self.b <= 1.0 and self.atom != 1.0
        return 0.0 < self.b <= 1.0 and abs(self.mass() - 1.0) <= tol

    @classmethod
    def beta1(cls, alpha):
        """Beta(1, alpha): density ``alpha * (1 - z) ** (alpha - 1)``."""
        if not alpha > 0:
            raise ResponseError(f"Beta(1, alpha) needs alpha > 0, got {alpha}")
        a = float(alpha)
        return cls(f"nu-beta:1,{a:g}", 1.0, lambda z: a, a - 1.0, params=(1.0, a),
                   _draw=lambda rng, n: rng.beta(1.0, a, n))

    @classmethod
    def uniform(cls):
        return cls("nu-uniform", 1.0, lambda z: 1.0, 0.0,
                   _draw=lambda rng, n: rng.random(n))

    @classmethod
    def s2(cls):
        """Density ``z**-1/2 - 1`` on (0, 1), inverse CDF ``(1 - sqrt(1 - u))**2``."""
        return cls("nu-s2", 1.0, lambda z: z ** -0.5 - 1.0, 0.0,
                   _draw=lambda rng, n: (1.0 - np.sqrt(1.0 - rng.random(n))) ** 2)

    @classmethod
    def point(cls, z):
        if not 0.0 <= z <= 1.0:
            raise ResponseError(f"point mass location must lie in [0, 1], got {z}")
        return cls(f"nu-point:{z:g}", max(float(z), 0.0), atom=float(z))

    @classmethod
    def from_density(cls, density, b=1.0, top=0.0, name="nu-custom"):
        return cls(name, float(b), density, float(top))


def make_mixing(key: str) -> MixingMeasure:
    """Parse ``nu-beta:1,ALPHA``, ``nu-uniform``, ``nu-s2`` or ``nu-point:Z``."""
    head, _, rest = key.partition(":")
    if head == "nu-uniform":
        return MixingMeasure.uniform()
    if head == "nu-s2":
        return MixingMeasure.s2()
    if head == "nu-beta":
        one, _, alpha = rest.partition(",")
        if float(one) != 1.0:
            raise ResponseError("only Beta(1, alpha) mixing measures are supported")
        return MixingMeasure.beta1(float(alpha))
    if head == "nu-point":
        return MixingMeasure.point(float(rest))
    raise ResponseError(f"unknown mixing measure key {key!r}")


# ---------------------------------------------------------------------------
# Response functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ResponseFunction:
    """Non-increasing weight h on [0, inf).

    ``form`` is ``"closed"`` (``func`` evaluates h), ``"inverse"``
    (``inverse_func`` evaluates h_inv on (0, h0)) or ``"power"``
    (``base ** exponent``). ``jump`` and ``jump_top`` describe
    ``kappa = -d h_inv`` when known; ``atom = (z, mass)`` for step responses.
    """

    name: str
    form: str
    h0: float
    func: Optional[Callable] = None
    inverse_func: Optional[Callable] = None
    jump: Optional[Callable[[float], float]] = None
    jump_top: float = 0.0
    atom: Optional[tuple] = None
    base: Optional["ResponseFunction"] = None
    exponent: float = 1.0
    mixing_hint: Optional[MixingMeasure] = None
    indicator: bool = False

    # -- evaluation -------------------------------------------------------

    def __call__(self, u):
        return self.eval(u)

    def eval(self, u):
        u = np.asarray(u, dtype=np.float64)
        if self.form == "power":
            return self.base.eval(u) ** self.exponent
        if self.form == "closed":
            return np.asarray(self.func(u), dtype=np.float64)
        return self._invert(u)

    def inverse(self, x):
        """Generalized inverse ``inf{u : h(u) < x}`` for ``0 < x < h0``."""
        x = np.asarray(x, dtype=np.float64)
        if self.form == "power":
            return self.base.inverse(x ** (1.0 / self.exponent))
        if self.inverse_func is None:
            return self._numeric_inverse(x)
        return np.asarray(self.inverse_func(x), dtype=np.float64)

    def _invert(self, u, rtol=1e-12, max_iter=200):
        # h(u) = sup{x : h_inv(x) > u}; bisection in log x for relative accuracy
        lo = np.full(u.shape, math.log(1e-300))
        hi = np.full(u.shape, math.log(self.h0))
        beyond = ~(self.inverse(np.exp(lo)) > u)
        for _ in range(max_iter):
            if np.all(hi - lo <= rtol):
                break
            mid = 0.5 * (lo + hi)
            above = self.inverse(np.exp(mid)) > u
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        out = np.exp(0.5 * (lo + hi))
        out[u <= 0.0] = self.h0
        out[beyond & (u > 0.0)] = 0.0
        return out

    def _numeric_inverse(self, x, upper=1e300):
        if self.func is None:
            raise ResponseError(f"{self.name}: no evaluator for h")
        x = np.atleast_1d(x)
        lo = np.zeros(x.shape)
        hi = np.ones(x.shape)
        while np.any(grow := self.func(hi) >= x) and hi.max() < upper:
            hi = np.where(grow, hi * 2.0, hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            above = self.func(mid) >= x
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
            if np.all(hi - lo <= 1e-13 * np.maximum(hi, 1.0)):
                break
        return hi

    def fast(self, horizon=None):
        """Vectorized evaluator for bulk use on [0, horizon].

        Closed forms return themselves. Inverse forms are tabulated: h_inv is
        computed exactly on 2400 nodes uniform in logit(x), and the table is inverted by
        monotone cubic interpolation of log h against u.
        """
        if self.form == "closed":
            return self.func
        if self.form == "power":
            g = self.base.fast(horizon)
            e = self.exponent
            return lambda u: np.asarray(g(u)) ** e
        return self._table(horizon)

    def _table(self, horizon):
        horizon = 1e3 if horizon is None else horizon
        x_far = float(self._invert(np.array([horizon]))[0])
        lo = max(0.5 * x_far, 1e-300)
        b = self.h0
        # nodes uniform in logit(x / b): dense in the middle, geometric at both ends
        t = np.linspace(math.log(lo / b) - math.log1p(-lo / b), math.log(1e15), 2400)
        xs = b / (1.0 + np.exp(-t))
        us = np.maximum(self.inverse(xs), 0.0)
        us, first = np.unique(np.concatenate([[0.0], us]), return_index=True)
        lx = np.concatenate([[math.log(b)], np.log(xs)])[first]
        interp = PchipInterpolator(us, lx, extrapolate=True)
        umax = us[-1]

        def table(u):
            u = np.asarray(u, dtype=np.float64)
            return np.where(u <= umax, np.exp(interp(np.minimum(u, umax))), 0.0)

        return table

    # -- integrals --------------------------------------------------------

    @property
    def has_kappa(self):
        return self.jump is not None or self.atom is not None

    def integrate(self, g, lower=0.0, upper=None):
        """``int_(lower, upper] g(z) kappa(dz)``; equals ``int g(h(u)) du`` for full range."""
        if self.form == "power":
            e = self.exponent
            lo = lower ** (1.0 / e) if lower > 0 else 0.0
            hi = None if upper is None else upper ** (1.0 / e)
            return self.base.integrate(lambda z: g(z ** e), lo, hi)
        if self.atom is not None:
            z, mass = self.atom
            hi = self.h0 if upper is None else upper
            return g(z) * mass if lower < z <= hi else 0.0
        if self.jump is not None:
            jump = self.jump
            return integrate_measure(lambda z: g(z) * jump(z), self.h0, self.jump_top, lower, upper)
        return self._integrate_u(g, lower, upper)

    def _integrate_u(self, g, lower=0.0, upper=None):
        # u-form fallback for closed forms without a known inverse
        u0 = 0.0 if upper is None or upper >= self.h0 else float(self._numeric_inverse(np.array([upper]))[0])
        u1 = math.inf if lower <= 0.0 else float(self._numeric_inverse(np.array([lower]))[0])
        f = lambda u: g(float(self.func(np.array([u]))[0]))
        total, a, step = 0.0, u0, 1.0
        for _ in range(400):
            bnd = min(a + step, u1)
            c = quad(f, a, bnd)
            total += c
            if bnd >= u1 or (a > 1.0 and abs(c) <= 1e-16 * abs(total)):
                return total
            a, step = bnd, step * 2.0
        return math.inf

    @cached_property
    def integral_value(self):
        """``int_0^inf h(u) du``; ``math.inf`` when divergent."""
        if self.form == "power":
            return self.integrate(lambda z: z)
        if self.atom is not None:
            return self.atom[0] * self.atom[1]
        if self.jump is not None:
            jump = self.jump
            return integrate_halving(lambda z: z * jump(z), self.h0, self.jump_top)
        return self._integrate_u(lambda z: z)

    def integral(self):
        return self.integral_value

    def tail_integral(self, t):
        """``int_t^inf h(u) du``."""
        if t <= 0.0:
            return self.integral()
        ht = float(self.eval(np.array([t]))[0])
        if ht <= 0.0:
            return 0.0
        # mass of kappa strictly below h(t) sits beyond t; a flat piece at level
        # h(t) contributes (h_inv(h(t)) - t) * h(t)
        below = self.integrate(lambda z: z, 0.0, ht * (1.0 - 1e-15))
        if self.atom is not None or self.form == "power":
            flat = max(float(self.inverse(np.array([ht * (1.0 - 1e-15)]))[0]) - t, 0.0) * ht
            return below + flat
        return below

    def horizon(self, eps):
        """Smallest t (to 1e-9 relative) with ``tail_integral(t) <= eps * integral()``."""
        target = eps * self.integral()
        hi = 1.0
        while self.tail_integral(hi) > target:
            hi *= 2.0
            if hi > 1e15:
                raise ResponseError(f"{self.name}: truncation horizon beyond 1e15")
        lo = 0.0
        while hi - lo > 1e-9 * hi:
            mid = 0.5 * (lo + hi)
            if self.tail_integral(mid) > target:
                lo = mid
            else:
                hi = mid
        return hi


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def _scalar_map(f):
    def mapped(x):
        x = np.asarray(x, dtype=np.float64)
        return np.vectorize(f, otypes=[np.float64])(x)
    return mapped


def gamma_family(alpha: float) -> ResponseFunction:
    """h_inv(x) = alpha * int_x^1 z**-1 (1 - z)**(alpha - 1) dz; fixes gamma laws."""
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ResponseError(f"gamma family needs alpha > 0, got {alpha}")
    a = float(alpha)
    jump = lambda z: a / z

    def inv(x):
        if x >= 1.0:
            return 0.0
        if x <= 0.0:
            return math.inf
        return integrate_measure(jump, 1.0, a - 1.0, lower=x)

    return ResponseFunction(f"gamma:{a:g}", "inverse", 1.0, inverse_func=_scalar_map(inv),
                            jump=jump, jump_top=a - 1.0, mixing_hint=MixingMeasure.beta1(a))


def s2_family() -> ResponseFunction:
    """h_inv(x) = ln x + 2 x**-1/2 - 2 on (0, 1); fixes the S2 laws."""
    def inv(x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return np.where(x >= 1.0, 0.0, np.log(x) + 2.0 / np.sqrt(x) - 2.0)

    return ResponseFunction("s2", "inverse", 1.0, inverse_func=inv,
                            jump=lambda z: z ** -1.5 - 1.0 / z, mixing_hint=MixingMeasure.s2())


def sech2() -> ResponseFunction:
    """h(u) = 1 / cosh(u)**2, the alpha = 1/2 member of the gamma family."""
    def func(u):
        q = np.exp(-2.0 * np.asarray(u, dtype=np.float64))
        return 4.0 * q / (1.0 + q) ** 2

    def inv(x):
        x = np.asarray(x, dtype=np.float64)
        return np.arctanh(np.sqrt(np.clip(1.0 - x, 0.0, 1.0)))

    return ResponseFunction("sech2", "closed", 1.0, func=func, inverse_func=inv,
                            jump=lambda z: 0.5 / z, jump_top=-0.5,
                            mixing_hint=MixingMeasure.beta1(0.5))


def exponential() -> ResponseFunction:
    def inv(x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return np.where(x >= 1.0, 0.0, -np.log(x))

    return ResponseFunction("exp", "closed", 1.0, func=lambda u: np.exp(-np.asarray(u, dtype=np.float64)),
                            inverse_func=inv, jump=lambda z: 1.0 / z,
                            mixing_hint=MixingMeasure.uniform())


def indicator(a: float, level: float = 1.0) -> ResponseFunction:
    """``level * 1[0, a)``; constructed so validation can reject it."""
    if not a > 0:
        raise ResponseError(f"indicator length must be positive, got {a}")
    a, level = float(a), float(level)

    def inv(x):
        return np.where(np.asarray(x) < level, a, 0.0)

    return ResponseFunction(f"indicator:{a:g}", "closed", level,
                            func=lambda u: np.where(np.asarray(u) < a, level, 0.0),
                            inverse_func=inv, atom=(level, a), indicator=True)


def _check_monotone(h, grid=PROBE_GRID, tol=0.0):
    vals = h.eval(grid)
    if np.any(np.diff(vals) > tol):
        raise ResponseError(f"{h.name}: response is not non-increasing on the probe grid")
    return h


def from_function(func, h0=None, name="custom", inverse=None) -> ResponseFunction:
    """Closed-form response from a vectorized evaluator."""
    h0 = float(np.asarray(func(np.array([0.0])))[0]) if h0 is None else float(h0)
    h = ResponseFunction(name, "closed", h0, func=func, inverse_func=inverse)
    return _check_monotone(h)


def from_inverse(inverse, h0=1.0, name="custom-inverse", step=1e-6) -> ResponseFunction:
    """Response given by its generalized inverse on (0, h0).

    ``kappa`` is taken from a central-difference derivative of ``inverse``.
    """
    inv = np.vectorize(lambda x: float(inverse(x)), otypes=[np.float64])

    def jump(z):
        d = step * min(z, h0 - z, 1.0)
        if d <= 0.0:
            return 0.0
        return -(float(inverse(z + d)) - float(inverse(z - d))) / (2.0 * d)

    probe = np.geomspace(1e-6 * h0, h0 * (1 - 1e-6), 200)
    if np.any(np.diff(inv(probe)) > 0):
        raise ResponseError(f"{name}: inverse is not non-increasing on the probe grid")
    return ResponseFunction(name, "inverse", float(h0), inverse_func=inv, jump=jump)


def power_transform(h: ResponseFunction, gamma: float) -> ResponseFunction:
    """``h ** (1 / gamma)`` for ``gamma`` in (0, 1)."""
    if not 0.0 < gamma < 1.0:
        raise ResponseError(f"power transform needs gamma in (0, 1), got {gamma}")
    e = 1.0 / gamma
    return ResponseFunction(f"pow:{h.name}:{gamma:g}", "power", h.h0 ** e, base=h, exponent=e)


def make_response(key: str) -> ResponseFunction:
    """Build a response from its CLI key.

    Keys: ``gamma:ALPHA``, ``s2``, ``sech2``, ``exp``, ``indicator:A``,
    ``pow:BASE:GAMMA`` and any mixing-measure key (``nu-beta:1,ALPHA``,
    ``nu-uniform``, ``nu-s2``, ``nu-point:Z``), which goes through
    :func:`from_mixing_measure`.
    """
    key = key.strip()
    head, _, rest = key.partition(":")
    try:
        if head == "gamma":
            return gamma_family(float(rest))
        if head == "s2" and not rest:
            return s2_family()
        if head == "sech2" and not rest:
            return sech2()
        if head == "exp" and not rest:
            return exponential()
        if head == "indicator":
            return indicator(float(rest))
        if head == "pow":
            base, _, g = rest.rpartition(":")
            return power_transform(make_response(base), float(g))
        if head.startswith("nu-"):
            return from_mixing_measure(make_mixing(key))
    except ValueError as exc:
        if isinstance(exc, ResponseError):
            raise
        raise ResponseError(f"bad response key {key!r}: {exc}") from exc
    raise ResponseError(f"unknown response key {key!r}")


# ---------------------------------------------------------------------------
# duality with mixing measures
# ---------------------------------------------------------------------------

def to_mixing_measure(h: ResponseFunction, lam: float) -> MixingMeasure:
    """``nu(dz) = lam * z * kappa(dz)``; requires ``lam * int h = 1``."""
    if not lam > 0:
        raise ResponseError("lambda must be positive")
    total = lam * h.integral()
    if not abs(total - 1.0) <= REGIME_TOL:
        raise ResponseError(f"duality needs lambda * int h = 1, got {total:.12g}")
    if h.mixing_hint is not None and h.form != "power":
        return h.mixing_hint
    if h.atom is not None:
        return MixingMeasure.point(h.atom[0])
    if h.form == "power":
        return _power_mixing(h, lam)
    if h.jump is None:
        raise ResponseError(f"{h.name}: h_inv derivative unavailable; no mixing density")
    jump = h.jump
    return MixingMeasure.from_density(lambda z: lam * z * jump(z), h.h0, h.jump_top,
                                      name=f"nu-of:{h.name}")


def _power_mixing(h, lam):
    # kappa_e(dz) = kappa_base(d z**(1/e)); density picks up (1/e) z**(1/e - 1)
    base, e = h.base, h.exponent
    if base.jump is None or base.h0 != 1.0:
        raise ResponseError(f"{h.name}: mixing density needs a base with known kappa and h0 = 1")
    g, top, jump = 1.0 / e, base.jump_top, base.jump

    def dens(z):
        y = z ** g
        if top == 0.0:
            ratio = 1.0
        elif z >= 1.0:
            ratio = g ** top
        else:
            ratio = (math.expm1(g * math.log(z)) / math.expm1(math.log(z))) ** top
        return lam * z * jump(y) * g * y / z * ratio

    return MixingMeasure.from_density(dens, 1.0, top, name=f"nu-of:{h.name}")


def from_mixing_measure(nu: MixingMeasure) -> ResponseFunction:
    """Response with ``h_inv(x) = int_x^b z**-1 nu(dz)``; ``int h = 1``."""
    if nu.atom is not None:
        if nu.atom <= 0.0:
            raise ResponseError("point mass at 0 defines no response function")
        c = nu.atom
        return ResponseFunction(f"{nu.name}", "closed", c,
                                func=lambda u: np.where(np.asarray(u) < 1.0 / c, c, 0.0),
                                inverse_func=lambda x: np.where(np.asarray(x) < c, 1.0 / c, 0.0),
                                atom=(c, 1.0 / c), mixing_hint=nu, indicator=True)
    dens = nu.density
    jump = lambda z: dens(z) / z

    def inv(x):
        if x >= nu.b:
            return 0.0
        if x <= 0.0:
            return math.inf
        cut = 1e-3 * nu.b
        if x >= cut:
            return integrate_measure(jump, nu.b, nu.top, lower=x)
        # in log z the integrand is the density itself, so z**-1 cannot overflow
        head = quad(lambda t: dens(math.exp(t)) * (nu.b - math.exp(t)) ** nu.top,
                    math.log(x), math.log(cut))
        return head + integrate_measure(jump, nu.b, nu.top, lower=cut)

    h = ResponseFunction(f"{nu.name}", "inverse", nu.b, inverse_func=_scalar_map(inv),
                         jump=jump, jump_top=nu.top, mixing_hint=nu)
    total = h.integral()
    if not abs(total - 1.0) <= REGIME_TOL:
        raise QuadratureError(f"{nu.name}: int h = {total:.12g}, expected 1")
    return h


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    name: str
    monotone: bool
    h0_ok: bool
    indicator: bool
    integral: float
    lam: float
    regime: str
    messages: tuple

    @property
    def ok(self):
        return self.monotone and self.h0_ok and not self.indicator and self.regime != "divergent"

    def as_dict(self):
        return {"response": self.name, "monotone": self.monotone, "h0_ok": self.h0_ok,
                "indicator": self.indicator, "integral": self.integral, "lambda": self.lam,
                "regime": self.regime, "ok": self.ok, "messages": list(self.messages)}


def validate(h: ResponseFunction, lam: float) -> ValidationReport:
    """Condition A checks plus the ``lam * int h`` regime.

    Regimes: ``"=1"`` (finite-mean fixed points), ``">1"`` (no fixed point),
    ``"<1"`` (only residual checks apply), ``"divergent"``.
    """
    msgs = []
    vals = h.eval(PROBE_GRID)
    tol = 0.0 if h.form == "closed" else 1e-12
    monotone = bool(np.all(np.diff(vals) <= tol)) and bool(np.all(vals >= 0))
    if not monotone:
        msgs.append("Condition A: h must be non-increasing and non-negative")
    h0_ok = 0.0 < h.h0 <= 1.0
    if not h0_ok:
        msgs.append("Condition A: h(+0) must lie in (0, 1]")
    shaped = h.indicator or bool(np.all((vals == 0.0) | (vals == h.h0)))
    if shaped:
        msgs.append("Condition A: h must not be of the form 1[0, a) (indicator-shaped)")
    try:
        total = h.integral()
    except QuadratureError:
        total = math.inf
    if not math.isfinite(total):
        regime = "divergent"
        msgs.append("int h diverges")
    else:
        v = lam * total
        if abs(v - 1.0) <= REGIME_TOL:
            regime = "=1"
        elif v > 1.0:
            regime = ">1"
            msgs.append("lambda * int h > 1: no fixed points exist")
        else:
            regime = "<1"
    return ValidationReport(h.name, monotone, h0_ok, shaped, total, float(lam), regime, tuple(msgs))


@dataclass(frozen=True)
class LogConvexityReport:
    grid: np.ndarray
    second_differences: np.ndarray
    classification: str

    def as_dict(self):
        return {"grid": self.grid.tolist(), "second_differences": self.second_differences.tolist(),
                "classification": self.classification}


def log_convexity_probe(h: ResponseFunction, grid, tol=1e-9) -> LogConvexityReport:
    """Three-point second differences of ``ln h`` at interior grid points.

    A three-point grid gives one difference. Non-uniform grids use the
    divided-difference form ``2 [f1 - f0)/d0 - (f0 - f_1)/d1] / (d0 + d1)``.
    """
    u = np.sort(np.asarray(grid, dtype=np.float64))
    if u.size < 3:
        raise ResponseError("log-convexity probe needs at least three grid points")
    vals = h.eval(u)
    if np.any(vals <= 0):
        bad = u[vals <= 0]
        raise ResponseError(f"h vanishes at grid points {bad.tolist()}")
    f = np.log(vals)
    d0, d1 = np.diff(u)[:-1], np.diff(u)[1:]
    sd = 2.0 * ((f[2:] - f[1:-1]) / d1 - (f[1:-1] - f[:-2]) / d0) / (d0 + d1)
    if np.all(np.abs(sd) <= tol):
        label = "log-linear"
    elif np.all(sd > tol):
        label = "log-convex"
    elif np.all(sd < -tol):
        label = "log-concave"
    else:
        label = "mixed"
    return LogConvexityReport(u, sd, label)


def nu_moment(nu: MixingMeasure, eps: float) -> float:
    """``int z**-eps nu(dz)``; ``math.inf`` when it diverges."""
    if not 0.0 < eps <= 1.0:
        raise ResponseError(f"eps must lie in (0, 1], got {eps}")
    if nu.atom is not None:
        return nu.atom ** -eps if nu.atom > 0 else math.inf
    dens = nu.density
    return integrate_halving(lambda z: z ** -eps * dens(z), nu.b, nu.top)
