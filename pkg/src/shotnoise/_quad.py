"""Adaptive quadrature helpers on top of QUADPACK.

All measures in this package live on (0, b] and have densities of the form
``smooth(z) * (b - z) ** top``. Integrals are taken in ``w = sqrt(z)`` so that
``z ** -1/2`` type singularities at the origin disappear, and the algebraic
factor at the top end is handed to QUADPACK's QAWS rule.
"""

import math
import warnings

import numpy as np
from scipy import integrate as _si

EPSABS = 1e-14
EPSREL = 1e-11
LIMIT = 1000


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach its tolerance."""


def quad(f, a, b, *, epsabs=EPSABS, epsrel=EPSREL, limit=LIMIT, **kwargs):
    """``scipy.integrate.quad`` that raises instead of warning on failure."""
    if a == b:
        return 0.0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", _si.IntegrationWarning)
        val, err = _si.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit, **kwargs)[:2]
    if not math.isfinite(val):
        raise QuadratureError(f"non-finite integral on [{a}, {b}]")
    if caught and err > 1e-7 * max(1.0, abs(val)):
        raise QuadratureError(f"quadrature on [{a}, {b}] did not converge (err {err:.3g})")
    return val


def integrate_measure(f, b, top=0.0, lower=0.0, upper=None):
    """Integral of ``f(z) * (b - z) ** top`` over ``(lower, upper]``.

    ``f`` must stay finite at ``z = b`` when ``top != 0``; it may blow up at
    ``z = 0`` as long as ``f(z) * sqrt(z)`` stays bounded.
    """
    upper = b if upper is None else min(upper, b)
    if upper <= lower:
        return 0.0
    total = 0.0
    # Wide dynamic range near the origin: integrate in log z there.
    if lower > 0.0 and lower < 1e-3 * upper:
        cut = 1e-3 * upper
        total += quad(lambda t: f(math.exp(t)) * math.exp(t) * (b - math.exp(t)) ** top,
                      math.log(lower), math.log(cut))
        lower = cut

    wl, wu, wb = math.sqrt(lower), math.sqrt(upper), math.sqrt(b)
    if top == 0.0:
        return total + quad(lambda w: 2.0 * w * f(w * w), wl, wu)
    if upper < b:
        return total + quad(lambda w: 2.0 * w * f(w * w) * (b - w * w) ** top, wl, wu)
    wm = 0.5 * (wl + wb)
    total += quad(lambda w: 2.0 * w * f(w * w) * (b - w * w) ** top, wl, wm)
    total += quad(lambda w: 2.0 * w * f(w * w) * (wb + w) ** top, wm, wb,
                  weight="alg", wvar=(0.0, top))
    return total


def integrate_halving(f, b, top=0.0, *, max_panels=1100, blowup=1e12):
    """Integral of ``f(z) (b - z)**top`` on (0, b] by dyadic panels toward 0.

    Returns ``math.inf`` when panel contributions stop shrinking or the
    partial sums exceed ``blowup``. A stable contraction ratio between
    consecutive panels is extrapolated geometrically.
    """
    total = integrate_measure(f, b, top, lower=0.5 * b)
    hi = 0.5 * b
    prev = None
    ratios = []
    for _ in range(max_panels):
        lo = 0.5 * hi
        if lo == 0.0:
            break
        c = quad(lambda z: f(z) * (b - z) ** top, lo, hi)
        total += c
        hi = lo
        if total > blowup:
            return math.inf
        if c <= 1e-16 * abs(total):
            return total
        if prev:
            ratios.append(c / prev)
        prev = c
        if len(ratios) >= 12:
            recent = ratios[-6:]
            if max(recent) - min(recent) < 1e-6:
                r = recent[-1]
                if r >= 1.0 - 1e-6:
                    return math.inf
                return total + c * r / (1.0 - r)
    return total


def gauss_legendre_panels(edges, order=16):
    """Nodes and weights of composite Gauss-Legendre on consecutive ``edges``."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, dtype=np.float64)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (hi - lo) * x[None, :] + 0.5 * (hi + lo)
    weights = 0.5 * (hi - lo) * w[None, :]
    return nodes.ravel(), weights.ravel()
